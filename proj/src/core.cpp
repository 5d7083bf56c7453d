#include "dockd/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dockd/text.hpp"

namespace dockd {
namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void check_index(std::size_t idx, std::size_t n, const std::string& what) {
  if (idx >= n) {
    throw DocumentError(what + " references word index " +
                        std::to_string(idx) + " but document has " +
                        std::to_string(n) + " words");
  }
}

}  // namespace

BBox::BBox(double x0, double y0, double x1, double y1)
    : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (!in_unit(x0) || !in_unit(y0) || !in_unit(x1) || !in_unit(y1)) {
    throw DocumentError("bounding box coordinates must be finite and in [0,1]");
  }
  if (x0 > x1 || y0 > y1) {
    throw DocumentError("bounding box requires x0 <= x1 and y0 <= y1");
  }
}

Word::Word(std::string text, BBox box) : text_(std::move(text)), box_(box) {
  if (text_.empty()) throw DocumentError("word text must be non-empty");
  if (text_.find('\n') != std::string::npos ||
      text_.find('\r') != std::string::npos) {
    throw DocumentError("word text must not contain newlines");
  }
}

Document::Document(std::string id, std::vector<Word> words,
                   std::vector<KVPair> kv_pairs,
                   std::vector<TableRegion> tables,
                   std::vector<HeadingRange> headings)
    : id_(std::move(id)),
      words_(std::move(words)),
      kv_pairs_(std::move(kv_pairs)),
      tables_(std::move(tables)),
      headings_(std::move(headings)) {
  if (id_.empty()) throw DocumentError("document id must be non-empty");
  const std::size_t n = words_.size();
  const std::string where = "document '" + id_ + "': ";

  std::set<std::size_t> kv_seen;
  for (const auto& kv : kv_pairs_) {
    if (kv.key_word_indices.empty() || kv.value_word_indices.empty()) {
      throw DocumentError(where + "KV pair needs non-empty key and value");
    }
    std::set<std::size_t> own;
    for (auto idx : kv.key_word_indices) {
      check_index(idx, n, where + "KV key");
      own.insert(idx);
    }
    for (auto idx : kv.value_word_indices) {
      check_index(idx, n, where + "KV value");
      if (own.count(idx)) {
        throw DocumentError(where + "KV key and value share word index " +
                            std::to_string(idx));
      }
      own.insert(idx);
    }
    if (own.size() != kv.key_word_indices.size() + kv.value_word_indices.size()) {
      throw DocumentError(where + "KV pair lists a word index twice");
    }
    for (auto idx : own) {
      if (!kv_seen.insert(idx).second) {
        throw DocumentError(where + "word index " + std::to_string(idx) +
                            " belongs to more than one KV pair");
      }
    }
  }

  for (const auto& table : tables_) {
    std::size_t width = table.rows.empty() ? 0 : table.rows.front().size();
    for (const auto& row : table.rows) {
      if (row.size() != width) {
        throw DocumentError(where + "table rows differ in cell count");
      }
      for (const auto& cell : row) {
        for (auto idx : cell) check_index(idx, n, where + "table cell");
      }
    }
  }

  for (const auto& h : headings_) {
    if (h.begin >= h.end || h.end > n) {
      throw DocumentError(where + "heading range [" + std::to_string(h.begin) +
                          "," + std::to_string(h.end) + ") is invalid");
    }
  }
}

QAPair make_qa_pair(std::string question, std::string answer) {
  if (text::trim_view(question).empty() || text::trim_view(answer).empty()) {
    throw ArgumentError("QA pair needs non-empty question and answer");
  }
  return QAPair{std::move(question), std::move(answer)};
}

EntityRecord make_entity(std::string field, std::string value,
                         EntityKind kind) {
  if (text::trim_view(field).empty() || text::trim_view(value).empty()) {
    throw ArgumentError("entity needs non-empty field and value");
  }
  return EntityRecord{std::move(field), std::move(value), kind};
}

ClassLabelSet make_label_set(std::string description,
                             std::vector<std::string> positives,
                             std::vector<std::string> negatives) {
  if (positives.empty()) {
    throw ArgumentError("label set needs at least one positive label");
  }
  std::set<std::string> pos_keys;
  for (const auto& p : positives) pos_keys.insert(text::normalize_key(p));
  std::erase_if(negatives, [&](const std::string& n) {
    return pos_keys.count(text::normalize_key(n)) > 0;
  });
  return ClassLabelSet{std::move(description), std::move(positives),
                       std::move(negatives), {}};
}

TaskSample make_task_sample(std::string doc_id, TaskKind task,
                            std::string prompt, std::string answer,
                            std::map<std::string, std::string> meta) {
  if (!prompt.starts_with("Document:")) {
    throw ArgumentError("task prompt must begin with \"Document:\"");
  }
  if (!answer.starts_with("Answer:")) {
    throw ArgumentError("task answer must begin with \"Answer:\"");
  }
  return TaskSample{std::move(doc_id), task, std::move(prompt),
                    std::move(answer), std::move(meta)};
}

std::string to_string(EntityKind kind) {
  return kind == EntityKind::kv ? "kv" : "regular";
}

EntityKind entity_kind_from_string(const std::string& s) {
  if (s == "kv") return EntityKind::kv;
  if (s == "regular") return EntityKind::regular;
  throw ArgumentError("unknown entity kind '" + s + "'");
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::vqa:
      return "vqa";
    case TaskKind::entity:
      return "entity";
    case TaskKind::classify:
      return "classify";
  }
  return "vqa";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "vqa") return TaskKind::vqa;
  if (s == "entity" || s == "entities") return TaskKind::entity;
  if (s == "classify" || s == "classes") return TaskKind::classify;
  throw ArgumentError("unknown task '" + s + "'");
}

std::string raw_text(const Document& doc) {
  std::string out;
  for (const auto& w : doc.words()) {
    if (!out.empty()) out += ' ';
    out += w.text();
  }
  return out;
}

std::string text_without_kv(const Document& doc) {
  std::vector<bool> drop(doc.words().size(), false);
  for (const auto& kv : doc.kv_pairs()) {
    for (auto i : kv.key_word_indices) drop[i] = true;
    for (auto i : kv.value_word_indices) drop[i] = true;
  }
  std::string out;
  for (std::size_t i = 0; i < doc.words().size(); ++i) {
    if (drop[i]) continue;
    if (!out.empty()) out += ' ';
    out += doc.words()[i].text();
  }
  return out;
}

std::string kv_span(const Document& doc, const KVPair& kv) {
  std::string inner;
  auto add = [&](std::size_t i) {
    if (!inner.empty()) inner += ' ';
    inner += doc.words().at(i).text();
  };
  for (auto i : kv.key_word_indices) add(i);
  for (auto i : kv.value_word_indices) add(i);
  return "<kv>" + inner + "</kv>";
}

std::string text_with_kv_tags(const Document& doc) {
  const auto& kvs = doc.kv_pairs();
  struct Span {
    std::size_t lo, hi, pair;
  };
  std::vector<Span> spans;
  for (std::size_t p = 0; p < kvs.size(); ++p) {
    std::size_t lo = doc.words().size(), hi = 0;
    for (const auto* list : {&kvs[p].key_word_indices, &kvs[p].value_word_indices}) {
      for (auto i : *list) {
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
    spans.push_back({lo, hi, p});
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.lo < b.lo; });
  for (std::size_t s = 1; s < spans.size(); ++s) {
    if (spans[s].lo <= spans[s - 1].hi) {
      throw DocumentError("document '" + doc.id() +
                          "': KV pairs interleave; cannot tag contiguously");
    }
  }

  std::vector<long> owner(doc.words().size(), -1);
  for (const auto& sp : spans) {
    for (const auto* list : {&kvs[sp.pair].key_word_indices,
                             &kvs[sp.pair].value_word_indices}) {
      for (auto i : *list) owner[i] = static_cast<long>(sp.pair);
    }
  }

  std::string out;
  auto emit = [&out](const std::string& piece) {
    if (!out.empty()) out += ' ';
    out += piece;
  };
  std::size_t next_span = 0;
  for (std::size_t i = 0; i < doc.words().size(); ++i) {
    if (next_span < spans.size() && spans[next_span].lo == i) {
      emit(kv_span(doc, kvs[spans[next_span].pair]));
      ++next_span;
    }
    if (owner[i] < 0) emit(doc.words()[i].text());
  }
  return out;
}

}  // namespace dockd
