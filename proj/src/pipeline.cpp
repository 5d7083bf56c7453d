#include "dockd/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <unordered_map>

#include "dockd/parsers.hpp"
#include "dockd/text.hpp"

namespace dockd {
namespace {

std::mutex g_log_mutex;
LogSink g_log_sink = [](std::string_view msg) { std::clog << "dockd: " << msg << '\n'; };

void log(const std::string& msg) {
  std::lock_guard lock(g_log_mutex);
  if (g_log_sink) g_log_sink(msg);
}

GenerationRequest request(std::string prompt, std::string id, double temperature,
                          const Client& client) {
  GenerationRequest req;
  req.prompt = std::move(prompt);
  req.request_id = std::move(id);
  req.temperature = temperature;
  req.max_tokens = client.config().max_tokens;
  return req;
}

std::unordered_map<std::string, const Document*> index_docs(const std::vector<Document>& docs) {
  std::unordered_map<std::string, const Document*> out;
  for (const auto& d : docs) out.emplace(d.id(), &d);
  return out;
}

const Document& find_doc(const std::unordered_map<std::string, const Document*>& index,
                         const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) {
    throw ExportError("annotation references unknown document '" + id + "'");
  }
  return *it->second;
}

std::string document_text(const Document& doc, const ExportConfig& cfg) {
  return cfg.use_linearized_text ? linearize(doc, cfg.linearize).text() : raw_text(doc);
}

std::size_t word_count(const std::string& s) { return text::split_words(s).size(); }

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_log_mutex);
  g_log_sink = std::move(sink);
}

void validate(const VqaGenConfig& cfg) {
  if (cfg.qa_count < 1) throw ArgumentError("qa_count must be >= 1");
  if (!(cfg.temperature >= 0)) throw ArgumentError("temperature must be >= 0");
}

void validate(const ClassGenConfig& cfg) {
  if (cfg.pos_count < 1) throw ArgumentError("pos_count must be >= 1");
  if (cfg.neg_count < 1) throw ArgumentError("neg_count must be >= 1");
  if (cfg.candidate_negatives < 1) throw ArgumentError("candidate_negatives must be >= 1");
  if (cfg.candidate_negatives > cfg.neg_count) {
    throw ArgumentError("candidate_negatives must not exceed neg_count");
  }
}

void validate(const FilterConfig& cfg) {
  for (int v : {cfg.max_label_words, cfg.min_label_freq, cfg.min_answer_chars,
                cfg.max_answer_chars, cfg.min_question_chars, cfg.max_question_chars,
                cfg.min_field_freq}) {
    if (v < 0) throw ArgumentError("filter thresholds must be non-negative");
  }
  if (cfg.min_answer_chars > cfg.max_answer_chars ||
      cfg.min_question_chars > cfg.max_question_chars) {
    throw ArgumentError("filter minimum exceeds maximum");
  }
}

// ------------------------------------------------------------------ VQA

std::vector<DocQa> run_vqa_generation(const std::vector<Document>& docs,
                                      const VqaGenConfig& cfg, const Client& client) {
  validate(cfg);
  std::vector<GenerationRequest> reqs;
  std::vector<const Document*> owners;
  for (const auto& doc : docs) {
    try {
      const std::string text =
          cfg.use_linearized ? linearize(doc, cfg.linearize).text() : raw_text(doc);
      reqs.push_back(request(vqa_gen_prompt(text, cfg.qa_count), doc.id() + "/vqa",
                             cfg.temperature, client));
      owners.push_back(&doc);
    } catch (const DocumentError& e) {
      log("skipping " + doc.id() + ": " + e.what());
    }
  }

  const auto results = client.generate_batch(reqs);
  std::vector<DocQa> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& id = owners[i]->id();
    if (!results[i].ok()) {
      log("skipping " + id + ": " + results[i].error->message);
      continue;
    }
    try {
      for (auto& qa : parse_qa_pairs(results[i].response->completion)) {
        out.push_back(DocQa{id, std::move(qa)});
      }
    } catch (const ParseError& e) {
      log("skipping " + id + ": " + e.what());
    }
  }
  return out;
}

// ------------------------------------------------------------------ entities

std::vector<DocEntity> run_entity_generation(const std::vector<Document>& docs,
                                             const EntityGenConfig& cfg,
                                             const Client& client) {
  std::vector<std::optional<std::vector<DocEntity>>> per_doc(docs.size());

  run_bounded(docs.size(), client.config().max_concurrency, [&](std::size_t d) {
    const Document& doc = docs[d];
    std::vector<DocEntity> records;
    try {
      const bool with_kv = cfg.use_kv_detection;
      if (with_kv && !doc.kv_pairs().empty()) {
        const std::string tagged = text_with_kv_tags(doc);
        std::vector<const KVPair*> order;
        for (const auto& kv : doc.kv_pairs()) order.push_back(&kv);
        auto first_index = [](const KVPair* kv) {
          std::size_t lo = *std::min_element(kv->key_word_indices.begin(),
                                             kv->key_word_indices.end());
          for (auto i : kv->value_word_indices) lo = std::min(lo, i);
          return lo;
        };
        std::stable_sort(order.begin(), order.end(), [&](const KVPair* a, const KVPair* b) {
          return first_index(a) < first_index(b);
        });

        std::vector<std::pair<std::string, std::string>> constraints;
        for (std::size_t k = 0; k < order.size(); ++k) {
          const std::string span = kv_span(doc, *order[k]);
          auto resp = client.generate(
              request(kv_name_prompt(tagged, constraints, span),
                      doc.id() + "/kv/" + std::to_string(k + 1), cfg.kv_temperature, client));
          std::string field = parse_kv_field(resp.completion);
          std::string value = span.substr(4, span.size() - 9);
          records.push_back(DocEntity{doc.id(), make_entity(field, value, EntityKind::kv)});
          constraints.emplace_back(span, std::move(field));
        }
      }
      const std::string body = with_kv ? text_without_kv(doc) : raw_text(doc);
      auto resp = client.generate(request(entity_gen_prompt(body), doc.id() + "/entities",
                                          cfg.entity_temperature, client));
      for (auto& rec : parse_entity_list(resp.completion)) {
        records.push_back(DocEntity{doc.id(), std::move(rec)});
      }
      per_doc[d] = std::move(records);
    } catch (const std::exception& e) {
      log("skipping " + doc.id() + ": " + e.what());
    }
  });

  std::vector<DocEntity> out;
  for (auto& recs : per_doc) {
    if (!recs) continue;
    for (auto& r : *recs) out.push_back(std::move(r));
  }
  return out;
}

std::vector<EntityGroup> aggregate_entities(const std::vector<DocEntity>& records) {
  std::vector<EntityGroup> out;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& r : records) {
    const std::string field = text::trim(r.entity.field);
    const std::string value = text::trim(r.entity.value);
    if (field.empty() || value.empty()) continue;
    auto key = std::make_pair(r.doc_id, text::to_lower(field));
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, out.size());
      out.push_back(EntityGroup{r.doc_id, field, {value}});
      continue;
    }
    auto& values = out[it->second].values;
    if (std::find(values.begin(), values.end(), value) == values.end()) {
      values.push_back(value);
    }
  }
  return out;
}

// ------------------------------------------------------------------ classes

std::vector<DocLabels> run_class_generation(const std::vector<Document>& docs,
                                            const ClassGenConfig& cfg,
                                            const Client& client) {
  validate(cfg);
  std::vector<std::optional<ClassLabelSet>> per_doc(docs.size());

  run_bounded(docs.size(), client.config().max_concurrency, [&](std::size_t d) {
    const Document& doc = docs[d];
    try {
      const std::string text = raw_text(doc);
      auto desc_resp = client.generate(
          request(class_desc_prompt(text), doc.id() + "/desc", cfg.temperature, client));
      std::string description = parse_description(desc_resp.completion);

      auto pos_resp = client.generate(request(class_pos_prompt(text, description, cfg.pos_count),
                                              doc.id() + "/pos", cfg.temperature, client));
      auto positives = parse_label_list(pos_resp.completion);
      if (positives.empty()) throw ParseError("no positive labels generated");

      auto neg_resp = client.generate(request(class_neg_prompt(text, positives, cfg.neg_count),
                                              doc.id() + "/neg", cfg.temperature, client));
      auto negatives = parse_label_list(neg_resp.completion);
      per_doc[d] = make_label_set(std::move(description), std::move(positives),
                                  std::move(negatives));
    } catch (const std::exception& e) {
      log("skipping " + doc.id() + ": " + e.what());
    }
  });

  // Describe each distinct negative once, in first-seen order.
  std::vector<std::string> unique;
  std::map<std::string, std::size_t> slot;
  for (const auto& set : per_doc) {
    if (!set) continue;
    for (const auto& n : set->negatives) {
      if (slot.emplace(text::normalize_key(n), unique.size()).second) unique.push_back(n);
    }
  }
  std::vector<GenerationRequest> reqs;
  for (const auto& label : unique) {
    reqs.push_back(request(class_desc_prompt(label), "negdesc/" + label, cfg.temperature,
                           client));
  }
  const auto results = client.generate_batch(reqs);
  std::vector<std::string> described(unique.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok()) {
      log("no description for negative '" + unique[i] + "': " + results[i].error->message);
      continue;
    }
    try {
      described[i] = parse_description(results[i].response->completion);
    } catch (const ParseError& e) {
      log("no description for negative '" + unique[i] + "': " + e.what());
    }
  }

  std::vector<DocLabels> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (!per_doc[d]) continue;
    ClassLabelSet set = std::move(*per_doc[d]);
    for (const auto& n : set.negatives) {
      set.negative_descriptions[n] = described[slot.at(text::normalize_key(n))];
    }
    out.push_back(DocLabels{docs[d].id(), std::move(set)});
  }
  return out;
}

std::mt19937_64 document_rng(std::uint64_t seed, std::string_view doc_id) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : doc_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_index needs n > 0");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

CandidateList formulate_candidates(const ClassLabelSet& labels, const ClassGenConfig& cfg,
                                   std::mt19937_64& rng) {
  if (labels.positives.empty()) throw CandidateError("label set has no positives");
  if (cfg.candidate_negatives < 0 ||
      labels.negatives.size() < static_cast<std::size_t>(cfg.candidate_negatives)) {
    throw CandidateError("label set has " + std::to_string(labels.negatives.size()) +
                         " negatives, need " + std::to_string(cfg.candidate_negatives));
  }
  CandidateList out;
  out.answer = labels.positives[uniform_index(rng, labels.positives.size())];
  out.candidates.push_back(Candidate{out.answer, labels.description});

  std::vector<std::size_t> pool(labels.negatives.size());
  std::iota(pool.begin(), pool.end(), 0);
  for (int k = 0; k < cfg.candidate_negatives; ++k) {
    const std::size_t j = k + uniform_index(rng, pool.size() - k);
    std::swap(pool[k], pool[j]);
    const std::string& label = labels.negatives[pool[k]];
    auto it = labels.negative_descriptions.find(label);
    out.candidates.push_back(
        Candidate{label, it == labels.negative_descriptions.end() ? "" : it->second});
  }
  for (std::size_t i = out.candidates.size(); i > 1; --i) {
    std::swap(out.candidates[i - 1], out.candidates[uniform_index(rng, i)]);
  }
  return out;
}

// ------------------------------------------------------------------ filters

std::vector<DocLabels> filter_class_dataset(const std::vector<DocLabels>& sets,
                                            const FilterConfig& cfg) {
  validate(cfg);
  std::vector<DocLabels> cur = sets;
  auto too_long = [&](const std::string& l) {
    return word_count(l) > static_cast<std::size_t>(cfg.max_label_words);
  };
  auto drop_labels = [](ClassLabelSet& s, auto&& pred_pos, auto&& pred_neg) {
    const auto before = s.positives.size() + s.negatives.size();
    std::erase_if(s.positives, pred_pos);
    std::erase_if(s.negatives, pred_neg);
    std::erase_if(s.negative_descriptions,
                  [&](const auto& kv) { return pred_neg(kv.first); });
    return before != s.positives.size() + s.negatives.size();
  };
  for (auto& d : cur) drop_labels(d.labels, too_long, too_long);

  while (true) {
    std::map<std::string, int> pos_freq, neg_freq;
    for (const auto& d : cur) {
      for (const auto& l : d.labels.positives) ++pos_freq[text::normalize_key(l)];
      for (const auto& l : d.labels.negatives) ++neg_freq[text::normalize_key(l)];
    }
    auto freq = [&](const std::string& l, bool positive) {
      const auto key = text::normalize_key(l);
      auto get = [&](const std::map<std::string, int>& m) {
        auto it = m.find(key);
        return it == m.end() ? 0 : it->second;
      };
      if (cfg.pool_label_frequency) return get(pos_freq) + get(neg_freq);
      return positive ? get(pos_freq) : get(neg_freq);
    };
    bool changed = false;
    for (auto& d : cur) {
      changed |= drop_labels(
          d.labels, [&](const std::string& l) { return freq(l, true) < cfg.min_label_freq; },
          [&](const std::string& l) { return freq(l, false) < cfg.min_label_freq; });
    }
    const auto before = cur.size();
    std::erase_if(cur, [](const DocLabels& d) { return d.labels.positives.empty(); });
    changed |= cur.size() != before;
    if (!changed) break;
  }
  return cur;
}

std::vector<DocQa> filter_qa_dataset(const std::vector<DocQa>& pairs,
                                     const FilterConfig& cfg) {
  validate(cfg);
  auto within = [](const std::string& s, int lo, int hi) {
    const auto n = text::utf8_length(s);
    return n >= static_cast<std::size_t>(lo) && n <= static_cast<std::size_t>(hi);
  };
  std::vector<DocQa> out;
  for (const auto& p : pairs) {
    if (within(p.qa.question, cfg.min_question_chars, cfg.max_question_chars) &&
        within(p.qa.answer, cfg.min_answer_chars, cfg.max_answer_chars)) {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<EntityGroup> filter_entity_dataset(const std::vector<EntityGroup>& groups,
                                               const FilterConfig& cfg) {
  validate(cfg);
  std::map<std::string, std::set<std::string>> docs_per_field;
  for (const auto& g : groups) docs_per_field[text::normalize_key(g.field)].insert(g.doc_id);
  std::vector<EntityGroup> out;
  for (const auto& g : groups) {
    if (docs_per_field[text::normalize_key(g.field)].size() >=
        static_cast<std::size_t>(cfg.min_field_freq)) {
      out.push_back(g);
    }
  }
  return out;
}

// ------------------------------------------------------------------ export

std::vector<TaskSample> export_vqa_samples(const std::vector<DocQa>& pairs,
                                           const std::vector<Document>& docs,
                                           const ExportConfig& cfg) {
  const auto index = index_docs(docs);
  std::map<std::string, std::string> text_cache;
  std::vector<TaskSample> out;
  for (const auto& p : pairs) {
    const Document& doc = find_doc(index, p.doc_id);
    auto [it, fresh] = text_cache.try_emplace(p.doc_id);
    if (fresh) it->second = document_text(doc, cfg);
    auto task = vqa_task_prompt(it->second, p.qa.question);
    out.push_back(make_task_sample(p.doc_id, TaskKind::vqa, std::move(task.prompt),
                                   task.answer_prefix + p.qa.answer,
                                   {{"question", p.qa.question}}));
  }
  return out;
}

std::vector<TaskSample> export_entity_samples(const std::vector<EntityGroup>& groups,
                                              const std::vector<Document>& docs,
                                              const ExportConfig& cfg) {
  const auto index = index_docs(docs);
  std::map<std::string, std::string> text_cache;
  std::vector<TaskSample> out;
  for (const auto& g : groups) {
    const Document& doc = find_doc(index, g.doc_id);
    auto [it, fresh] = text_cache.try_emplace(g.doc_id);
    if (fresh) it->second = document_text(doc, cfg);
    std::string prompt;
    try {
      prompt = entity_task_prompt(it->second, g.field);
    } catch (const ArgumentError& e) {
      log("skipping field '" + g.field + "' of " + g.doc_id + ": " + e.what());
      continue;
    }
    out.push_back(make_task_sample(g.doc_id, TaskKind::entity, std::move(prompt),
                                   "Answer: " + text::join(g.values, "; "),
                                   {{"field", g.field}}));
  }
  return out;
}

std::vector<TaskSample> export_classify_samples(const std::vector<DocLabels>& sets,
                                                const std::vector<Document>& docs,
                                                const ClassGenConfig& class_cfg,
                                                const ExportConfig& cfg) {
  validate(class_cfg);
  const auto index = index_docs(docs);
  std::vector<TaskSample> out;
  for (const auto& s : sets) {
    const Document& doc = find_doc(index, s.doc_id);
    auto rng = document_rng(class_cfg.rng_seed, s.doc_id);
    CandidateList list;
    try {
      list = formulate_candidates(s.labels, class_cfg, rng);
    } catch (const CandidateError& e) {
      log("skipping " + s.doc_id + ": " + e.what());
      continue;
    }
    std::vector<std::string> names;
    for (const auto& c : list.candidates) names.push_back(c.label);
    out.push_back(make_task_sample(
        s.doc_id, TaskKind::classify,
        classify_task_prompt(document_text(doc, cfg), list.candidates),
        "Answer: " + list.answer,
        {{"label", list.answer}, {"candidates", text::join(names, "; ")}}));
  }
  return out;
}

}  // namespace dockd
