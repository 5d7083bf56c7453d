#include "dockd/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dockd/text.hpp"

namespace dockd {
namespace {

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw ArgumentError(std::string("missing key '") + key + "'");
  return j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ArgumentError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= key == a;
    if (!ok) throw ArgumentError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

// ------------------------------------------------------------------ documents

Document document_from_json(const json& j) {
  try {
    if (!j.is_object()) throw DocumentError("document must be a JSON object");
    std::vector<Word> words;
    for (const auto& w : j.value("words", json::array())) {
      const auto box = w.at("box").get<std::vector<double>>();
      if (box.size() != 4) throw DocumentError("box must have 4 coordinates");
      words.emplace_back(w.at("text").get<std::string>(),
                         BBox(box[0], box[1], box[2], box[3]));
    }
    std::vector<KVPair> kvs;
    for (const auto& kv : j.value("kv_pairs", json::array())) {
      kvs.push_back(KVPair{kv.at("key").get<std::vector<std::size_t>>(),
                           kv.at("value").get<std::vector<std::size_t>>()});
    }
    std::vector<TableRegion> tables;
    for (const auto& t : j.value("tables", json::array())) {
      tables.push_back(
          TableRegion{t.at("rows").get<std::vector<std::vector<std::vector<std::size_t>>>>()});
    }
    std::vector<HeadingRange> headings;
    for (const auto& h : j.value("headings", json::array())) {
      const auto r = h.get<std::vector<std::size_t>>();
      if (r.size() != 2) throw DocumentError("heading must be [start, end]");
      headings.push_back(HeadingRange{r[0], r[1]});
    }
    return Document(j.at("id").get<std::string>(), std::move(words), std::move(kvs),
                    std::move(tables), std::move(headings));
  } catch (const json::exception& e) {
    throw DocumentError(std::string("malformed document: ") + e.what());
  }
}

json document_to_json(const Document& doc) {
  json words = json::array();
  for (const auto& w : doc.words()) {
    const auto& b = w.box();
    words.push_back({{"text", w.text()}, {"box", {b.x0(), b.y0(), b.x1(), b.y1()}}});
  }
  json kvs = json::array();
  for (const auto& kv : doc.kv_pairs()) {
    kvs.push_back({{"key", kv.key_word_indices}, {"value", kv.value_word_indices}});
  }
  json tables = json::array();
  for (const auto& t : doc.tables()) tables.push_back({{"rows", t.rows}});
  json headings = json::array();
  for (const auto& h : doc.headings()) headings.push_back({h.begin, h.end});
  return {{"id", doc.id()},
          {"words", words},
          {"kv_pairs", kvs},
          {"tables", tables},
          {"headings", headings}};
}

// ------------------------------------------------------------------ records

void to_json(json& j, const QAPair& v) { j = {{"question", v.question}, {"answer", v.answer}}; }

void to_json(json& j, const EntityRecord& v) {
  j = {{"field", v.field}, {"value", v.value}, {"kind", to_string(v.kind)}};
}

void to_json(json& j, const DocQa& v) {
  j = {{"doc_id", v.doc_id}, {"question", v.qa.question}, {"answer", v.qa.answer}};
}

void from_json(const json& j, DocQa& v) {
  v.doc_id = get_field<std::string>(j, "doc_id");
  v.qa = make_qa_pair(get_field<std::string>(j, "question"),
                      get_field<std::string>(j, "answer"));
}

void to_json(json& j, const DocEntity& v) {
  j = {{"doc_id", v.doc_id},
       {"field", v.entity.field},
       {"value", v.entity.value},
       {"kind", to_string(v.entity.kind)}};
}

void from_json(const json& j, DocEntity& v) {
  v.doc_id = get_field<std::string>(j, "doc_id");
  v.entity = make_entity(get_field<std::string>(j, "field"), get_field<std::string>(j, "value"),
                         entity_kind_from_string(j.value("kind", std::string("regular"))));
}

void to_json(json& j, const EntityGroup& v) {
  j = {{"doc_id", v.doc_id}, {"field", v.field}, {"values", v.values}};
}

void from_json(const json& j, EntityGroup& v) {
  v.doc_id = get_field<std::string>(j, "doc_id");
  v.field = get_field<std::string>(j, "field");
  v.values = get_field<std::vector<std::string>>(j, "values");
  if (text::trim(v.field).empty() || v.values.empty()) {
    throw ArgumentError("entity group needs a field and at least one value");
  }
}

void to_json(json& j, const DocLabels& v) {
  j = {{"doc_id", v.doc_id},
       {"description", v.labels.description},
       {"positives", v.labels.positives},
       {"negatives", v.labels.negatives},
       {"negative_descriptions", v.labels.negative_descriptions}};
}

void from_json(const json& j, DocLabels& v) {
  v.doc_id = get_field<std::string>(j, "doc_id");
  v.labels = make_label_set(j.value("description", std::string()),
                            get_field<std::vector<std::string>>(j, "positives"),
                            j.value("negatives", std::vector<std::string>{}));
  const auto descs =
      j.value("negative_descriptions", std::map<std::string, std::string>{});
  for (const auto& n : v.labels.negatives) {
    auto it = descs.find(n);
    if (it != descs.end()) v.labels.negative_descriptions[n] = it->second;
  }
}

void to_json(json& j, const TaskSample& v) {
  j = {{"doc_id", v.doc_id},
       {"task", to_string(v.task)},
       {"prompt", v.prompt},
       {"answer", v.answer},
       {"meta", v.meta}};
}

void from_json(const json& j, TaskSample& v) {
  v = make_task_sample(get_field<std::string>(j, "doc_id"),
                       task_kind_from_string(get_field<std::string>(j, "task")),
                       get_field<std::string>(j, "prompt"), get_field<std::string>(j, "answer"),
                       j.value("meta", std::map<std::string, std::string>{}));
}

void to_json(json& j, const Candidate& v) {
  j = {{"label", v.label}, {"description", v.description}};
}

// ------------------------------------------------------------------ config

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    reject_unknown(j, {"vqa", "entity", "classes", "filter", "backend", "export", "linearize"},
                   "config");
    if (j.contains("vqa")) {
      const auto& s = j["vqa"];
      reject_unknown(s, {"qa_count", "use_linearized", "temperature"}, "vqa");
      maybe(s, "qa_count", c.vqa.qa_count);
      maybe(s, "use_linearized", c.vqa.use_linearized);
      maybe(s, "temperature", c.vqa.temperature);
    }
    if (j.contains("entity")) {
      const auto& s = j["entity"];
      reject_unknown(s, {"use_kv_detection", "kv_temperature", "entity_temperature"}, "entity");
      maybe(s, "use_kv_detection", c.entity.use_kv_detection);
      maybe(s, "kv_temperature", c.entity.kv_temperature);
      maybe(s, "entity_temperature", c.entity.entity_temperature);
    }
    if (j.contains("classes")) {
      const auto& s = j["classes"];
      reject_unknown(s, {"pos_count", "neg_count", "candidate_negatives", "rng_seed",
                         "temperature"},
                     "classes");
      maybe(s, "pos_count", c.classes.pos_count);
      maybe(s, "neg_count", c.classes.neg_count);
      maybe(s, "candidate_negatives", c.classes.candidate_negatives);
      maybe(s, "rng_seed", c.classes.rng_seed);
      maybe(s, "temperature", c.classes.temperature);
    }
    if (j.contains("filter")) {
      const auto& s = j["filter"];
      reject_unknown(s, {"max_label_words", "min_label_freq", "pool_label_frequency",
                         "min_answer_chars", "max_answer_chars", "min_question_chars",
                         "max_question_chars", "min_field_freq"},
                     "filter");
      maybe(s, "max_label_words", c.filter.max_label_words);
      maybe(s, "min_label_freq", c.filter.min_label_freq);
      maybe(s, "pool_label_frequency", c.filter.pool_label_frequency);
      maybe(s, "min_answer_chars", c.filter.min_answer_chars);
      maybe(s, "max_answer_chars", c.filter.max_answer_chars);
      maybe(s, "min_question_chars", c.filter.min_question_chars);
      maybe(s, "max_question_chars", c.filter.max_question_chars);
      maybe(s, "min_field_freq", c.filter.min_field_freq);
    }
    if (j.contains("backend")) {
      const auto& s = j["backend"];
      reject_unknown(s, {"kind", "endpoint_url", "auth_env_var", "max_concurrency",
                         "max_retries", "timeout_s", "replay_path", "max_tokens",
                         "initial_backoff_s"},
                     "backend");
      if (s.contains("kind")) c.backend.kind = backend_kind_from_string(s["kind"]);
      maybe(s, "endpoint_url", c.backend.endpoint_url);
      maybe(s, "auth_env_var", c.backend.auth_env_var);
      maybe(s, "max_concurrency", c.backend.max_concurrency);
      maybe(s, "max_retries", c.backend.max_retries);
      maybe(s, "timeout_s", c.backend.timeout_s);
      maybe(s, "replay_path", c.backend.replay_path);
      maybe(s, "max_tokens", c.backend.max_tokens);
      maybe(s, "initial_backoff_s", c.backend.initial_backoff_s);
    }
    if (j.contains("export")) {
      const auto& s = j["export"];
      reject_unknown(s, {"use_linearized_text"}, "export");
      maybe(s, "use_linearized_text", c.export_cfg.use_linearized_text);
    }
    if (j.contains("linearize")) {
      const auto& s = j["linearize"];
      reject_unknown(s, {"line_merge_frac", "column_split", "min_column_gap"}, "linearize");
      maybe(s, "line_merge_frac", c.linearize.line_merge_frac);
      maybe(s, "column_split", c.linearize.column_split);
      maybe(s, "min_column_gap", c.linearize.min_column_gap);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("bad config value: ") + e.what());
  }
  c.vqa.linearize = c.linearize;
  c.export_cfg.linearize = c.linearize;
  validate(c.vqa);
  validate(c.classes);
  validate(c.filter);
  return c;
}

json config_to_json(const PipelineConfig& c) {
  return {
      {"vqa",
       {{"qa_count", c.vqa.qa_count},
        {"use_linearized", c.vqa.use_linearized},
        {"temperature", c.vqa.temperature}}},
      {"entity",
       {{"use_kv_detection", c.entity.use_kv_detection},
        {"kv_temperature", c.entity.kv_temperature},
        {"entity_temperature", c.entity.entity_temperature}}},
      {"classes",
       {{"pos_count", c.classes.pos_count},
        {"neg_count", c.classes.neg_count},
        {"candidate_negatives", c.classes.candidate_negatives},
        {"rng_seed", c.classes.rng_seed},
        {"temperature", c.classes.temperature}}},
      {"filter",
       {{"max_label_words", c.filter.max_label_words},
        {"min_label_freq", c.filter.min_label_freq},
        {"pool_label_frequency", c.filter.pool_label_frequency},
        {"min_answer_chars", c.filter.min_answer_chars},
        {"max_answer_chars", c.filter.max_answer_chars},
        {"min_question_chars", c.filter.min_question_chars},
        {"max_question_chars", c.filter.max_question_chars},
        {"min_field_freq", c.filter.min_field_freq}}},
      {"backend",
       {{"kind", to_string(c.backend.kind)},
        {"endpoint_url", c.backend.endpoint_url},
        {"auth_env_var", c.backend.auth_env_var},
        {"max_concurrency", c.backend.max_concurrency},
        {"max_retries", c.backend.max_retries},
        {"timeout_s", c.backend.timeout_s},
        {"replay_path", c.backend.replay_path},
        {"max_tokens", c.backend.max_tokens},
        {"initial_backoff_s", c.backend.initial_backoff_s}}},
      {"export", {{"use_linearized_text", c.export_cfg.use_linearized_text}}},
      {"linearize",
       {{"line_merge_frac", c.linearize.line_merge_frac},
        {"column_split", c.linearize.column_split},
        {"min_column_gap", c.linearize.min_column_gap}}}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ArgumentError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ------------------------------------------------------------------ jsonl

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ArgumentError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << to_jsonl(rows);
  if (!out) throw ArgumentError("write failed for " + path.string());
}

std::vector<Document> corpus_from_jsonl(const std::vector<json>& rows) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      docs.push_back(document_from_json(rows[i]));
    } catch (const DocumentError& e) {
      throw DocumentError("document " + std::to_string(i + 1) + ": " + e.what());
    }
    if (!seen.insert(docs.back().id()).second) {
      throw DocumentError("duplicate document id '" + docs.back().id() + "'");
    }
  }
  return docs;
}

std::vector<Document> read_corpus(const std::filesystem::path& path) {
  return corpus_from_jsonl(read_jsonl(path));
}

}  // namespace dockd
