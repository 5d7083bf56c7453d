#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dockd/core.hpp"
#include "dockd/linearizer.hpp"
#include "dockd/llm_client.hpp"
#include "dockd/pipeline.hpp"

// JSON and JSON Lines encodings of the domain types. Decoding goes through
// the checked constructors, so malformed input surfaces as DocumentError or
// ArgumentError rather than as a half-built value.
namespace dockd {

using json = nlohmann::json;

Document document_from_json(const json& j);
json document_to_json(const Document& doc);

void to_json(json& j, const QAPair& v);
void to_json(json& j, const EntityRecord& v);
void to_json(json& j, const DocQa& v);
void from_json(const json& j, DocQa& v);
void to_json(json& j, const DocEntity& v);
void from_json(const json& j, DocEntity& v);
void to_json(json& j, const EntityGroup& v);
void from_json(const json& j, EntityGroup& v);
void to_json(json& j, const DocLabels& v);
void from_json(const json& j, DocLabels& v);
void to_json(json& j, const TaskSample& v);
void from_json(const json& j, TaskSample& v);
void to_json(json& j, const Candidate& v);

/// Everything the CLI stages read from one config file. Every section and
/// key is optional; unknown keys are rejected. The "linearize" section is
/// shared by VQA generation and export.
struct PipelineConfig {
  VqaGenConfig vqa;
  EntityGenConfig entity;
  ClassGenConfig classes;
  FilterConfig filter;
  BackendConfig backend;
  ExportConfig export_cfg;
  LinearizeOptions linearize;
};

PipelineConfig config_from_json(const json& j);
json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

/// One JSON value per non-blank line. Errors name the file and line.
std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);
/// Compact dump with one line per value; the byte format of every JSONL
/// artifact.
std::string to_jsonl(const std::vector<json>& rows);

/// Throws DocumentError on a malformed document or a repeated id.
std::vector<Document> read_corpus(const std::filesystem::path& path);
std::vector<Document> corpus_from_jsonl(const std::vector<json>& rows);

template <typename T>
std::vector<T> records_from_jsonl(const std::vector<json>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      out.push_back(rows[i].get<T>());
    } catch (const json::exception& e) {
      throw ArgumentError("record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
std::vector<json> records_to_jsonl(const std::vector<T>& records) {
  std::vector<json> out;
  out.reserve(records.size());
  for (const auto& r : records) out.emplace_back(r);
  return out;
}

}  // namespace dockd
