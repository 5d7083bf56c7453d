#include "dockd/stages.hpp"

#include "dockd/errors.hpp"

namespace dockd {
namespace {

std::vector<EntityGroup> entity_groups(const std::vector<json>& rows) {
  const bool grouped = !rows.empty() && rows.front().contains("values");
  return grouped ? records_from_jsonl<EntityGroup>(rows)
                 : aggregate_entities(records_from_jsonl<DocEntity>(rows));
}

}  // namespace

std::string to_string(StageTask task) {
  switch (task) {
    case StageTask::vqa: return "vqa";
    case StageTask::entities: return "entities";
    case StageTask::classes: return "classes";
  }
  return "";
}

StageTask stage_task_from_string(const std::string& s) {
  if (s == "vqa") return StageTask::vqa;
  if (s == "entities") return StageTask::entities;
  if (s == "classes") return StageTask::classes;
  throw ArgumentError("unknown task '" + s + "' (expected vqa, entities or classes)");
}

std::vector<json> generate_stage(StageTask task, const std::vector<Document>& docs,
                                 const PipelineConfig& cfg, const Client& client) {
  switch (task) {
    case StageTask::vqa:
      return records_to_jsonl(run_vqa_generation(docs, cfg.vqa, client));
    case StageTask::entities:
      return records_to_jsonl(run_entity_generation(docs, cfg.entity, client));
    case StageTask::classes:
      return records_to_jsonl(run_class_generation(docs, cfg.classes, client));
  }
  return {};
}

std::vector<json> filter_stage(StageTask task, const std::vector<json>& rows,
                               const PipelineConfig& cfg) {
  switch (task) {
    case StageTask::vqa:
      return records_to_jsonl(filter_qa_dataset(records_from_jsonl<DocQa>(rows), cfg.filter));
    case StageTask::entities:
      return records_to_jsonl(filter_entity_dataset(entity_groups(rows), cfg.filter));
    case StageTask::classes:
      return records_to_jsonl(
          filter_class_dataset(records_from_jsonl<DocLabels>(rows), cfg.filter));
  }
  return {};
}

std::vector<json> export_stage(StageTask task, const std::vector<json>& rows,
                               const std::vector<Document>& docs, const PipelineConfig& cfg) {
  switch (task) {
    case StageTask::vqa:
      return records_to_jsonl(
          export_vqa_samples(records_from_jsonl<DocQa>(rows), docs, cfg.export_cfg));
    case StageTask::entities:
      return records_to_jsonl(export_entity_samples(entity_groups(rows), docs, cfg.export_cfg));
    case StageTask::classes:
      return records_to_jsonl(export_classify_samples(records_from_jsonl<DocLabels>(rows), docs,
                                                      cfg.classes, cfg.export_cfg));
  }
  return {};
}

}  // namespace dockd
