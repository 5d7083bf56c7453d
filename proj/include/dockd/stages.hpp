#pragma once

#include <string>
#include <vector>

#include "dockd/io.hpp"

namespace dockd {

/// Annotation families handled by the gen/filter/export stages.
enum class StageTask { vqa, entities, classes };

std::string to_string(StageTask task);
/// Accepts "vqa", "entities" and "classes"; throws ArgumentError otherwise.
StageTask stage_task_from_string(const std::string& s);

/// Generated annotation records, one JSON object per row.
std::vector<json> generate_stage(StageTask task, const std::vector<Document>& docs,
                                 const PipelineConfig& cfg, const Client& client);

/// Entity rows may be raw records or already grouped ({"values": [...]});
/// raw records are aggregated first.
std::vector<json> filter_stage(StageTask task, const std::vector<json>& rows,
                               const PipelineConfig& cfg);

std::vector<json> export_stage(StageTask task, const std::vector<json>& rows,
                               const std::vector<Document>& docs, const PipelineConfig& cfg);

}  // namespace dockd
