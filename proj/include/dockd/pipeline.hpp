#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dockd/core.hpp"
#include "dockd/linearizer.hpp"
#include "dockd/llm_client.hpp"
#include "dockd/prompts.hpp"

namespace dockd {

struct VqaGenConfig {
  int qa_count = 3;
  bool use_linearized = true;
  double temperature = 0.7;
  LinearizeOptions linearize;
};

struct EntityGenConfig {
  bool use_kv_detection = true;
  double kv_temperature = 0.0;
  double entity_temperature = 0.7;
};

struct ClassGenConfig {
  int pos_count = 3;
  int neg_count = 10;
  int candidate_negatives = 3;
  std::uint64_t rng_seed = 0;
  double temperature = 0.7;
};

struct FilterConfig {
  int max_label_words = 5;
  int min_label_freq = 3;
  /// Count positives and negatives as one pool; otherwise each list is
  /// counted against its own pool.
  bool pool_label_frequency = true;
  int min_answer_chars = 1;
  int max_answer_chars = 300;
  int min_question_chars = 8;
  int max_question_chars = 300;
  int min_field_freq = 2;
};

struct ExportConfig {
  /// Student-side document text: raw OCR order (default) or linearized.
  bool use_linearized_text = false;
  LinearizeOptions linearize;
};

// Throw ArgumentError when a config violates its invariants.
void validate(const VqaGenConfig& cfg);
void validate(const ClassGenConfig& cfg);
void validate(const FilterConfig& cfg);

struct DocQa {
  std::string doc_id;
  QAPair qa;
  friend bool operator==(const DocQa&, const DocQa&) = default;
};

struct DocEntity {
  std::string doc_id;
  EntityRecord entity;
  friend bool operator==(const DocEntity&, const DocEntity&) = default;
};

/// Values of one document that share a field name.
struct EntityGroup {
  std::string doc_id;
  std::string field;
  std::vector<std::string> values;
  friend bool operator==(const EntityGroup&, const EntityGroup&) = default;
};

struct DocLabels {
  std::string doc_id;
  ClassLabelSet labels;
  friend bool operator==(const DocLabels&, const DocLabels&) = default;
};

struct CandidateList {
  std::vector<Candidate> candidates;
  std::string answer;
};

/// Receives skip/failure notices from the generation and export stages.
/// Defaults to std::clog. Not thread-safe to replace while a stage runs.
using LogSink = std::function<void(std::string_view)>;
void set_log_sink(LogSink sink);

/// Linearized (or raw) text -> QA generation prompt -> parsed pairs.
/// Documents whose call or parse fails are logged and skipped.
std::vector<DocQa> run_vqa_generation(const std::vector<Document>& docs,
                                      const VqaGenConfig& cfg, const Client& client);

/// KV pairs are named one at a time in document order, each prompt carrying
/// every earlier (span, field) as a constraint; the remaining text then goes
/// through the regular-entity prompt. Without KV detection only the regular
/// prompt runs, on the raw text.
std::vector<DocEntity> run_entity_generation(const std::vector<Document>& docs,
                                             const EntityGenConfig& cfg,
                                             const Client& client);

/// Groups values by (document, field); fields compare case-insensitively
/// after trimming and keep their first-seen spelling.
std::vector<EntityGroup> aggregate_entities(const std::vector<DocEntity>& records);

/// description -> positives -> negatives per document, then one description
/// per distinct negative label across the run.
std::vector<DocLabels> run_class_generation(const std::vector<Document>& docs,
                                            const ClassGenConfig& cfg,
                                            const Client& client);

/// Deterministic per-document generator derived from (seed, doc_id).
std::mt19937_64 document_rng(std::uint64_t seed, std::string_view doc_id);

/// Uniform integer in [0, n) by rejection sampling, identical on every
/// platform for a given engine state.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

/// One positive plus cfg.candidate_negatives sampled negatives, shuffled.
/// Throws CandidateError when there are too few labels.
CandidateList formulate_candidates(const ClassLabelSet& labels, const ClassGenConfig& cfg,
                                   std::mt19937_64& rng);

/// Drops labels longer than max_label_words words or rarer than
/// min_label_freq, then documents left without positives, repeating until
/// nothing changes.
std::vector<DocLabels> filter_class_dataset(const std::vector<DocLabels>& sets,
                                            const FilterConfig& cfg);

std::vector<DocQa> filter_qa_dataset(const std::vector<DocQa>& pairs,
                                     const FilterConfig& cfg);

/// Drops groups whose field appears in fewer than min_field_freq documents.
std::vector<EntityGroup> filter_entity_dataset(const std::vector<EntityGroup>& groups,
                                               const FilterConfig& cfg);

// Export to (prompt, answer) training samples. Each throws ExportError when
// an annotation names a document missing from `docs`.
std::vector<TaskSample> export_vqa_samples(const std::vector<DocQa>& pairs,
                                           const std::vector<Document>& docs,
                                           const ExportConfig& cfg = {});
std::vector<TaskSample> export_entity_samples(const std::vector<EntityGroup>& groups,
                                              const std::vector<Document>& docs,
                                              const ExportConfig& cfg = {});
std::vector<TaskSample> export_classify_samples(const std::vector<DocLabels>& sets,
                                                const std::vector<Document>& docs,
                                                const ClassGenConfig& class_cfg,
                                                const ExportConfig& cfg = {});

}  // namespace dockd
