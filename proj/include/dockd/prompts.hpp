#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dockd/errors.hpp"

namespace dockd {

enum class TemplateName {
  vqa_gen,
  entity_gen,
  kv_name_gen,
  class_desc_gen,
  class_pos_gen,
  class_neg_gen,
  vqa_zeroshot,
  classify_zeroshot_step1,
  classify_zeroshot_step2,
  entity_task,
  vqa_task,
  classify_task,
};

inline constexpr std::array kAllTemplates = {
    TemplateName::vqa_gen,
    TemplateName::entity_gen,
    TemplateName::kv_name_gen,
    TemplateName::class_desc_gen,
    TemplateName::class_pos_gen,
    TemplateName::class_neg_gen,
    TemplateName::vqa_zeroshot,
    TemplateName::classify_zeroshot_step1,
    TemplateName::classify_zeroshot_step2,
    TemplateName::entity_task,
    TemplateName::vqa_task,
    TemplateName::classify_task,
};

std::string to_string(TemplateName name);
/// Throws TemplateError for unknown names.
TemplateName template_from_string(std::string_view name);

/// Placeholder bindings keyed by short name: "COUNT" binds
/// "{COUNT_PLACE_HOLDER}".
using Bindings = std::map<std::string, std::string>;

/// The twelve prompt template bodies, each checked against the SHA-256
/// manifest (`SHA256SUMS`) on load.
class TemplateStore {
 public:
  /// Templates compiled into the library. Verified once, on first use.
  static const TemplateStore& builtin();

  /// Loads `<name>.txt` for every template plus `SHA256SUMS` from `dir`.
  static TemplateStore load_directory(const std::filesystem::path& dir);

  const std::string& body(TemplateName name) const;
  const std::string& sha256(TemplateName name) const;

  /// Short placeholder names in order of first appearance.
  std::vector<std::string> placeholders(TemplateName name) const;

  /// Single-pass substitution: text inserted from a binding is never
  /// rescanned. Throws TemplateError on an unbound placeholder or an unused
  /// binding.
  std::string render(TemplateName name, const Bindings& bindings) const;

 private:
  TemplateStore() = default;
  static TemplateStore from_files(const std::map<std::string, std::string>& files);

  std::map<TemplateName, std::string> bodies_;
  std::map<TemplateName, std::string> hashes_;
};

/// "one".."ten" for 1..10, decimal digits otherwise.
std::string count_word(int count);

std::string vqa_gen_prompt(std::string_view linearized_text, int count,
                           const TemplateStore& store = TemplateStore::builtin());

std::string entity_gen_prompt(std::string_view text_without_kv,
                              const TemplateStore& store = TemplateStore::builtin());

/// `constraints` are previously named (kv span, field) pairs; the prompt
/// ends with the open line "<k+1>. <next_kv_span> --- ".
std::string kv_name_prompt(
    std::string_view text_with_kv_tags,
    const std::vector<std::pair<std::string, std::string>>& constraints,
    std::string_view next_kv_span,
    const TemplateStore& store = TemplateStore::builtin());

std::string class_desc_prompt(std::string_view text,
                              const TemplateStore& store = TemplateStore::builtin());

std::string class_pos_prompt(std::string_view text, std::string_view description,
                             int count,
                             const TemplateStore& store = TemplateStore::builtin());

/// Positives are rendered as a "; "-joined list.
std::string class_neg_prompt(std::string_view text,
                             const std::vector<std::string>& positives, int count,
                             const TemplateStore& store = TemplateStore::builtin());

struct VqaTaskPrompt {
  std::string prompt;
  std::string answer_prefix;
};

VqaTaskPrompt vqa_task_prompt(std::string_view d_text, std::string_view question,
                              const TemplateStore& store = TemplateStore::builtin());

std::string entity_task_prompt(std::string_view d_text, std::string_view field,
                               const TemplateStore& store = TemplateStore::builtin());

struct Candidate {
  std::string label;
  std::string description;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Entries render as "label (description)", or "label" when the description
/// is empty, joined by "; " inside braces.
std::string classify_task_prompt(std::string_view d_text,
                                 const std::vector<Candidate>& candidates,
                                 const TemplateStore& store = TemplateStore::builtin());

std::string vqa_zeroshot_prompt(std::string_view linearized_text,
                                std::string_view question,
                                const TemplateStore& store = TemplateStore::builtin());

/// Step 1 (no suggestion) asks for a document name; step 2 offers the
/// suggestion and the sixteen RVL-CDIP categories.
std::string classify_zeroshot_prompts(std::string_view text,
                                      const std::optional<std::string>& suggested_type,
                                      const TemplateStore& store = TemplateStore::builtin());

}  // namespace dockd
