#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dockd {

struct VqaEvalItem {
  std::string prediction;
  std::vector<std::string> gold_answers;
};

using FieldValue = std::pair<std::string, std::string>;

struct EntityEvalItem {
  std::vector<FieldValue> predicted;
  std::vector<FieldValue> gold;
};

struct ClassifyEvalItem {
  std::string prediction;
  std::string gold_label;
  std::string gold_category;
};

/// Edit distance over Unicode code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - lev/max_len on lowercased, trimmed strings, zeroed below 0.5.
double nls(std::string_view a, std::string_view b);

/// Throws ArgumentError on an empty list or an item without gold answers.
double anls(const std::vector<VqaEvalItem>& items);
double exact_match(const std::vector<VqaEvalItem>& items, bool case_sensitive = false);

/// Micro-averaged over all items; pairs match when field and value are
/// equal after trim + lowercase.
double entity_f1(const std::vector<EntityEvalItem>& items);

/// Mean over gold pairs of the best nls between the gold value and any
/// predicted value with the same normalized field. Throws ArgumentError when
/// there are no gold pairs.
double entity_anls(const std::vector<EntityEvalItem>& items);

/// The 16 category names accepted as gold_category.
const std::vector<std::string>& document_categories();

/// memo, filefolder, handwritten, presentation.
const std::set<std::string>& default_excluded_categories();

/// Lowercase with spaces, '_' and '-' removed ("file folder" -> "filefolder").
std::string canonical_category(std::string_view name);

/// Unweighted mean of per-category accuracy over categories not in
/// `exclude` that have at least one item. Throws ArgumentError on an unknown
/// category or when nothing is left to average.
double mean_accuracy(const std::vector<ClassifyEvalItem>& items,
                     const std::set<std::string>& exclude = {});

/// Per-category accuracy keyed by canonical name, for reporting.
std::map<std::string, double> category_accuracy(const std::vector<ClassifyEvalItem>& items);

}  // namespace dockd
