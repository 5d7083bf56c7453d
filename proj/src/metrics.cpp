#include "dockd/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "dockd/errors.hpp"
#include "dockd/text.hpp"

namespace dockd {
namespace {

std::string norm(std::string_view s) { return text::to_lower(text::trim(s)); }

bool same_pair(const FieldValue& a, const FieldValue& b) {
  return norm(a.first) == norm(b.first) && norm(a.second) == norm(b.second);
}

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto x = text::utf8_decode(a);
  const auto y = text::utf8_decode(b);
  std::vector<std::size_t> row(y.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

double nls(std::string_view a, std::string_view b) {
  const std::string x = norm(a), y = norm(b);
  const std::size_t longest = std::max(text::utf8_length(x), text::utf8_length(y));
  if (longest == 0) return 1.0;
  const double s = 1.0 - static_cast<double>(levenshtein(x, y)) / static_cast<double>(longest);
  return s < 0.5 ? 0.0 : s;
}

double anls(const std::vector<VqaEvalItem>& items) {
  if (items.empty()) throw ArgumentError("anls needs at least one item");
  double total = 0;
  for (const auto& it : items) {
    if (it.gold_answers.empty()) throw ArgumentError("eval item has no gold answers");
    double best = 0;
    for (const auto& g : it.gold_answers) best = std::max(best, nls(it.prediction, g));
    total += best;
  }
  return total / static_cast<double>(items.size());
}

double exact_match(const std::vector<VqaEvalItem>& items, bool case_sensitive) {
  if (items.empty()) throw ArgumentError("exact_match needs at least one item");
  auto key = [&](std::string_view s) {
    return case_sensitive ? text::trim(s) : norm(s);
  };
  std::size_t hits = 0;
  for (const auto& it : items) {
    if (it.gold_answers.empty()) throw ArgumentError("eval item has no gold answers");
    const std::string p = key(it.prediction);
    hits += std::any_of(it.gold_answers.begin(), it.gold_answers.end(),
                        [&](const std::string& g) { return key(g) == p; });
  }
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

double entity_f1(const std::vector<EntityEvalItem>& items) {
  std::size_t matches = 0, n_pred = 0, n_gold = 0;
  for (const auto& it : items) {
    n_pred += it.predicted.size();
    n_gold += it.gold.size();
    std::vector<bool> used(it.gold.size(), false);
    for (const auto& p : it.predicted) {
      for (std::size_t g = 0; g < it.gold.size(); ++g) {
        if (!used[g] && same_pair(p, it.gold[g])) {
          used[g] = true;
          ++matches;
          break;
        }
      }
    }
  }
  if (matches == 0) return 0.0;
  const double p = static_cast<double>(matches) / static_cast<double>(n_pred);
  const double r = static_cast<double>(matches) / static_cast<double>(n_gold);
  return 2 * p * r / (p + r);
}

double entity_anls(const std::vector<EntityEvalItem>& items) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& it : items) {
    for (const auto& g : it.gold) {
      double best = 0;
      for (const auto& p : it.predicted) {
        if (norm(p.first) == norm(g.first)) best = std::max(best, nls(p.second, g.second));
      }
      total += best;
      ++n;
    }
  }
  if (n == 0) throw ArgumentError("entity_anls needs at least one gold pair");
  return total / static_cast<double>(n);
}

const std::vector<std::string>& document_categories() {
  static const std::vector<std::string> names = {
      "letter",        "form",        "email",                  "handwritten",
      "advertisement", "scientific report", "scientific publication", "specification",
      "file folder",   "news article", "budget",                "invoice",
      "presentation",  "questionnaire", "resume",               "memo"};
  return names;
}

const std::set<std::string>& default_excluded_categories() {
  static const std::set<std::string> names = {"memo", "filefolder", "handwritten",
                                              "presentation"};
  return names;
}

std::string canonical_category(std::string_view name) {
  std::string out;
  for (char c : text::to_lower(text::trim(name))) {
    if (c != ' ' && c != '_' && c != '-') out += c;
  }
  return out;
}

namespace {

std::map<std::string, std::pair<std::size_t, std::size_t>> tally(
    const std::vector<ClassifyEvalItem>& items) {
  std::set<std::string> known;
  for (const auto& c : document_categories()) known.insert(canonical_category(c));
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  for (const auto& it : items) {
    const std::string cat = canonical_category(it.gold_category);
    if (!known.count(cat)) throw ArgumentError("unknown category '" + it.gold_category + "'");
    auto& c = counts[cat];
    c.first += norm(it.prediction) == norm(it.gold_label);
    ++c.second;
  }
  return counts;
}

}  // namespace

std::map<std::string, double> category_accuracy(const std::vector<ClassifyEvalItem>& items) {
  std::map<std::string, double> out;
  for (const auto& [cat, c] : tally(items)) {
    out[cat] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
  return out;
}

double mean_accuracy(const std::vector<ClassifyEvalItem>& items,
                     const std::set<std::string>& exclude) {
  std::set<std::string> skip;
  for (const auto& e : exclude) skip.insert(canonical_category(e));
  double total = 0;
  std::size_t n = 0;
  for (const auto& [cat, acc] : category_accuracy(items)) {
    if (skip.count(cat)) continue;
    total += acc;
    ++n;
  }
  if (n == 0) throw ArgumentError("no categories left to average");
  return total / static_cast<double>(n);
}

}  // namespace dockd
