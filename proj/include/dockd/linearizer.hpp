#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dockd/core.hpp"

namespace dockd {

struct LinearizeOptions {
  /// Words whose vertical centers are within this fraction of the median word
  /// height of a line's anchor word join that line.
  double line_merge_frac = 0.5;
  /// Emit a left column before a right column when a vertical gutter exists.
  bool column_split = false;
  /// Narrowest horizontal gap (normalized width) accepted as a gutter.
  double min_column_gap = 0.02;
};

enum class LineKind { body, heading, table_row, table_rule };

struct RenderedLine {
  LineKind kind = LineKind::body;
  /// 1-based for body lines, 0 for unnumbered decoration lines.
  int number = 0;
  std::vector<std::size_t> word_indices;
  std::string text;
};

class LinearizedText {
 public:
  LinearizedText() = default;
  explicit LinearizedText(std::vector<RenderedLine> lines);

  const std::string& text() const { return text_; }
  const std::vector<RenderedLine>& lines() const { return lines_; }

  struct LineEntry {
    int line_number;
    std::vector<std::size_t> word_indices;
  };
  /// Numbered body lines only.
  std::vector<LineEntry> line_map() const;

 private:
  std::vector<RenderedLine> lines_;
  std::string text_;
};

/// Markdown-style, line-numbered rendition of `doc`:
///   body lines    "N: word word ..."   (N counts from 1, gapless)
///   headings      "# word word ..."
///   tables        "| a | b |" rows with "|---|---|" after the first row
///   KV pairs      "key: value" inline within their line
/// Throws DocumentError when headings and tables claim the same word.
LinearizedText linearize(const Document& doc, const LinearizeOptions& opts = {});

inline const std::string& render_for_prompt(const LinearizedText& lin) {
  return lin.text();
}

}  // namespace dockd
