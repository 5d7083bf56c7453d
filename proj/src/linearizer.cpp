#include "dockd/linearizer.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "dockd/text.hpp"

namespace dockd {
namespace {

enum class Role { body, heading, table };

struct Extent {
  double x0 = 1, y0 = 1, x1 = 0, y1 = 0;
  double top_cy = std::numeric_limits<double>::infinity();
  bool empty = true;

  void add(const BBox& b) {
    x0 = std::min(x0, b.x0());
    y0 = std::min(y0, b.y0());
    x1 = std::max(x1, b.x1());
    y1 = std::max(y1, b.y1());
    top_cy = std::min(top_cy, b.center_y());
    empty = false;
  }
  double cy() const { return empty ? 0.0 : 0.5 * (y0 + y1); }
};

// A body segment is one word, or one KV pair rendered as a unit.
struct Segment {
  std::vector<std::size_t> indices;
  std::string text;
  Extent extent;
  std::size_t first_index() const { return indices.front(); }
};

// Headings and tables are pre-rendered blocks placed by vertical position.
struct Block {
  std::vector<RenderedLine> lines;
  Extent extent;
  std::size_t order_index;
  double key() const { return extent.empty ? 0.0 : extent.top_cy; }
};

double median_height(const Document& doc) {
  std::vector<double> hs;
  for (const auto& w : doc.words()) {
    if (w.box().height() > 0) hs.push_back(w.box().height());
  }
  if (hs.empty()) return 0.0;
  std::sort(hs.begin(), hs.end());
  const std::size_t m = hs.size() / 2;
  return hs.size() % 2 ? hs[m] : 0.5 * (hs[m - 1] + hs[m]);
}

std::vector<Role> assign_roles(const Document& doc) {
  std::vector<Role> roles(doc.words().size(), Role::body);
  std::vector<bool> claimed(doc.words().size(), false);
  auto claim = [&](std::size_t i, Role r) {
    if (claimed[i]) {
      throw DocumentError("document '" + doc.id() + "': word index " +
                          std::to_string(i) +
                          " claimed by more than one heading or table cell");
    }
    claimed[i] = true;
    roles[i] = r;
  };
  for (const auto& h : doc.headings()) {
    for (std::size_t i = h.begin; i < h.end; ++i) claim(i, Role::heading);
  }
  for (const auto& t : doc.tables()) {
    for (const auto& row : t.rows) {
      for (const auto& cell : row) {
        for (auto i : cell) claim(i, Role::table);
      }
    }
  }
  return roles;
}

std::vector<Segment> body_segments(const Document& doc,
                                   const std::vector<Role>& roles) {
  const auto& words = doc.words();
  std::vector<bool> in_kv(words.size(), false);
  std::vector<Segment> segs;

  for (const auto& kv : doc.kv_pairs()) {
    bool all_body = true;
    for (const auto* list : {&kv.key_word_indices, &kv.value_word_indices}) {
      for (auto i : *list) all_body = all_body && roles[i] == Role::body;
    }
    if (!all_body) continue;
    Segment s;
    std::vector<std::string> key, value;
    for (auto i : kv.key_word_indices) {
      key.push_back(words[i].text());
      s.indices.push_back(i);
      s.extent.add(words[i].box());
      in_kv[i] = true;
    }
    for (auto i : kv.value_word_indices) {
      value.push_back(words[i].text());
      s.indices.push_back(i);
      s.extent.add(words[i].box());
      in_kv[i] = true;
    }
    std::string k = text::join(key, " ");
    s.text = k + (k.ends_with(':') ? " " : ": ") + text::join(value, " ");
    segs.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (roles[i] != Role::body || in_kv[i]) continue;
    Segment s;
    s.indices = {i};
    s.text = words[i].text();
    s.extent.add(words[i].box());
    segs.push_back(std::move(s));
  }
  return segs;
}

std::vector<Block> blocks(const Document& doc) {
  const auto& words = doc.words();
  std::vector<Block> out;
  for (const auto& h : doc.headings()) {
    Block b;
    RenderedLine line;
    line.kind = LineKind::heading;
    std::vector<std::string> parts;
    for (std::size_t i = h.begin; i < h.end; ++i) {
      parts.push_back(words[i].text());
      line.word_indices.push_back(i);
      b.extent.add(words[i].box());
    }
    line.text = "# " + text::join(parts, " ");
    b.lines.push_back(std::move(line));
    b.order_index = h.begin;
    out.push_back(std::move(b));
  }
  for (const auto& t : doc.tables()) {
    if (t.rows.empty()) continue;
    Block b;
    b.order_index = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      RenderedLine row;
      row.kind = LineKind::table_row;
      row.text = "|";
      for (const auto& cell : t.rows[r]) {
        std::vector<std::string> parts;
        for (auto i : cell) {
          parts.push_back(words[i].text());
          row.word_indices.push_back(i);
          b.extent.add(words[i].box());
          b.order_index = std::min(b.order_index, i);
        }
        row.text += " " + text::join(parts, " ") + " |";
      }
      b.lines.push_back(std::move(row));
      if (r == 0) {
        RenderedLine rule;
        rule.kind = LineKind::table_rule;
        rule.text = "|";
        for (std::size_t c = 0; c < t.rows[r].size(); ++c) rule.text += "---|";
        b.lines.push_back(std::move(rule));
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

// Either a grouped body line or a block, ready to be ordered vertically.
struct Item {
  double key;
  double x0;
  std::size_t tiebreak;
  std::vector<const Segment*> line;  // body line when non-empty
  const Block* block = nullptr;
};

std::vector<Item> group_region(const std::vector<const Segment*>& segs,
                               const std::vector<const Block*>& blks,
                               double threshold) {
  std::vector<const Segment*> sorted = segs;
  std::sort(sorted.begin(), sorted.end(), [](const Segment* a, const Segment* b) {
    if (a->extent.cy() != b->extent.cy()) return a->extent.cy() < b->extent.cy();
    if (a->extent.x0 != b->extent.x0) return a->extent.x0 < b->extent.x0;
    return a->first_index() < b->first_index();
  });

  std::vector<Item> items;
  for (const Segment* s : sorted) {
    if (!items.empty() && s->extent.cy() - items.back().key <= threshold) {
      items.back().line.push_back(s);
      continue;
    }
    items.push_back(Item{s->extent.cy(), s->extent.x0, s->first_index(), {s}, nullptr});
  }
  for (auto& it : items) {
    std::sort(it.line.begin(), it.line.end(), [](const Segment* a, const Segment* b) {
      if (a->extent.x0 != b->extent.x0) return a->extent.x0 < b->extent.x0;
      return a->first_index() < b->first_index();
    });
    it.x0 = it.line.front()->extent.x0;
    it.tiebreak = it.line.front()->first_index();
  }
  for (const Block* b : blks) {
    items.push_back(Item{b->key(), b->extent.empty ? 0.0 : b->extent.x0,
                         b->order_index, {}, b});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.x0 != b.x0) return a.x0 < b.x0;
    return a.tiebreak < b.tiebreak;
  });
  return items;
}

struct Gutter {
  double left;   // segments with x1 <= left are in the left column
  double right;  // segments with x0 >= right are in the right column
};

// Widest horizontal gap in the x-projection of segments from visual lines
// that themselves contain a gap of at least min_gap. Single-run lines such as
// centred titles do not shape the gutter.
std::optional<Gutter> find_gutter(const std::vector<Item>& rows, double min_gap) {
  std::vector<std::pair<double, double>> spans;
  for (const auto& row : rows) {
    bool split = false;
    double reach = row.line.front()->extent.x1;
    for (std::size_t i = 1; i < row.line.size(); ++i) {
      split |= row.line[i]->extent.x0 - reach >= min_gap;
      reach = std::max(reach, row.line[i]->extent.x1);
    }
    if (!split) continue;
    for (const Segment* s : row.line) spans.emplace_back(s->extent.x0, s->extent.x1);
  }
  if (spans.size() < 2) return std::nullopt;
  std::sort(spans.begin(), spans.end());
  std::optional<Gutter> best;
  double best_width = 0;
  double reach = spans.front().second;
  for (std::size_t i = 1; i < spans.size(); ++i) {
    const double gap = spans[i].first - reach;
    if (gap > best_width && gap >= min_gap) {
      best_width = gap;
      best = Gutter{reach, spans[i].first};
    }
    reach = std::max(reach, spans[i].second);
  }
  return best;
}

}  // namespace

LinearizedText::LinearizedText(std::vector<RenderedLine> lines)
    : lines_(std::move(lines)) {
  int expected = 1;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    const auto& l = lines_[i];
    if (l.kind == LineKind::body) {
      if (l.number != expected) {
        throw DocumentError("linearized body lines must be numbered 1..L");
      }
      ++expected;
    } else if (l.number != 0) {
      throw DocumentError("only body lines carry line numbers");
    }
    if (i) text_ += '\n';
    text_ += l.text;
  }
}

std::vector<LinearizedText::LineEntry> LinearizedText::line_map() const {
  std::vector<LineEntry> out;
  for (const auto& l : lines_) {
    if (l.kind == LineKind::body) out.push_back({l.number, l.word_indices});
  }
  return out;
}

LinearizedText linearize(const Document& doc, const LinearizeOptions& opts) {
  if (!(opts.line_merge_frac >= 0.0)) {
    throw ArgumentError("line_merge_frac must be non-negative");
  }
  const auto roles = assign_roles(doc);
  const auto segs = body_segments(doc, roles);
  const auto blks = blocks(doc);
  const double threshold = opts.line_merge_frac * median_height(doc);

  std::vector<const Segment*> sp;
  for (const auto& s : segs) sp.push_back(&s);
  std::vector<const Block*> bp;
  for (const auto& b : blks) bp.push_back(&b);

  std::vector<Item> ordered;
  std::optional<Gutter> gutter;
  std::vector<Item> rows;
  if (opts.column_split) {
    rows = group_region(sp, {}, threshold);
    gutter = find_gutter(rows, opts.min_column_gap);
  }

  if (!gutter) {
    ordered = group_region(sp, bp, threshold);
  } else {
    // Blocks and body lines crossing the gutter span both columns and cut the
    // page into horizontal bands; each band is read left column first.
    auto crosses = [&](const Extent& e) {
      return e.empty || (e.x0 < gutter->right && e.x1 > gutter->left);
    };
    std::vector<Item> cuts;
    std::vector<const Block*> left_blocks, right_blocks;
    for (const Block* b : bp) {
      if (crosses(b->extent)) {
        cuts.push_back(Item{b->key(), b->extent.empty ? 0.0 : b->extent.x0, b->order_index,
                            {}, b});
      } else {
        (b->extent.x1 <= gutter->left ? left_blocks : right_blocks).push_back(b);
      }
    }
    std::vector<const Segment*> column_segs;
    for (auto& row : rows) {
      const bool spanning = std::any_of(row.line.begin(), row.line.end(),
                                        [&](const Segment* s) { return crosses(s->extent); });
      if (spanning) {
        cuts.push_back(std::move(row));
      } else {
        column_segs.insert(column_segs.end(), row.line.begin(), row.line.end());
      }
    }
    std::stable_sort(cuts.begin(), cuts.end(), [](const Item& a, const Item& b) {
      if (a.key != b.key) return a.key < b.key;
      if (a.x0 != b.x0) return a.x0 < b.x0;
      return a.tiebreak < b.tiebreak;
    });
    auto band_of = [&](double key) {
      std::size_t band = 0;
      while (band < cuts.size() && cuts[band].key <= key) ++band;
      return band;
    };
    const std::size_t nb = cuts.size() + 1;
    std::vector<std::vector<const Segment*>> lseg(nb), rseg(nb);
    std::vector<std::vector<const Block*>> lblk(nb), rblk(nb);
    for (const Segment* s : column_segs) {
      (s->extent.x1 <= gutter->left ? lseg : rseg)[band_of(s->extent.cy())].push_back(s);
    }
    for (const Block* b : left_blocks) lblk[band_of(b->key())].push_back(b);
    for (const Block* b : right_blocks) rblk[band_of(b->key())].push_back(b);
    for (std::size_t band = 0; band < nb; ++band) {
      if (band > 0) ordered.push_back(std::move(cuts[band - 1]));
      for (auto& it : group_region(lseg[band], lblk[band], threshold)) {
        ordered.push_back(std::move(it));
      }
      for (auto& it : group_region(rseg[band], rblk[band], threshold)) {
        ordered.push_back(std::move(it));
      }
    }
  }

  std::vector<RenderedLine> lines;
  int number = 0;
  for (const auto& it : ordered) {
    if (it.block) {
      for (const auto& l : it.block->lines) lines.push_back(l);
      continue;
    }
    RenderedLine line;
    line.kind = LineKind::body;
    line.number = ++number;
    std::vector<std::string> parts;
    for (const Segment* s : it.line) {
      parts.push_back(s->text);
      line.word_indices.insert(line.word_indices.end(), s->indices.begin(),
                               s->indices.end());
    }
    line.text = std::to_string(line.number) + ": " + text::join(parts, " ");
    lines.push_back(std::move(line));
  }
  return LinearizedText(std::move(lines));
}

}  // namespace dockd
