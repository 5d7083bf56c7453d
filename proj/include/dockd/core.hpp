#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dockd/errors.hpp"

namespace dockd {

/// Axis-aligned word box in normalized page coordinates, origin top-left.
class BBox {
 public:
  BBox() = default;
  /// Throws DocumentError unless 0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1.
  BBox(double x0, double y0, double x1, double y1);

  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double height() const { return y1_ - y0_; }
  double center_y() const { return 0.5 * (y0_ + y1_); }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x0_ = 0, y0_ = 0, x1_ = 0, y1_ = 0;
};

class Word {
 public:
  /// Throws DocumentError on empty text or text containing a newline.
  Word(std::string text, BBox box);

  const std::string& text() const { return text_; }
  const BBox& box() const { return box_; }

  friend bool operator==(const Word&, const Word&) = default;

 private:
  std::string text_;
  BBox box_;
};

struct KVPair {
  std::vector<std::size_t> key_word_indices;
  std::vector<std::size_t> value_word_indices;

  friend bool operator==(const KVPair&, const KVPair&) = default;
};

/// rows -> cells -> word indices; a cell may be empty.
struct TableRegion {
  std::vector<std::vector<std::vector<std::size_t>>> rows;

  friend bool operator==(const TableRegion&, const TableRegion&) = default;
};

/// Half-open word-index range [begin, end) marking a heading.
struct HeadingRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const HeadingRange&, const HeadingRange&) = default;
};

/// One OCR'd page plus optional layout annotations. Immutable after
/// construction; the constructor validates every cross-reference.
class Document {
 public:
  Document(std::string id, std::vector<Word> words,
           std::vector<KVPair> kv_pairs = {},
           std::vector<TableRegion> tables = {},
           std::vector<HeadingRange> headings = {});

  const std::string& id() const { return id_; }
  const std::vector<Word>& words() const { return words_; }
  const std::vector<KVPair>& kv_pairs() const { return kv_pairs_; }
  const std::vector<TableRegion>& tables() const { return tables_; }
  const std::vector<HeadingRange>& headings() const { return headings_; }

  friend bool operator==(const Document&, const Document&) = default;

 private:
  std::string id_;
  std::vector<Word> words_;
  std::vector<KVPair> kv_pairs_;
  std::vector<TableRegion> tables_;
  std::vector<HeadingRange> headings_;
};

struct QAPair {
  std::string question;
  std::string answer;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

enum class EntityKind { regular, kv };

struct EntityRecord {
  std::string field;
  std::string value;
  EntityKind kind = EntityKind::regular;

  friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct ClassLabelSet {
  std::string description;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  std::map<std::string, std::string> negative_descriptions;

  friend bool operator==(const ClassLabelSet&, const ClassLabelSet&) = default;
};

enum class TaskKind { vqa, entity, classify };

struct TaskSample {
  std::string doc_id;
  TaskKind task = TaskKind::vqa;
  std::string prompt;
  std::string answer;
  std::map<std::string, std::string> meta;

  friend bool operator==(const TaskSample&, const TaskSample&) = default;
};

// Checked constructors for the annotation aggregates. Each throws
// ArgumentError when the value's invariants do not hold.
QAPair make_qa_pair(std::string question, std::string answer);
EntityRecord make_entity(std::string field, std::string value, EntityKind kind);
/// Also removes negatives that collide with a positive (lowercase, trimmed).
ClassLabelSet make_label_set(std::string description,
                             std::vector<std::string> positives,
                             std::vector<std::string> negatives);
TaskSample make_task_sample(std::string doc_id, TaskKind task,
                            std::string prompt, std::string answer,
                            std::map<std::string, std::string> meta = {});

std::string to_string(EntityKind kind);
EntityKind entity_kind_from_string(const std::string& s);
std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

/// Words joined by single spaces in stored order.
std::string raw_text(const Document& doc);

/// raw_text with every word belonging to a KV pair (key or value) omitted.
std::string text_without_kv(const Document& doc);

/// raw_text with each KV pair emitted contiguously as "<kv>key value</kv>" at
/// the position of its first word. Throws DocumentError when two KV pairs'
/// index spans interleave.
std::string text_with_kv_tags(const Document& doc);

/// "<kv>key value</kv>" for one pair of `doc`.
std::string kv_span(const Document& doc, const KVPair& kv);

}  // namespace dockd
