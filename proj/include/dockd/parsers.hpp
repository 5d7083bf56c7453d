#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dockd/core.hpp"

// Turn raw teacher completions into annotations. Every parser is total: it
// returns structured data or throws ParseError, never anything else.
namespace dockd {

/// "Question[ N]: ..." / "Answer[ N]: ..." blocks, numbered or not. Lines
/// that follow a header without a blank line in between continue it. A
/// question without a matching answer (or the reverse) is dropped; when both
/// carry numbers they must agree. Throws ParseError when a non-blank
/// completion yields no pair.
std::vector<QAPair> parse_qa_pairs(std::string_view completion);

/// "N. <regular>value</regular> --- field" lines. The first line may start
/// mid-entity ("value</regular> --- field") because the prompt primes
/// "1. <regular>".
std::vector<EntityRecord> parse_entity_list(std::string_view completion);

/// Field name from the first completion line, with any echoed continuation
/// ("2. <kv>...") and trailing '.', ':', ';' removed.
std::string parse_kv_field(std::string_view completion);

/// One label per line, enumeration markers stripped, lines over
/// kMaxLabelChars dropped, case-insensitive duplicates removed.
std::vector<std::string> parse_label_list(std::string_view completion);

inline constexpr std::size_t kMaxLabelChars = 120;

/// First sentence of the completion.
std::string parse_description(std::string_view completion);

}  // namespace dockd
