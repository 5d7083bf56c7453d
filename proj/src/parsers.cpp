#include "dockd/parsers.hpp"

#include <optional>
#include <set>

#include "dockd/errors.hpp"
#include "dockd/text.hpp"

namespace dockd {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_blank(char c) { return c == ' ' || c == '\t'; }

struct Header {
  bool question;
  std::optional<long> number;
  std::string body;
};

// Matches "Question[ N]:" / "Answer[ N]:" at the start of a line.
std::optional<Header> match_header(std::string_view line) {
  std::string_view s = text::trim_view(line);
  bool question;
  if (text::starts_with_ci(s, "question")) {
    question = true;
    s.remove_prefix(8);
  } else if (text::starts_with_ci(s, "answer")) {
    question = false;
    s.remove_prefix(6);
  } else {
    return std::nullopt;
  }
  std::size_t i = 0;
  while (i < s.size() && is_blank(s[i])) ++i;
  std::optional<long> number;
  std::size_t digits = i;
  while (digits < s.size() && is_digit(s[digits]) && digits - i < 9) ++digits;
  if (digits > i) {
    number = std::stol(std::string(s.substr(i, digits - i)));
    i = digits;
    while (i < s.size() && is_blank(s[i])) ++i;
  }
  if (i >= s.size() || s[i] != ':') return std::nullopt;
  return Header{question, number, text::trim(s.substr(i + 1))};
}

void append_continuation(std::string& target, std::string_view line) {
  auto t = text::trim_view(line);
  if (t.empty()) return;
  if (!target.empty()) target += ' ';
  target += t;
}

// "<regular>value</regular> --- field" once the leading "N. " is gone.
std::optional<EntityRecord> match_entity_tail(std::string_view s, bool need_open_tag) {
  constexpr std::string_view kOpen = "<regular>";
  constexpr std::string_view kClose = "</regular>";
  if (need_open_tag) {
    s = text::trim_view(s);
    if (!s.starts_with(kOpen)) return std::nullopt;
    s.remove_prefix(kOpen.size());
  }
  std::size_t close = s.find(kClose);
  if (close == std::string_view::npos) return std::nullopt;
  std::string value = text::trim(s.substr(0, close));
  std::string_view rest = text::trim_view(s.substr(close + kClose.size()));
  if (!rest.starts_with("---")) return std::nullopt;
  std::string field = text::trim(rest.substr(3));
  if (value.empty() || field.empty()) return std::nullopt;
  return EntityRecord{std::move(field), std::move(value), EntityKind::regular};
}

// Strips a leading "12." returning the remainder, or nullopt.
std::optional<std::string_view> strip_number_dot(std::string_view s) {
  s = text::trim_view(s);
  std::size_t i = 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == 0 || i >= s.size() || s[i] != '.') return std::nullopt;
  return s.substr(i + 1);
}

}  // namespace

std::vector<QAPair> parse_qa_pairs(std::string_view completion) {
  std::vector<QAPair> pairs;
  std::optional<Header> question;
  std::optional<Header> answer;
  // Which header receives continuation lines: nullptr after a blank line.
  std::string* open = nullptr;

  auto flush_answer = [&] {
    if (question && answer) {
      auto q = text::trim(question->body);
      auto a = text::trim(answer->body);
      if (!q.empty() && !a.empty()) pairs.push_back(QAPair{std::move(q), std::move(a)});
      question.reset();
    }
    answer.reset();
  };

  for (auto line : text::split_lines(completion)) {
    if (text::trim_view(line).empty()) {
      open = nullptr;
      continue;
    }
    auto header = match_header(line);
    if (!header) {
      if (open) append_continuation(*open, line);
      continue;
    }
    flush_answer();
    if (header->question) {
      question = std::move(header);  // an unanswered earlier question is dropped
      open = &question->body;
    } else {
      const bool numbers_agree = !question || !question->number || !header->number ||
                                 *question->number == *header->number;
      if (question && numbers_agree) {
        answer = std::move(header);
        open = &answer->body;
      } else {
        open = nullptr;  // orphan answer
      }
    }
  }
  flush_answer();

  if (pairs.empty() && !text::trim_view(completion).empty()) {
    throw ParseError("no question/answer pair found in completion");
  }
  return pairs;
}

std::vector<EntityRecord> parse_entity_list(std::string_view completion) {
  std::vector<EntityRecord> out;
  bool first = true;
  for (auto line : text::split_lines(completion)) {
    if (text::trim_view(line).empty()) continue;
    std::optional<EntityRecord> rec;
    if (auto rest = strip_number_dot(line)) {
      rec = match_entity_tail(*rest, true);
    } else if (first) {
      rec = match_entity_tail(line, false);
    }
    first = false;
    if (rec) out.push_back(std::move(*rec));
  }
  return out;
}

std::string parse_kv_field(std::string_view completion) {
  std::string_view line = text::split_lines(completion).front();
  // An echoed continuation on the same line starts at "N. <kv>".
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (!is_digit(line[i]) || (i > 0 && is_digit(line[i - 1]))) continue;
    std::size_t j = i;
    while (j < line.size() && is_digit(line[j])) ++j;
    if (j < line.size() && line[j] == '.') {
      auto rest = text::trim_view(line.substr(j + 1));
      if (rest.starts_with("<kv>")) {
        line = line.substr(0, i);
        break;
      }
    }
  }
  std::string field = text::trim(line);
  while (!field.empty() &&
         (field.back() == '.' || field.back() == ':' || field.back() == ';')) {
    field.pop_back();
    field = text::trim(field);
  }
  if (field.empty()) throw ParseError("empty field name in KV completion");
  return field;
}

std::vector<std::string> parse_label_list(std::string_view completion) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto raw : text::split_lines(completion)) {
    std::string_view s = text::trim_view(raw);
    if (auto rest = strip_number_dot(s)) {
      s = *rest;
    } else if (!s.empty() && s.size() > 1 && is_digit(s[0])) {
      std::size_t i = 0;
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i < s.size() && s[i] == ')') s.remove_prefix(i + 1);
    } else if (s.starts_with("-") || s.starts_with("*")) {
      s.remove_prefix(1);
    } else if (s.starts_with("\xE2\x80\xA2")) {  // U+2022 bullet
      s.remove_prefix(3);
    }
    std::string label = text::trim(s);
    if (label.empty() || text::utf8_length(label) > kMaxLabelChars) continue;
    if (!seen.insert(text::to_lower(label)).second) continue;
    out.push_back(std::move(label));
  }
  return out;
}

std::string parse_description(std::string_view completion) {
  std::string_view s = text::trim_view(completion);
  if (s.empty()) throw ParseError("empty description");
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    if (s[i] != '.' && s[i] != '!' && s[i] != '?') continue;
    std::size_t j = i + 1;
    if (j >= s.size() || !(s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) {
      continue;
    }
    while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) {
      ++j;
    }
    if (j < s.size() && s[j] >= 'A' && s[j] <= 'Z') return std::string(s.substr(0, i + 1));
  }
  return std::string(s);
}

}  // namespace dockd
