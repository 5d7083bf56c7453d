#include "dockd/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dockd/errors.hpp"
#include "dockd/hash.hpp"
#include "dockd/text.hpp"
#include "embedded_templates.hpp"

namespace dockd {
namespace {

constexpr std::string_view kSuffix = "_PLACE_HOLDER";

bool is_name_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

struct Token {
  std::size_t pos;
  std::size_t len;
  std::string name;  // short name, suffix stripped
};

std::vector<Token> scan(std::string_view body) {
  std::vector<Token> out;
  std::size_t i = 0;
  while ((i = body.find('{', i)) != std::string_view::npos) {
    std::size_t j = i + 1;
    while (j < body.size() && is_name_char(body[j])) ++j;
    if (j < body.size() && body[j] == '}') {
      std::string_view inner = body.substr(i + 1, j - i - 1);
      if (inner.size() > kSuffix.size() && inner.ends_with(kSuffix)) {
        out.push_back(Token{i, j - i + 1,
                            std::string(inner.substr(0, inner.size() - kSuffix.size()))});
        i = j + 1;
        continue;
      }
    }
    ++i;
  }
  return out;
}

std::map<std::string, std::string> parse_manifest(std::string_view manifest) {
  std::map<std::string, std::string> out;
  for (auto line : text::split_lines(manifest)) {
    auto words = text::split_words(line);
    if (words.empty()) continue;
    if (words.size() != 2) {
      throw TemplateError("malformed SHA256SUMS line: " + std::string(line));
    }
    std::string_view file = words[1];
    if (file.starts_with("*")) file.remove_prefix(1);
    out[std::string(file)] = std::string(words[0]);
  }
  return out;
}

void require_count(int count) {
  if (count < 1) throw ArgumentError("count must be >= 1");
}

}  // namespace

std::string to_string(TemplateName name) {
  switch (name) {
    case TemplateName::vqa_gen: return "vqa_gen";
    case TemplateName::entity_gen: return "entity_gen";
    case TemplateName::kv_name_gen: return "kv_name_gen";
    case TemplateName::class_desc_gen: return "class_desc_gen";
    case TemplateName::class_pos_gen: return "class_pos_gen";
    case TemplateName::class_neg_gen: return "class_neg_gen";
    case TemplateName::vqa_zeroshot: return "vqa_zeroshot";
    case TemplateName::classify_zeroshot_step1: return "classify_zeroshot_step1";
    case TemplateName::classify_zeroshot_step2: return "classify_zeroshot_step2";
    case TemplateName::entity_task: return "entity_task";
    case TemplateName::vqa_task: return "vqa_task";
    case TemplateName::classify_task: return "classify_task";
  }
  throw TemplateError("unknown template enum value");
}

TemplateName template_from_string(std::string_view name) {
  for (auto t : kAllTemplates) {
    if (to_string(t) == name) return t;
  }
  throw TemplateError("unknown template '" + std::string(name) + "'");
}

TemplateStore TemplateStore::from_files(
    const std::map<std::string, std::string>& files) {
  auto manifest_it = files.find("SHA256SUMS");
  if (manifest_it == files.end()) throw TemplateError("missing SHA256SUMS manifest");
  const auto manifest = parse_manifest(manifest_it->second);

  TemplateStore store;
  for (auto t : kAllTemplates) {
    const std::string file = to_string(t) + ".txt";
    auto it = files.find(file);
    if (it == files.end()) throw TemplateError("missing template " + file);
    auto expected = manifest.find(file);
    if (expected == manifest.end()) {
      throw TemplateError("template " + file + " is not listed in SHA256SUMS");
    }
    std::string actual = sha256_hex(it->second);
    if (actual != expected->second) {
      throw TemplateError("template " + file + " fails hash check: expected " +
                          expected->second + ", got " + actual);
    }
    store.bodies_[t] = it->second;
    store.hashes_[t] = std::move(actual);
  }
  return store;
}

const TemplateStore& TemplateStore::builtin() {
  static const TemplateStore store = [] {
    std::map<std::string, std::string> files;
    for (std::size_t i = 0; i < detail::kEmbeddedFileCount; ++i) {
      const auto& f = detail::kEmbeddedFiles[i];
      files[f.name] = std::string(reinterpret_cast<const char*>(f.data), f.size);
    }
    return from_files(files);
  }();
  return store;
}

TemplateStore TemplateStore::load_directory(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  auto read = [&](const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw TemplateError("cannot read " + (dir / name).string());
    std::ostringstream ss;
    ss << in.rdbuf();
    files[name] = ss.str();
  };
  read("SHA256SUMS");
  for (auto t : kAllTemplates) read(to_string(t) + ".txt");
  return from_files(files);
}

const std::string& TemplateStore::body(TemplateName name) const {
  return bodies_.at(name);
}

const std::string& TemplateStore::sha256(TemplateName name) const {
  return hashes_.at(name);
}

std::vector<std::string> TemplateStore::placeholders(TemplateName name) const {
  std::vector<std::string> out;
  for (const auto& tok : scan(body(name))) {
    if (std::find(out.begin(), out.end(), tok.name) == out.end()) {
      out.push_back(tok.name);
    }
  }
  return out;
}

std::string TemplateStore::render(TemplateName name, const Bindings& bindings) const {
  const std::string& src = body(name);
  std::map<std::string, bool> used;
  std::string out;
  std::size_t cursor = 0;
  for (const auto& tok : scan(src)) {
    auto it = bindings.find(tok.name);
    if (it == bindings.end()) {
      throw TemplateError("template " + to_string(name) + ": placeholder {" +
                          tok.name + std::string(kSuffix) + "} is unbound");
    }
    used[tok.name] = true;
    out.append(src, cursor, tok.pos - cursor);
    out += it->second;
    cursor = tok.pos + tok.len;
  }
  out.append(src, cursor, std::string::npos);
  for (const auto& [key, value] : bindings) {
    if (!used.count(key)) {
      throw TemplateError("template " + to_string(name) + " has no placeholder " +
                          key);
    }
  }
  return out;
}

std::string count_word(int count) {
  static constexpr std::array<const char*, 10> kWords = {
      "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  if (count >= 1 && count <= 10) return kWords[count - 1];
  return std::to_string(count);
}

std::string vqa_gen_prompt(std::string_view linearized_text, int count,
                           const TemplateStore& store) {
  require_count(count);
  return store.render(TemplateName::vqa_gen,
                      {{"LINEARIZED_TEXT", std::string(linearized_text)},
                       {"COUNT", count_word(count)}});
}

std::string entity_gen_prompt(std::string_view text_without_kv,
                              const TemplateStore& store) {
  return store.render(TemplateName::entity_gen,
                      {{"TEXT_WITHOUT_KV", std::string(text_without_kv)}});
}

std::string kv_name_prompt(
    std::string_view text_with_kv_tags,
    const std::vector<std::pair<std::string, std::string>>& constraints,
    std::string_view next_kv_span, const TemplateStore& store) {
  if (!next_kv_span.starts_with("<kv>") || !next_kv_span.ends_with("</kv>") ||
      next_kv_span.size() <= 9 ||
      next_kv_span.find('\n') != std::string_view::npos) {
    throw ArgumentError("next KV span must look like <kv>key value</kv>");
  }
  std::string block;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    block += std::to_string(i + 1) + ". " + constraints[i].first + " --- " +
             constraints[i].second + "\n";
  }
  block += std::to_string(constraints.size() + 1) + ". " +
           std::string(next_kv_span) + " --- ";
  return store.render(TemplateName::kv_name_gen,
                      {{"TEXT_WITH_KV_TAGS", std::string(text_with_kv_tags)},
                       {"CONSTRAINTS", block}});
}

std::string class_desc_prompt(std::string_view text, const TemplateStore& store) {
  return store.render(TemplateName::class_desc_gen, {{"TEXT", std::string(text)}});
}

std::string class_pos_prompt(std::string_view text, std::string_view description,
                             int count, const TemplateStore& store) {
  require_count(count);
  return store.render(TemplateName::class_pos_gen,
                      {{"TEXT", std::string(text)},
                       {"DESCRIPTION", std::string(description)},
                       {"COUNT", std::to_string(count)}});
}

std::string class_neg_prompt(std::string_view text,
                             const std::vector<std::string>& positives, int count,
                             const TemplateStore& store) {
  require_count(count);
  return store.render(TemplateName::class_neg_gen,
                      {{"TEXT", std::string(text)},
                       {"POSITIVES", text::join(positives, "; ")},
                       {"COUNT", std::to_string(count)}});
}

VqaTaskPrompt vqa_task_prompt(std::string_view d_text, std::string_view question,
                              const TemplateStore& store) {
  if (text::trim_view(question).empty()) {
    throw ArgumentError("question must be non-empty");
  }
  return {store.render(TemplateName::vqa_task,
                       {{"DOCUMENT_TEXT", std::string(d_text)},
                        {"QUESTION", std::string(question)}}),
          "Answer: "};
}

std::string entity_task_prompt(std::string_view d_text, std::string_view field,
                               const TemplateStore& store) {
  if (text::trim_view(field).empty()) throw ArgumentError("field must be non-empty");
  if (field.find_first_of("<>") != std::string_view::npos) {
    throw ArgumentError("field must not contain '<' or '>'");
  }
  return store.render(TemplateName::entity_task,
                      {{"DOCUMENT_TEXT", std::string(d_text)},
                       {"FIELD", std::string(field)}});
}

std::string classify_task_prompt(std::string_view d_text,
                                 const std::vector<Candidate>& candidates,
                                 const TemplateStore& store) {
  if (candidates.size() < 2) {
    throw ArgumentError("classification prompt needs at least 2 candidates");
  }
  std::vector<std::string> entries;
  for (const auto& c : candidates) {
    entries.push_back(c.description.empty() ? c.label
                                            : c.label + " (" + c.description + ")");
  }
  return store.render(TemplateName::classify_task,
                      {{"DOCUMENT_TEXT", std::string(d_text)},
                       {"CANDIDATES", text::join(entries, "; ")}});
}

std::string vqa_zeroshot_prompt(std::string_view linearized_text,
                                std::string_view question,
                                const TemplateStore& store) {
  if (text::trim_view(question).empty()) {
    throw ArgumentError("question must be non-empty");
  }
  return store.render(TemplateName::vqa_zeroshot,
                      {{"LINEARIZED_TEXT", std::string(linearized_text)},
                       {"QUESTION", std::string(question)}});
}

std::string classify_zeroshot_prompts(std::string_view text,
                                      const std::optional<std::string>& suggested_type,
                                      const TemplateStore& store) {
  if (!suggested_type) {
    return store.render(TemplateName::classify_zeroshot_step1,
                        {{"TEXT", std::string(text)}});
  }
  return store.render(TemplateName::classify_zeroshot_step2,
                      {{"TEXT", std::string(text)}, {"TYPE", *suggested_type}});
}

}  // namespace dockd
