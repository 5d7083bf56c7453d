#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dockd/hash.hpp"
#include "dockd/io.hpp"
#include "dockd/linearizer.hpp"
#include "dockd/metrics.hpp"
#include "dockd/parsers.hpp"
#include "dockd/prompts.hpp"
#include "dockd/stages.hpp"

namespace py = pybind11;
using dockd::json;

namespace {

// Python objects cross the boundary as JSON text.
json to_json(py::handle obj) {
  if (obj.is_none()) return json::object();
  const auto dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj, py::arg("ensure_ascii") = false).cast<std::string>());
}

py::object from_json(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::list from_rows(const std::vector<json>& rows) {
  py::list out;
  for (const auto& r : rows) out.append(from_json(r));
  return out;
}

std::vector<json> to_rows(py::handle seq) {
  const json j = to_json(seq);
  if (!j.is_array()) throw dockd::ArgumentError("expected a list of records");
  return {j.begin(), j.end()};
}

dockd::Document to_document(py::handle obj) { return dockd::document_from_json(to_json(obj)); }

std::vector<dockd::Document> to_corpus(py::handle seq) {
  return dockd::corpus_from_jsonl(to_rows(seq));
}

dockd::PipelineConfig to_config(py::handle obj) { return dockd::config_from_json(to_json(obj)); }

// Teacher backed by a Python callable taking the prompt and returning the
// completion. Calls take the GIL, so they run one at a time.
class PyBackend : public dockd::Backend {
 public:
  explicit PyBackend(py::function fn) : fn_(std::move(fn)) {}
  ~PyBackend() override {
    py::gil_scoped_acquire gil;
    fn_ = py::function();
  }

  dockd::GenerationResponse complete(const dockd::GenerationRequest& req) override {
    dockd::validate(req);
    dockd::GenerationResponse resp;
    {
      py::gil_scoped_acquire gil;
      try {
        resp.completion = fn_(req.prompt).cast<std::string>();
      } catch (py::error_already_set& e) {
        throw dockd::BackendError(std::string("python backend failed: ") + e.what());
      } catch (const py::cast_error& e) {
        throw dockd::BackendError("python backend must return str");
      }
    }
    resp.request_id = req.request_id;
    resp.backend = name();
    return resp;
  }
  std::string name() const override { return "python"; }

 private:
  py::function fn_;
};

py::list generate(const std::string& task, py::handle corpus, py::handle config,
                  std::optional<std::string> replay_path,
                  std::optional<std::map<std::string, std::string>> completions,
                  std::optional<py::function> backend) {
  const int sources = replay_path.has_value() + completions.has_value() + backend.has_value();
  if (sources > 1) {
    throw dockd::ArgumentError("pass at most one of replay_path, completions, backend");
  }
  const auto t = dockd::stage_task_from_string(task);
  const auto docs = to_corpus(corpus);
  auto cfg = to_config(config);
  if (replay_path) {
    cfg.backend.kind = dockd::BackendKind::stub;
    cfg.backend.replay_path = *replay_path;
  }
  std::shared_ptr<dockd::Backend> impl;
  if (completions) {
    std::map<std::string, std::string> by_hash;
    for (const auto& [prompt, completion] : *completions) {
      by_hash[dockd::sha256_hex(prompt)] = completion;
    }
    impl = std::make_shared<dockd::StubBackend>(std::move(by_hash));
  } else if (backend) {
    impl = std::make_shared<PyBackend>(*backend);
  }
  std::unique_ptr<dockd::Client> client;
  if (impl) {
    client = std::make_unique<dockd::Client>(impl, cfg.backend);
  } else {
    client = std::make_unique<dockd::Client>(cfg.backend);
  }
  std::vector<json> rows;
  {
    py::gil_scoped_release release;
    rows = dockd::generate_stage(t, docs, cfg, *client);
  }
  return from_rows(rows);
}

std::vector<dockd::VqaEvalItem> vqa_items(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& items) {
  std::vector<dockd::VqaEvalItem> out;
  for (const auto& [pred, golds] : items) out.push_back({pred, golds});
  return out;
}

using PairList = std::vector<dockd::FieldValue>;

std::vector<dockd::EntityEvalItem> entity_items(
    const std::vector<std::pair<PairList, PairList>>& items) {
  std::vector<dockd::EntityEvalItem> out;
  for (const auto& [pred, gold] : items) out.push_back({pred, gold});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the dockd document distillation toolkit";

  auto& error = py::register_exception<dockd::Error>(m, "Error");
  py::register_exception<dockd::DocumentError>(m, "DocumentError", error.ptr());
  py::register_exception<dockd::ArgumentError>(m, "ArgumentError", error.ptr());
  py::register_exception<dockd::ParseError>(m, "ParseError", error.ptr());
  py::register_exception<dockd::TemplateError>(m, "TemplateError", error.ptr());
  auto& backend_error = py::register_exception<dockd::BackendError>(m, "BackendError", error.ptr());
  py::register_exception<dockd::AuthError>(m, "AuthError", backend_error.ptr());
  py::register_exception<dockd::ReplayMiss>(m, "ReplayMiss", backend_error.ptr());
  py::register_exception<dockd::CandidateError>(m, "CandidateError", error.ptr());
  py::register_exception<dockd::ExportError>(m, "ExportError", error.ptr());

  // documents
  m.def("validate_document", [](py::handle doc) { to_document(doc); }, py::arg("doc"));
  m.def("raw_text", [](py::handle doc) { return dockd::raw_text(to_document(doc)); }, py::arg("doc"));
  m.def("text_without_kv", [](py::handle doc) { return dockd::text_without_kv(to_document(doc)); },
        py::arg("doc"));
  m.def("text_with_kv_tags",
        [](py::handle doc) { return dockd::text_with_kv_tags(to_document(doc)); }, py::arg("doc"));
  m.def(
      "linearize",
      [](py::handle doc, double line_merge_frac, bool column_split, double min_column_gap) {
        dockd::LinearizeOptions o;
        o.line_merge_frac = line_merge_frac;
        o.column_split = column_split;
        o.min_column_gap = min_column_gap;
        return dockd::linearize(to_document(doc), o).text();
      },
      py::arg("doc"), py::arg("line_merge_frac") = 0.5, py::arg("column_split") = false,
      py::arg("min_column_gap") = 0.02);

  // prompts
  m.def("template_names", [] {
    std::vector<std::string> out;
    for (auto n : dockd::kAllTemplates) out.push_back(dockd::to_string(n));
    return out;
  });
  m.def(
      "render_template",
      [](const std::string& name, const dockd::Bindings& bindings) {
        return dockd::TemplateStore::builtin().render(dockd::template_from_string(name), bindings);
      },
      py::arg("name"), py::arg("bindings"));
  m.def("vqa_gen_prompt", [](const std::string& t, int n) { return dockd::vqa_gen_prompt(t, n); },
        py::arg("text"), py::arg("count") = 3);
  m.def("entity_gen_prompt", [](const std::string& t) { return dockd::entity_gen_prompt(t); },
        py::arg("text_without_kv"));
  m.def(
      "kv_name_prompt",
      [](const std::string& t, const std::vector<std::pair<std::string, std::string>>& c,
         const std::string& span) { return dockd::kv_name_prompt(t, c, span); },
      py::arg("text_with_kv_tags"), py::arg("constraints"), py::arg("next_kv_span"));
  m.def("class_desc_prompt", [](const std::string& t) { return dockd::class_desc_prompt(t); },
        py::arg("text"));
  m.def(
      "class_pos_prompt",
      [](const std::string& t, const std::string& d, int n) { return dockd::class_pos_prompt(t, d, n); },
      py::arg("text"), py::arg("description"), py::arg("count") = 3);
  m.def(
      "class_neg_prompt",
      [](const std::string& t, const std::vector<std::string>& p, int n) {
        return dockd::class_neg_prompt(t, p, n);
      },
      py::arg("text"), py::arg("positives"), py::arg("count") = 10);
  m.def(
      "vqa_task_prompt",
      [](const std::string& t, const std::string& q) {
        auto r = dockd::vqa_task_prompt(t, q);
        return std::make_pair(r.prompt, r.answer_prefix);
      },
      py::arg("text"), py::arg("question"));
  m.def(
      "entity_task_prompt",
      [](const std::string& t, const std::string& f) { return dockd::entity_task_prompt(t, f); },
      py::arg("text"), py::arg("field"));
  m.def(
      "classify_task_prompt",
      [](const std::string& t, const std::vector<std::pair<std::string, std::string>>& cands) {
        std::vector<dockd::Candidate> c;
        for (const auto& [label, desc] : cands) c.push_back({label, desc});
        return dockd::classify_task_prompt(t, c);
      },
      py::arg("text"), py::arg("candidates"));

  // parsers
  m.def(
      "parse_qa_pairs",
      [](const std::string& s) {
        std::vector<std::pair<std::string, std::string>> out;
        for (auto& p : dockd::parse_qa_pairs(s)) out.emplace_back(p.question, p.answer);
        return out;
      },
      py::arg("completion"));
  m.def(
      "parse_entity_list",
      [](const std::string& s) {
        std::vector<std::pair<std::string, std::string>> out;
        for (auto& e : dockd::parse_entity_list(s)) out.emplace_back(e.field, e.value);
        return out;
      },
      py::arg("completion"));
  m.def("parse_kv_field", [](const std::string& s) { return dockd::parse_kv_field(s); },
        py::arg("completion"));
  m.def("parse_label_list", [](const std::string& s) { return dockd::parse_label_list(s); },
        py::arg("completion"));
  m.def("parse_description", [](const std::string& s) { return dockd::parse_description(s); },
        py::arg("completion"));

  // metrics
  m.def("levenshtein", [](const std::string& a, const std::string& b) { return dockd::levenshtein(a, b); });
  m.def("nls", [](const std::string& a, const std::string& b) { return dockd::nls(a, b); });
  m.def(
      "anls", [](const std::vector<std::pair<std::string, std::vector<std::string>>>& items) {
        return dockd::anls(vqa_items(items));
      },
      py::arg("items"));
  m.def(
      "exact_match",
      [](const std::vector<std::pair<std::string, std::vector<std::string>>>& items, bool cs) {
        return dockd::exact_match(vqa_items(items), cs);
      },
      py::arg("items"), py::arg("case_sensitive") = false);
  m.def(
      "entity_f1",
      [](const std::vector<std::pair<PairList, PairList>>& items) {
        return dockd::entity_f1(entity_items(items));
      },
      py::arg("items"));
  m.def(
      "entity_anls",
      [](const std::vector<std::pair<PairList, PairList>>& items) {
        return dockd::entity_anls(entity_items(items));
      },
      py::arg("items"));
  m.def("document_categories", &dockd::document_categories);
  m.def("default_excluded_categories", &dockd::default_excluded_categories);
  m.def(
      "mean_accuracy",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& items,
         const std::set<std::string>& exclude) {
        std::vector<dockd::ClassifyEvalItem> v;
        for (const auto& [p, g, c] : items) v.push_back({p, g, c});
        return dockd::mean_accuracy(v, exclude);
      },
      py::arg("items"), py::arg("exclude") = std::set<std::string>{});

  // pipeline stages
  m.def("generate", &generate, py::arg("task"), py::arg("corpus"), py::arg("config") = py::none(),
        py::arg("replay_path") = py::none(), py::arg("completions") = py::none(),
        py::arg("backend") = py::none());
  m.def(
      "filter",
      [](const std::string& task, py::handle rows, py::handle config) {
        return from_rows(dockd::filter_stage(dockd::stage_task_from_string(task), to_rows(rows),
                                             to_config(config)));
      },
      py::arg("task"), py::arg("rows"), py::arg("config") = py::none());
  m.def(
      "export",
      [](const std::string& task, py::handle rows, py::handle corpus, py::handle config,
         std::optional<std::uint64_t> seed) {
        auto cfg = to_config(config);
        if (seed) cfg.classes.rng_seed = *seed;
        return from_rows(dockd::export_stage(dockd::stage_task_from_string(task), to_rows(rows),
                                             to_corpus(corpus), cfg));
      },
      py::arg("task"), py::arg("rows"), py::arg("corpus"), py::arg("config") = py::none(),
      py::arg("seed") = py::none());
  m.def("sha256_hex", [](const std::string& s) { return dockd::sha256_hex(s); });
  m.def("replay_line", &dockd::replay_line, py::arg("prompt"), py::arg("completion"));
}
