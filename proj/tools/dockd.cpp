// dockd: command-line front end for generation, filtering, export and
// evaluation over JSON Lines artifacts.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dockd/io.hpp"
#include "dockd/linearizer.hpp"
#include "dockd/metrics.hpp"
#include "dockd/parsers.hpp"
#include "dockd/pipeline.hpp"
#include "dockd/prompts.hpp"
#include "dockd/stages.hpp"
#include "dockd/text.hpp"

namespace {

using dockd::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dockd::ArgumentError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BackendFlags {
  std::string backend;
  std::string endpoint;
  std::string replay;
  int concurrency = 0;
};

void add_backend_flags(CLI::App* app, BackendFlags& f) {
  app->add_option("--backend", f.backend, "http or stub")->check(CLI::IsMember({"http", "stub"}));
  app->add_option("--endpoint", f.endpoint, "HTTP completion endpoint");
  app->add_option("--replay", f.replay, "Stub replay file (JSONL)");
  app->add_option("--concurrency", f.concurrency, "Max requests in flight")
      ->check(CLI::PositiveNumber);
}

dockd::PipelineConfig load_or_default(const std::string& path) {
  return path.empty() ? dockd::config_from_json(json::object()) : dockd::load_config(path);
}

void apply(const BackendFlags& f, dockd::BackendConfig& cfg) {
  if (!f.backend.empty()) cfg.kind = dockd::backend_kind_from_string(f.backend);
  if (!f.endpoint.empty()) cfg.endpoint_url = f.endpoint;
  if (!f.replay.empty()) cfg.replay_path = f.replay;
  if (f.concurrency > 0) cfg.max_concurrency = f.concurrency;
}

std::map<std::string, json> by_id(const std::vector<json>& rows, const std::string& what) {
  std::map<std::string, json> out;
  for (const auto& r : rows) {
    if (!r.contains("id")) throw dockd::ArgumentError(what + " row without \"id\"");
    const auto id = r.at("id").get<std::string>();
    if (!out.emplace(id, r).second) {
      throw dockd::ArgumentError("duplicate id '" + id + "' in " + what);
    }
  }
  return out;
}

std::vector<dockd::FieldValue> entity_pairs(const json& row) {
  std::vector<dockd::FieldValue> out;
  for (const auto& e : row.value("entities", json::array())) {
    out.emplace_back(e.at("field").get<std::string>(), e.at("value").get<std::string>());
  }
  return out;
}

std::set<std::string> split_csv(const std::string& s) {
  std::set<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!dockd::text::trim(item).empty()) out.insert(dockd::text::trim(item));
  }
  return out;
}

json evaluate(const std::string& task, const std::string& pred_path,
              const std::string& gold_path, const std::optional<std::string>& exclude,
              bool em_case_sensitive) {
  const auto preds = by_id(dockd::read_jsonl(pred_path), "predictions");
  const auto golds = dockd::read_jsonl(gold_path);
  auto pred_of = [&](const json& g) -> const json* {
    auto it = preds.find(g.at("id").get<std::string>());
    return it == preds.end() ? nullptr : &it->second;
  };

  if (task == "vqa") {
    std::vector<dockd::VqaEvalItem> items;
    for (const auto& g : golds) {
      dockd::VqaEvalItem item;
      if (g.contains("answers")) {
        item.gold_answers = g.at("answers").get<std::vector<std::string>>();
      } else {
        item.gold_answers = {g.at("answer").get<std::string>()};
      }
      if (const json* p = pred_of(g)) item.prediction = p->value("answer", std::string());
      items.push_back(std::move(item));
    }
    return {{"anls", dockd::anls(items)},
            {"em", dockd::exact_match(items, em_case_sensitive)},
            {"count", items.size()}};
  }
  if (task == "entities") {
    std::vector<dockd::EntityEvalItem> items;
    for (const auto& g : golds) {
      dockd::EntityEvalItem item;
      item.gold = entity_pairs(g);
      if (const json* p = pred_of(g)) item.predicted = entity_pairs(*p);
      items.push_back(std::move(item));
    }
    json out = {{"f1", dockd::entity_f1(items)}, {"count", items.size()}};
    std::size_t gold_pairs = 0;
    for (const auto& it : items) gold_pairs += it.gold.size();
    if (gold_pairs > 0) out["entity_anls"] = dockd::entity_anls(items);
    return out;
  }
  std::vector<dockd::ClassifyEvalItem> items;
  for (const auto& g : golds) {
    dockd::ClassifyEvalItem item;
    item.gold_label = g.at("label").get<std::string>();
    item.gold_category = g.value("category", item.gold_label);
    if (const json* p = pred_of(g)) item.prediction = p->value("label", std::string());
    items.push_back(std::move(item));
  }
  const auto excluded = exclude ? split_csv(*exclude) : dockd::default_excluded_categories();
  json out = {{"macc", dockd::mean_accuracy(items)},
              {"macc_star", dockd::mean_accuracy(items, excluded)},
              {"excluded", std::vector<std::string>(excluded.begin(), excluded.end())},
              {"per_category", dockd::category_accuracy(items)},
              {"count", items.size()}};
  return out;
}

json parse_completion(const std::string& kind, const std::string& completion) {
  if (kind == "qa") return dockd::parse_qa_pairs(completion);
  if (kind == "entity") return dockd::parse_entity_list(completion);
  if (kind == "labels") return dockd::parse_label_list(completion);
  if (kind == "kv") return dockd::parse_kv_field(completion);
  return dockd::parse_description(completion);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document knowledge-distillation data toolkit"};
  app.require_subcommand(1);

  // linearize
  auto* lin = app.add_subcommand("linearize", "Render a corpus as line-numbered text");
  std::string lin_in, lin_out;
  dockd::LinearizeOptions lin_opts;
  lin->add_option("--input", lin_in, "Corpus JSONL")->required();
  lin->add_option("--out", lin_out, "Output JSONL of {id, text}")->required();
  lin->add_option("--line-merge-frac", lin_opts.line_merge_frac)->check(CLI::NonNegativeNumber);
  lin->add_flag("--column-split", lin_opts.column_split);

  // render-prompt
  auto* rp = app.add_subcommand("render-prompt", "Render one prompt template");
  std::string rp_name, rp_dir;
  std::vector<std::string> rp_binds;
  rp->add_option("--template", rp_name, "Template name")->required();
  rp->add_option("--bind", rp_binds, "KEY=VALUE, KEY without _PLACE_HOLDER");
  rp->add_option("--template-dir", rp_dir, "Load templates from a directory");

  // parse
  auto* pa = app.add_subcommand("parse", "Parse a raw completion into JSON");
  std::string pa_kind, pa_in;
  pa->add_option("--kind", pa_kind)
      ->required()
      ->check(CLI::IsMember({"qa", "entity", "labels", "kv", "description"}));
  pa->add_option("--in", pa_in, "Completion text file")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate annotations with the teacher backend");
  std::string gen_task, gen_corpus, gen_out, gen_cfg;
  BackendFlags gen_flags;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("task", gen_task)->required()->check(
      CLI::IsMember({"vqa", "entities", "classes"}));
  gen->add_option("--corpus", gen_corpus)->required();
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--config", gen_cfg);
  gen->add_option("--seed", gen_seed);
  add_backend_flags(gen, gen_flags);

  // filter
  auto* fil = app.add_subcommand("filter", "Filter generated annotations");
  std::string fil_task, fil_in, fil_out, fil_cfg;
  fil->add_option("--task", fil_task)->required()->check(
      CLI::IsMember({"vqa", "entities", "classes"}));
  fil->add_option("--in", fil_in)->required();
  fil->add_option("--out", fil_out)->required();
  fil->add_option("--config", fil_cfg);

  // export
  auto* exp = app.add_subcommand("export", "Export (prompt, answer) task samples");
  std::string exp_task, exp_in, exp_corpus, exp_cfg, exp_out;
  std::optional<std::uint64_t> exp_seed;
  exp->add_option("--task", exp_task)->required()->check(
      CLI::IsMember({"vqa", "entities", "classes"}));
  exp->add_option("--in", exp_in)->required();
  exp->add_option("--corpus", exp_corpus)->required();
  exp->add_option("--out", exp_out)->required();
  exp->add_option("--config", exp_cfg);
  exp->add_option("--seed", exp_seed);

  // eval
  auto* ev = app.add_subcommand("eval", "Score predictions against gold");
  std::string ev_task, ev_pred, ev_gold;
  std::optional<std::string> ev_exclude;
  bool ev_case = false;
  ev->add_option("task", ev_task)->required()->check(
      CLI::IsMember({"vqa", "entities", "classify"}));
  ev->add_option("--pred", ev_pred)->required();
  ev->add_option("--gold", ev_gold)->required();
  ev->add_option("--exclude", ev_exclude, "Comma-separated categories for macc_star");
  ev->add_flag("--em-case-sensitive", ev_case);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lin) {
      std::vector<json> rows;
      for (const auto& doc : dockd::read_corpus(lin_in)) {
        rows.push_back({{"id", doc.id()}, {"text", dockd::linearize(doc, lin_opts).text()}});
      }
      dockd::write_jsonl(lin_out, rows);
    } else if (*rp) {
      dockd::Bindings b;
      for (const auto& kv : rp_binds) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw dockd::ArgumentError("--bind expects KEY=VALUE");
        b[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      const auto name = dockd::template_from_string(rp_name);
      if (rp_dir.empty()) {
        std::cout << dockd::TemplateStore::builtin().render(name, b);
      } else {
        std::cout << dockd::TemplateStore::load_directory(rp_dir).render(name, b);
      }
    } else if (*pa) {
      std::cout << parse_completion(pa_kind, read_file(pa_in)).dump(2) << '\n';
    } else if (*gen) {
      auto cfg = load_or_default(gen_cfg);
      apply(gen_flags, cfg.backend);
      if (gen_seed) cfg.classes.rng_seed = *gen_seed;
      const auto docs = dockd::read_corpus(gen_corpus);
      const dockd::Client client(cfg.backend);
      const auto rows =
          dockd::generate_stage(dockd::stage_task_from_string(gen_task), docs, cfg, client);
      dockd::write_jsonl(gen_out, rows);
    } else if (*fil) {
      const auto cfg = load_or_default(fil_cfg);
      const auto rows = dockd::filter_stage(dockd::stage_task_from_string(fil_task),
                                            dockd::read_jsonl(fil_in), cfg);
      dockd::write_jsonl(fil_out, rows);
    } else if (*exp) {
      auto cfg = load_or_default(exp_cfg);
      if (exp_seed) cfg.classes.rng_seed = *exp_seed;
      const auto docs = dockd::read_corpus(exp_corpus);
      dockd::write_jsonl(exp_out, dockd::export_stage(dockd::stage_task_from_string(exp_task),
                                                      dockd::read_jsonl(exp_in), docs, cfg));
    } else if (*ev) {
      std::cout << evaluate(ev_task, ev_pred, ev_gold, ev_exclude, ev_case).dump() << '\n';
    }
  } catch (const dockd::Error& e) {
    std::cerr << "dockd: error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "dockd: error: malformed input: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
