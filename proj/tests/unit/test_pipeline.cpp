#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "dockd/core.hpp"
#include "dockd/io.hpp"
#include "dockd/pipeline.hpp"
#include "doc_builder.hpp"
#include "fn_backend.hpp"
#include "oracles.hpp"

using namespace dockd;
using dockd::testing::DocBuilder;
using dockd::testing::FnBackend;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(DOCKD_SOURCE_DIR) / "tests/fixtures";

std::vector<Document> fixture_corpus() { return read_corpus(kFixtures / "corpus.jsonl"); }

Client replay_client(int concurrency = 2) {
  BackendConfig cfg;
  cfg.replay_path = (kFixtures / "replay.jsonl").string();
  cfg.max_concurrency = concurrency;
  return Client(cfg);
}

const Document& by_id(const std::vector<Document>& docs, const std::string& id) {
  return *std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.id() == id; });
}

template <typename T>
std::vector<T> only(const std::vector<T>& v, const std::string& doc_id) {
  std::vector<T> out;
  for (const auto& x : v) {
    if (x.doc_id == doc_id) out.push_back(x);
  }
  return out;
}

struct QuietLog {
  std::vector<std::string> lines;
  QuietLog() {
    set_log_sink([this](std::string_view s) { lines.emplace_back(s); });
  }
  ~QuietLog() { set_log_sink({}); }
};

Document three_kv_doc() {
  DocBuilder b;
  b.line(0.05, "Invoice header");
  b.kv_line(0.1, "Date", "14-03-20");
  b.kv_line(0.15, "Due", "29-03-20");
  b.line(0.2, "Goods delivered");
  b.kv_line(0.25, "No.", "1248");
  return b.build("kvdoc");
}

ClassLabelSet labels(std::vector<std::string> pos, std::vector<std::string> neg,
                     std::string desc = "A document.") {
  return make_label_set(std::move(desc), std::move(pos), std::move(neg));
}

std::vector<std::string> n_labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("neg " + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("vqa generation over the replay fixtures") {
  QuietLog quiet;
  const auto docs = fixture_corpus();
  const auto client = replay_client();
  const auto out = run_vqa_generation(docs, VqaGenConfig{}, client);

  const auto dep = only(out, "ftjw0181");
  REQUIRE(dep.size() == 3);
  CHECK(dep[0].qa.answer == "Mikulay");
  CHECK(dep[2].qa == QAPair{"What does the respondent say they are constantly improving in lines 11-12?",
                            "Their problems of data collection."});
  // Truncated completion: only the complete pairs survive.
  CHECK(only(out, "gtbw0041").size() == 2);

  // Output follows corpus order.
  std::vector<std::string> order;
  for (const auto& r : out) {
    if (order.empty() || order.back() != r.doc_id) order.push_back(r.doc_id);
  }
  std::vector<std::string> corpus_order;
  for (const auto& d : docs) corpus_order.push_back(d.id());
  CHECK(std::includes(corpus_order.begin(), corpus_order.end(), order.begin(), order.end(),
                      [&](const std::string& a, const std::string& b) {
                        return std::find(corpus_order.begin(), corpus_order.end(), a) <
                               std::find(corpus_order.begin(), corpus_order.end(), b);
                      }));

  CHECK(run_vqa_generation({}, VqaGenConfig{}, client).empty());
}

TEST_CASE("vqa generation logs and skips unparseable documents") {
  QuietLog quiet;
  DocBuilder b;
  b.line(0.1, "hello world");
  const std::vector<Document> docs = {b.build("d1")};
  auto fn = std::make_shared<FnBackend>([](const GenerationRequest&) { return "no pairs"; });
  const auto out = run_vqa_generation(docs, VqaGenConfig{}, Client(fn, BackendConfig{}));
  CHECK(out.empty());
  REQUIRE(quiet.lines.size() == 1);
  CHECK(quiet.lines[0].find("d1") != std::string::npos);

  VqaGenConfig cfg;
  cfg.use_linearized = false;
  cfg.qa_count = 2;
  run_vqa_generation(docs, cfg, Client(fn, BackendConfig{}));
  CHECK(fn->requests().back().prompt == vqa_gen_prompt(raw_text(docs[0]), 2));
  cfg.qa_count = 0;
  CHECK_THROWS_AS(run_vqa_generation(docs, cfg, Client(fn, BackendConfig{})), ArgumentError);
}

TEST_CASE("entity generation over the invoice fixture") {
  QuietLog quiet;
  const auto docs = fixture_corpus();
  const auto out = run_entity_generation({by_id(docs, "inv0001")}, EntityGenConfig{},
                                         replay_client());
  std::vector<EntityRecord> kv, regular;
  for (const auto& r : out) (r.entity.kind == EntityKind::kv ? kv : regular).push_back(r.entity);
  CHECK(kv == std::vector<EntityRecord>{{"Invoice Date", "Inv. date 14-03-20", EntityKind::kv},
                                        {"Due Date", "Due 29-03-20", EntityKind::kv},
                                        {"Invoice Number", "Inv. # 1248", EntityKind::kv}});
  REQUIRE_FALSE(regular.empty());
  CHECK(regular[0] == EntityRecord{"Company Name", "EK Packaging", EntityKind::regular});
}

TEST_CASE("kv naming carries every earlier answer as a constraint") {
  QuietLog quiet;
  const Document doc = three_kv_doc();
  int named = 0;
  auto fn = std::make_shared<FnBackend>([&](const GenerationRequest& r) -> std::string {
    if (r.request_id.find("/kv/") != std::string::npos) return "Field " + std::to_string(++named);
    return "x</regular> --- Misc";
  });
  const auto out = run_entity_generation({doc}, EntityGenConfig{}, Client(fn, BackendConfig{}));
  const auto reqs = fn->requests();
  REQUIRE(reqs.size() == 4);

  const std::string tagged = text_with_kv_tags(doc);
  std::vector<std::pair<std::string, std::string>> constraints;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string span = kv_span(doc, doc.kv_pairs()[i]);
    CHECK(reqs[i].prompt == kv_name_prompt(tagged, constraints, span));
    CHECK(reqs[i].temperature == 0.0);
    CHECK(constraints.size() == i);
    constraints.emplace_back(span, "Field " + std::to_string(i + 1));
  }
  CHECK(reqs[3].prompt == entity_gen_prompt(text_without_kv(doc)));
  CHECK(reqs[3].temperature == 0.7);

  REQUIRE(out.size() == 4);
  CHECK(out[0].entity == EntityRecord{"Field 1", "Date 14-03-20", EntityKind::kv});
  CHECK(out[2].entity == EntityRecord{"Field 3", "No. 1248", EntityKind::kv});
  CHECK(out[3].entity == EntityRecord{"Misc", "x", EntityKind::regular});
}

TEST_CASE("entity generation without kv detection runs only the regular prompt") {
  QuietLog quiet;
  const Document doc = three_kv_doc();
  auto fn = std::make_shared<FnBackend>(
      [](const GenerationRequest&) { return std::string("a</regular> --- A"); });
  EntityGenConfig cfg;
  cfg.use_kv_detection = false;
  const auto out = run_entity_generation({doc}, cfg, Client(fn, BackendConfig{}));
  REQUIRE(fn->requests().size() == 1);
  CHECK(fn->requests()[0].prompt == entity_gen_prompt(raw_text(doc)));
  CHECK(out.size() == 1);
}

TEST_CASE("entity generation skips a document whose call fails") {
  QuietLog quiet;
  const Document doc = three_kv_doc();
  DocBuilder b;
  b.line(0.1, "plain page");
  const Document plain = b.build("plain");
  auto fn = std::make_shared<FnBackend>([](const GenerationRequest& r) -> std::string {
    if (r.request_id == "kvdoc/kv/2") throw BackendError("boom");
    if (r.request_id.find("/kv/") != std::string::npos) return "F";
    return "v</regular> --- F";
  });
  const auto out = run_entity_generation({doc, plain}, EntityGenConfig{},
                                         Client(fn, BackendConfig{}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].doc_id == "plain");
  CHECK(quiet.lines.size() == 1);
}

TEST_CASE("aggregate entities") {
  const std::vector<DocEntity> recs = {
      {"r", {"Item Name", "egg tart", EntityKind::regular}},
      {"r", {"Item Price", "13,000", EntityKind::regular}},
      {"r", {"item name ", "pizza toast", EntityKind::regular}},
      {"r", {"Item Name", "egg tart", EntityKind::kv}},
      {"s", {"Item Name", "latte", EntityKind::regular}},
  };
  const auto groups = aggregate_entities(recs);
  CHECK(groups == std::vector<EntityGroup>{{"r", "Item Name", {"egg tart", "pizza toast"}},
                                           {"r", "Item Price", {"13,000"}},
                                           {"s", "Item Name", {"latte"}}});
  CHECK(aggregate_entities({}).empty());
}

TEST_CASE("class generation chains description, positives, negatives") {
  QuietLog quiet;
  DocBuilder b1, b2;
  b1.line(0.1, "Dear Sir, I am unhappy with the product.");
  b2.line(0.1, "Invoice 1248 total 45,500");
  const std::vector<Document> docs = {b1.build("a"), b2.build("b")};
  auto fn = std::make_shared<FnBackend>([](const GenerationRequest& r) -> std::string {
    const auto& id = r.request_id;
    if (id == "a/desc") return "A letter from a consumer complaining about a product. Extra.";
    if (id == "a/pos") return "1. consumer letter\n2. complaint letter";
    if (id == "a/neg") return "1. invoice\n2. memo\n3. Consumer Letter";
    if (id == "b/desc") return "An invoice for goods.";
    if (id == "b/pos") return "1. invoice";
    if (id == "b/neg") return "1. Invoice\n2. memo\n3. resume";
    if (id == "negdesc/memo") throw BackendError("down");
    if (id.starts_with("negdesc/")) return "About " + id.substr(8) + ". More.";
    throw BackendError("unexpected " + id);
  });
  const auto out = run_class_generation(docs, ClassGenConfig{}, Client(fn, BackendConfig{}));
  REQUIRE(out.size() == 2);
  CHECK(out[0].labels.description == "A letter from a consumer complaining about a product.");
  CHECK(out[0].labels.positives == std::vector<std::string>{"consumer letter", "complaint letter"});
  CHECK(out[0].labels.negatives == std::vector<std::string>{"invoice", "memo"});
  CHECK(out[0].labels.negative_descriptions.at("invoice") == "About invoice.");
  CHECK(out[0].labels.negative_descriptions.at("memo") == "");
  CHECK(out[1].labels.negatives == std::vector<std::string>{"memo", "resume"});

  const auto reqs = fn->requests();
  auto prompt_of = [&](const std::string& id) {
    for (const auto& r : reqs) {
      if (r.request_id == id) return r.prompt;
    }
    FAIL("missing request " << id);
    return std::string();
  };
  CHECK(prompt_of("a/pos") ==
        class_pos_prompt(raw_text(docs[0]),
                         "A letter from a consumer complaining about a product.", 3));
  CHECK(prompt_of("a/neg") ==
        class_neg_prompt(raw_text(docs[0]), {"consumer letter", "complaint letter"}, 10));
  std::map<std::string, int> negdesc_calls;
  for (const auto& r : reqs) {
    if (r.request_id.starts_with("negdesc/")) ++negdesc_calls[r.request_id];
  }
  // "memo" is shared by both documents but described once.
  CHECK(negdesc_calls == std::map<std::string, int>{
                             {"negdesc/invoice", 1}, {"negdesc/memo", 1}, {"negdesc/resume", 1}});
}

TEST_CASE("class generation skips a document with no positives") {
  QuietLog quiet;
  DocBuilder b;
  b.line(0.1, "text");
  auto fn = std::make_shared<FnBackend>([](const GenerationRequest& r) -> std::string {
    if (r.request_id.ends_with("/desc")) return "Desc.";
    if (r.request_id.ends_with("/pos")) return "";
    return "1. x";
  });
  CHECK(run_class_generation({b.build("d")}, ClassGenConfig{}, Client(fn, BackendConfig{}))
            .empty());
  CHECK(fn->requests().size() == 2);
}

TEST_CASE("candidate formulation") {
  ClassGenConfig cfg;
  auto set = labels({"invoice"}, n_labels(10), "An invoice.");
  set.negative_descriptions["neg 3"] = "third";
  auto rng = document_rng(7, "doc");
  const auto c = formulate_candidates(set, cfg, rng);
  REQUIRE(c.candidates.size() == 4);
  CHECK(c.answer == "invoice");
  CHECK(std::count_if(c.candidates.begin(), c.candidates.end(),
                      [](const Candidate& x) { return x.label == "invoice"; }) == 1);
  for (const auto& x : c.candidates) {
    if (x.label == "invoice") CHECK(x.description == "An invoice.");
    else if (x.label == "neg 3") CHECK(x.description == "third");
    else CHECK(x.description.empty());
  }

  auto rng2 = document_rng(7, "doc");
  const auto again = formulate_candidates(set, cfg, rng2);
  CHECK(again.candidates == c.candidates);
  CHECK(again.answer == c.answer);

  cfg.candidate_negatives = 10;
  auto rng3 = document_rng(1, "doc");
  CHECK(formulate_candidates(set, cfg, rng3).candidates.size() == 11);
  cfg.candidate_negatives = 11;
  CHECK_THROWS_AS(formulate_candidates(set, cfg, rng3), CandidateError);
  ClassLabelSet empty;
  empty.negatives = n_labels(3);
  CHECK_THROWS_AS(formulate_candidates(empty, ClassGenConfig{}, rng3), CandidateError);
}

TEST_CASE("candidate formulation draws every positive and position") {
  ClassGenConfig cfg;
  const auto set = labels({"p0", "p1", "p2"}, n_labels(5));
  std::map<std::string, int> answers;
  std::map<std::size_t, int> positions;
  for (int seed = 0; seed < 600; ++seed) {
    auto rng = document_rng(seed, "d");
    const auto c = formulate_candidates(set, cfg, rng);
    ++answers[c.answer];
    for (std::size_t i = 0; i < c.candidates.size(); ++i) {
      if (c.candidates[i].label == c.answer) ++positions[i];
    }
  }
  CHECK(answers.size() == 3);
  CHECK(positions.size() == 4);
  for (const auto& [_, n] : answers) CHECK(n > 120);

  CHECK(document_rng(1, "a")() == document_rng(1, "a")());
  CHECK(document_rng(1, "a")() != document_rng(1, "b")());
  CHECK(document_rng(1, "a")() != document_rng(2, "a")());
  auto rng = document_rng(0, "u");
  for (int i = 0; i < 1000; ++i) CHECK(uniform_index(rng, 3) < 3);
}

TEST_CASE("class filter examples") {
  FilterConfig cfg;
  std::vector<DocLabels> sets;
  for (int i = 0; i < 3; ++i) {
    sets.push_back({"d" + std::to_string(i),
                    labels({"consumer letter", "quarterly tobacco industry shipping manifest form"},
                           {"invoice", "rare"})});
  }
  sets[0].labels.negatives.push_back("twice");
  sets[1].labels.negatives.push_back("Twice");
  sets.push_back({"lonely", labels({"unique label"}, {"invoice"})});

  const auto out = filter_class_dataset(sets, cfg);
  REQUIRE(out.size() == 3);
  for (const auto& d : out) {
    CHECK(d.labels.positives == std::vector<std::string>{"consumer letter"});
    CHECK(d.labels.negatives == std::vector<std::string>{"invoice", "rare"});
  }
  CHECK(filter_class_dataset(out, cfg) == out);

  cfg.pool_label_frequency = false;
  sets = {};
  for (int i = 0; i < 3; ++i) sets.push_back({"d" + std::to_string(i), labels({"a"}, {"b"})});
  sets[0].labels.negatives.push_back("a x");
  sets[1].labels.positives.push_back("a x");
  sets[2].labels.positives.push_back("a x");
  // "a x" has three uses pooled but only two per list.
  for (const auto& d : filter_class_dataset(sets, cfg)) {
    CHECK(d.labels.positives == std::vector<std::string>{"a"});
    CHECK(d.labels.negatives == std::vector<std::string>{"b"});
  }
  cfg.min_label_freq = -1;
  CHECK_THROWS_AS(filter_class_dataset(sets, cfg), ArgumentError);
}

TEST_CASE("class filter matches a brute-force recount") {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> pool = {"letter", "Letter", "memo", "invoice", "form",
                                         "news article", "a b c d e f", "report", "budget"};
  for (int t = 0; t < 200; ++t) {
    std::vector<DocLabels> sets;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> pos, neg;
      for (int k = 0, m = 1 + rng() % 3; k < m; ++k) pos.push_back(pool[rng() % pool.size()]);
      for (int k = 0, m = rng() % 4; k < m; ++k) neg.push_back(pool[rng() % pool.size()]);
      sets.push_back({"d" + std::to_string(i), labels(pos, neg)});
    }
    FilterConfig cfg;
    cfg.min_label_freq = 1 + static_cast<int>(rng() % 4);
    const auto got = filter_class_dataset(sets, cfg);
    const auto want = oracle::filter_labels(sets, 5, cfg.min_label_freq);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].doc_id == want[i].doc_id);
      CHECK(got[i].labels.positives == want[i].labels.positives);
      CHECK(got[i].labels.negatives == want[i].labels.negatives);
    }
    CHECK(filter_class_dataset(got, cfg) == got);
  }
}

TEST_CASE("qa filter") {
  FilterConfig cfg;
  const std::vector<DocQa> pairs = {
      {"l", {"What is the date mentioned in this letter?", "1/8/93"}},
      {"l", {"What is the long answer?", std::string(400, 'x')}},
      {"l", {"Short?", "yes"}},
      {"l", {"Is the answer here?", ""}},
      {"l", {"Which résumé is listed?", std::string(300, 'a') + "\xC3\xA9"}},
  };
  const auto out = filter_qa_dataset(pairs, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].qa.answer == "1/8/93");
  cfg.max_answer_chars = 301;  // lengths count code points
  CHECK(filter_qa_dataset(pairs, cfg).size() == 2);
  cfg.max_answer_chars = 0;
  CHECK_THROWS_AS(filter_qa_dataset(pairs, cfg), ArgumentError);
}

TEST_CASE("entity filter") {
  FilterConfig cfg;
  std::vector<EntityGroup> groups = {
      {"a", "Item Name", {"x"}},  {"b", "item name", {"y"}}, {"a", "Rare", {"z"}},
      {"c", "Twice", {"1"}},       {"c", "twice ", {"2"}},
  };
  const auto out = filter_entity_dataset(groups, cfg);
  CHECK(out == std::vector<EntityGroup>{groups[0], groups[1]});
  CHECK(filter_entity_dataset({}, cfg).empty());
}

TEST_CASE("export answers and metadata") {
  const auto docs = fixture_corpus();
  const auto ent = export_entity_samples({{"rcpt0002", "Item Name", {"egg tart", "pizza toast"}}},
                                         docs);
  REQUIRE(ent.size() == 1);
  CHECK(ent[0].answer == "Answer: egg tart; pizza toast");
  CHECK(ent[0].task == TaskKind::entity);
  CHECK(ent[0].meta.at("field") == "Item Name");
  CHECK(ent[0].prompt == entity_task_prompt(raw_text(by_id(docs, "rcpt0002")), "Item Name"));

  const DocQa qa{"ftjw0181", {"What is the name mentioned in line 1?", "Mikulay"}};
  auto vqa = export_vqa_samples({qa}, docs);
  REQUIRE(vqa.size() == 1);
  CHECK(vqa[0].answer == "Answer: Mikulay");
  CHECK(vqa[0].meta.at("question") == qa.qa.question);

  ExportConfig lin;
  lin.use_linearized_text = true;
  vqa = export_vqa_samples({qa}, docs, lin);
  const auto text = render_for_prompt(linearize(by_id(docs, "ftjw0181"), lin.linearize));
  CHECK(vqa[0].prompt == vqa_task_prompt(text, qa.qa.question).prompt);

  ClassGenConfig ccfg;
  ccfg.rng_seed = 3;
  const std::vector<DocLabels> sets = {{"inv0001", labels({"invoice"}, n_labels(5))}};
  const auto cls = export_classify_samples(sets, docs, ccfg);
  REQUIRE(cls.size() == 1);
  CHECK(cls[0].answer == "Answer: invoice");
  CHECK(cls[0].meta.at("label") == "invoice");
  CHECK(cls[0] == export_classify_samples(sets, docs, ccfg)[0]);

  CHECK_THROWS_AS(export_vqa_samples({{"missing", qa.qa}}, docs), ExportError);
  CHECK_THROWS_AS(export_entity_samples({{"missing", "F", {"v"}}}, docs), ExportError);
  CHECK_THROWS_AS(export_classify_samples({{"missing", sets[0].labels}}, docs, ccfg),
                  ExportError);
}

TEST_CASE("classify export skips documents with too few negatives") {
  QuietLog quiet;
  const auto docs = fixture_corpus();
  const std::vector<DocLabels> sets = {{"inv0001", labels({"invoice"}, n_labels(2))},
                                       {"rcpt0002", labels({"receipt"}, n_labels(3))}};
  const auto out = export_classify_samples(sets, docs, ClassGenConfig{});
  REQUIRE(out.size() == 1);
  CHECK(out[0].doc_id == "rcpt0002");
  CHECK(quiet.lines.size() == 1);
}
