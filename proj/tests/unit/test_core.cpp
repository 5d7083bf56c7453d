#include <doctest.h>

#include <cmath>
#include <limits>

#include "doc_builder.hpp"
#include "dockd/core.hpp"
#include "dockd/text.hpp"

using namespace dockd;
using dockd::testing::DocBuilder;

namespace {

BBox box(double x) { return BBox(x, 0.1, x + 0.05, 0.12); }

// Appendix-style invoice: raw order interleaves the three KV pairs.
Document invoice() {
  DocBuilder b;
  b.line(0.05, "Invoice us EK Packaging Goras Ice Cream $ Kathwada GIDC");
  b.kv_line(0.1, "Inv. date", "14-03-20");
  b.line(0.15, "EK Packaging Ahmedabad, Gujarat.");
  b.kv_line(0.2, "Due", "29-03-20");
  b.kv_line(0.25, "Inv. #", "1248");
  return b.build("inv");
}

}  // namespace

TEST_CASE("bbox validates coordinates") {
  CHECK_NOTHROW(BBox(0, 0, 1, 1));
  CHECK_NOTHROW(BBox(0.5, 0.5, 0.5, 0.5));
  CHECK_THROWS_AS(BBox(0.6, 0, 0.5, 1), DocumentError);
  CHECK_THROWS_AS(BBox(0, 0.6, 1, 0.5), DocumentError);
  CHECK_THROWS_AS(BBox(-0.1, 0, 0.5, 1), DocumentError);
  CHECK_THROWS_AS(BBox(0, 0, 1.01, 1), DocumentError);
  CHECK_THROWS_AS(BBox(0, 0, std::nan(""), 1), DocumentError);
  CHECK_THROWS_AS(BBox(0, 0, std::numeric_limits<double>::infinity(), 1), DocumentError);
  const BBox b(0.1, 0.2, 0.3, 0.6);
  CHECK(b.height() == doctest::Approx(0.4));
  CHECK(b.center_y() == doctest::Approx(0.4));
}

TEST_CASE("word rejects empty text and newlines") {
  CHECK_THROWS_AS(Word("", box(0)), DocumentError);
  CHECK_THROWS_AS(Word("a\nb", box(0)), DocumentError);
  CHECK_THROWS_AS(Word("a\rb", box(0)), DocumentError);
  CHECK(Word("ok", box(0)).text() == "ok");
}

TEST_CASE("document validates cross references") {
  std::vector<Word> w = {Word("a", box(0)), Word("b", box(0.1)), Word("c", box(0.2))};
  CHECK_THROWS_AS(Document("", w), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {KVPair{{0}, {3}}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {KVPair{{}, {1}}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {KVPair{{0}, {}}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {KVPair{{0}, {0}}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {KVPair{{0}, {1}}, KVPair{{1}, {2}}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {}, {TableRegion{{{{0}, {1}}, {{2}}}}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {}, {TableRegion{{{{0}, {5}}}}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {}, {}, {HeadingRange{1, 1}}), DocumentError);
  CHECK_THROWS_AS(Document("d", w, {}, {}, {HeadingRange{2, 4}}), DocumentError);
  CHECK_NOTHROW(Document("d", w, {KVPair{{0}, {1}}}, {TableRegion{{{{2}, {}}}}},
                         {HeadingRange{0, 3}}));
}

TEST_CASE("raw_text joins words in stored order") {
  DocBuilder b;
  b.line(0.5, "between");
  b.line(0.1, "Link");  // higher on the page but stored later
  CHECK(raw_text(b.build("d")) == "between Link");
  CHECK(raw_text(Document("e", {})) == "");
  DocBuilder t;
  t.line(0.1, "TOTAL 45,500");
  CHECK(raw_text(t.build("t")) == "TOTAL 45,500");
}

TEST_CASE("text_without_kv drops every KV word") {
  const Document doc = invoice();
  CHECK(text_without_kv(doc) ==
        "Invoice us EK Packaging Goras Ice Cream $ Kathwada GIDC EK Packaging Ahmedabad, "
        "Gujarat.");
  DocBuilder b;
  b.kv_line(0.1, "TOTAL", "45,500");
  CHECK(text_without_kv(b.build("all")) == "");
  DocBuilder plain;
  plain.line(0.1, "no pairs here");
  CHECK(text_without_kv(plain.build("p")) == raw_text(plain.build("p")));
}

TEST_CASE("text_with_kv_tags wraps each pair contiguously") {
  CHECK(text_with_kv_tags(invoice()) ==
        "Invoice us EK Packaging Goras Ice Cream $ Kathwada GIDC <kv>Inv. date 14-03-20</kv> "
        "EK Packaging Ahmedabad, Gujarat. <kv>Due 29-03-20</kv> <kv>Inv. # 1248</kv>");

  SUBCASE("adjacent pairs stay disjoint") {
    DocBuilder b;
    b.kv_line(0.1, "TOTAL", "45,500");
    b.kv_line(0.1, "CASH", "50,000", 0.5);
    CHECK(text_with_kv_tags(b.build("r")) == "<kv>TOTAL 45,500</kv> <kv>CASH 50,000</kv>");
  }
  SUBCASE("scattered pair is gathered key first at its first word") {
    std::vector<Word> w = {Word("4,500", box(0)), Word("noise", box(0.1)),
                           Word("CHANGE", box(0.2))};
    const Document d("s", w, {KVPair{{2}, {0}}});
    CHECK(text_with_kv_tags(d) == "<kv>CHANGE 4,500</kv> noise");
    CHECK(kv_span(d, d.kv_pairs()[0]) == "<kv>CHANGE 4,500</kv>");
  }
  SUBCASE("interleaved pairs are rejected") {
    std::vector<Word> w = {Word("a", box(0)), Word("b", box(0.1)), Word("c", box(0.2)),
                           Word("d", box(0.3))};
    const Document d("x", w, {KVPair{{0}, {2}}, KVPair{{1}, {3}}});
    CHECK_THROWS_AS(text_with_kv_tags(d), DocumentError);
  }
  SUBCASE("stripping tags restores raw text when spans are contiguous") {
    std::string tagged = text_with_kv_tags(invoice());
    for (const char* tag : {"<kv>", "</kv>"}) {
      for (auto p = tagged.find(tag); p != std::string::npos; p = tagged.find(tag)) {
        tagged.erase(p, std::string_view(tag).size());
      }
    }
    CHECK(tagged == raw_text(invoice()));
  }
}

TEST_CASE("word counts of the text views") {
  const Document doc = invoice();
  std::size_t kv_words = 0;
  for (const auto& kv : doc.kv_pairs()) {
    kv_words += kv.key_word_indices.size() + kv.value_word_indices.size();
  }
  CHECK(text::split_words(raw_text(doc)).size() == doc.words().size());
  CHECK(text::split_words(text_without_kv(doc)).size() == doc.words().size() - kv_words);
}

TEST_CASE("annotation constructors enforce invariants") {
  CHECK_THROWS_AS(make_qa_pair(" ", "a"), ArgumentError);
  CHECK_THROWS_AS(make_qa_pair("q", "\t"), ArgumentError);
  CHECK(make_qa_pair("q?", "a").answer == "a");
  CHECK_THROWS_AS(make_entity("", "v", EntityKind::kv), ArgumentError);
  CHECK_THROWS_AS(make_entity("f", " ", EntityKind::regular), ArgumentError);
  CHECK_THROWS_AS(make_label_set("d", {}, {"x"}), ArgumentError);
  CHECK_THROWS_AS(make_task_sample("d", TaskKind::vqa, "Doc: x", "Answer: y"), ArgumentError);
  CHECK_THROWS_AS(make_task_sample("d", TaskKind::vqa, "Document: x", "y"), ArgumentError);
  CHECK_NOTHROW(make_task_sample("d", TaskKind::vqa, "Document: x", "Answer: y"));
}

TEST_CASE("label set drops negatives colliding with positives") {
  const auto s = make_label_set("desc", {"Invoice", "bill"}, {" invoice ", "memo", "BILL"});
  CHECK(s.negatives == std::vector<std::string>{"memo"});
  CHECK(s.positives.size() == 2);
}

TEST_CASE("enum string round trips") {
  for (auto k : {EntityKind::regular, EntityKind::kv}) {
    CHECK(entity_kind_from_string(to_string(k)) == k);
  }
  for (auto k : {TaskKind::vqa, TaskKind::entity, TaskKind::classify}) {
    CHECK(task_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(task_kind_from_string("summarize"), ArgumentError);
}
