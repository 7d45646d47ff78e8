#include <gtest/gtest.h>

#include <random>
#include <set>
#include <tuple>

#include "support.hpp"
#include "webrefine/dom_distill.hpp"
#include "webrefine/simweb.hpp"
#include "webrefine/text.hpp"

using namespace webrefine;

TEST(DistillTest, SingleAnchor) {
  auto d = distill(R"(<a id="x">Go</a>)");
  ASSERT_EQ(d.interactive_elements.size(), 1u);
  EXPECT_EQ(d.interactive_elements[0].ref, "x");
  EXPECT_EQ(d.interactive_elements[0].kind, ElementKind::Link);
  EXPECT_EQ(d.interactive_elements[0].label, "Go");
}

TEST(DistillTest, EmptyInput) {
  auto d = distill("");
  EXPECT_EQ(d, DistilledDom{});
}

TEST(DistillTest, ScriptStyleAndCommentsAreDropped) {
  auto d = distill("<p>kept</p><script>var secret = 1;</script><style>.a{}</style><!-- hidden --><p>also</p>");
  EXPECT_EQ(d.visible_text.find("secret"), std::string::npos);
  EXPECT_EQ(d.visible_text.find("hidden"), std::string::npos);
  EXPECT_NE(d.visible_text.find("kept"), std::string::npos);
  EXPECT_NE(d.visible_text.find("also"), std::string::npos);
}

TEST(DistillTest, PositionalRefsForElementsWithoutIds) {
  auto d = distill("<button>One</button><a href='#'>Two</a><input id='q' value='hi'>");
  ASSERT_EQ(d.interactive_elements.size(), 3u);
  EXPECT_EQ(d.interactive_elements[0].ref, "e1");
  EXPECT_EQ(d.interactive_elements[1].ref, "e2");
  EXPECT_EQ(d.interactive_elements[2].ref, "q");
  EXPECT_EQ(d.interactive_elements[2].kind, ElementKind::Textbox);
  EXPECT_EQ(d.interactive_elements[2].value, "hi");
}

TEST(DistillTest, RefsAreUniqueEvenWithDuplicateIds) {
  auto d = distill("<a id='x'>a</a><a id='x'>b</a><a id='e2'>c</a><a>d</a>");
  std::set<std::string> refs;
  for (const auto& e : d.interactive_elements) refs.insert(e.ref);
  EXPECT_EQ(refs.size(), d.interactive_elements.size());
}

TEST(DistillTest, RepeatedBlocksAreBoilerplate) {
  auto d = distill("<div>Promo</div><div>Promo</div><div>Promo</div><p>Body</p><p>Twice</p><p>Twice</p>");
  EXPECT_EQ(d.visible_text.find("Promo"), std::string::npos);
  EXPECT_NE(d.visible_text.find("Body"), std::string::npos);
  auto first = d.visible_text.find("Twice");
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(d.visible_text.find("Twice", first + 1), std::string::npos);
}

TEST(DistillTest, EntitiesDecoded) {
  EXPECT_EQ(decode_html_entities("a &amp; b &lt;c&gt; &#233; &#x41; &unknown;"), "a & b <c> \xC3\xA9 A &unknown;");
  auto d = distill("<title>Fish &amp; Chips</title><p>&copy; 2024</p>");
  EXPECT_EQ(d.title, "Fish & Chips");
}

TEST(DistillTest, MalformedMarkupIsRecovered) {
  auto d = distill("<div><p>open <a id=z>link <b>bold</div></span><button id=b1>Press");
  std::set<std::string> refs;
  for (const auto& e : d.interactive_elements) refs.insert(e.ref);
  EXPECT_TRUE(refs.count("z"));
  EXPECT_TRUE(refs.count("b1"));
}

TEST(DistillTest, SameInputSameRefs) {
  std::string html = "<a>1</a><button>2</button><div role='tab'>3</div><select><option>x</select>";
  EXPECT_EQ(distill(html), distill(html));
}

TEST(DistillTest, ByteInvariantOnFuzzedMarkup) {
  std::mt19937 rng(5);
  const std::vector<std::string> pieces = {"<a", " id='", "x", "'>", "</a>", "<p>", "</p>", "<script>", "</script>",
                                           "<!--", "-->", "&amp;", "&#", "text", " ", "\n", "<", ">", "\"", "<input",
                                           "<div role=button>", "</div>", "\xC3\xA9", "\xFF", "<title>", "</title>"};
  for (int i = 0; i < 2000; ++i) {
    std::string html;
    int n = static_cast<int>(rng() % 40);
    for (int k = 0; k < n; ++k) html += pieces[rng() % pieces.size()];
    auto d = distill(html);
    ASSERT_EQ(d.source_bytes, html.size());
    ASSERT_LE(d.distilled_bytes, d.source_bytes) << html;
    std::set<std::string> refs;
    for (const auto& e : d.interactive_elements) refs.insert(e.ref);
    ASSERT_EQ(refs.size(), d.interactive_elements.size()) << html;
  }
}

TEST(DistillTest, EverySimWebPageDistillsToItsScriptedElements) {
  auto sites = testsupport::hermetic_sites();
  sites.merge(simweb::load_site_directory(testsupport::source_path("fixtures/noise")));
  std::size_t pages = 0;
  for (const auto& [name, script] : sites) {
    for (const auto& [pid, page] : script->pages) {
      simweb::SimState st = simweb::initial_state(*script);
      st.current_page = pid;
      auto d = distill(simweb::render_dom(st, *script));
      std::set<std::tuple<std::string, ElementKind, std::string>> got, want;
      for (const auto& e : d.interactive_elements) got.insert({e.ref, e.kind, e.label});
      for (const auto& e : page.elements) want.insert({e.id, e.kind, e.label});
      EXPECT_EQ(got, want) << name << "/" << pid;
      EXPECT_EQ(d.interactive_elements.size(), page.elements.size()) << name << "/" << pid;
      ++pages;
    }
  }
  EXPECT_GE(pages, 15u);
}

TEST(DistillTest, NoisePageShrinksBelowThirtyPercent) {
  auto script = simweb::load_site_file(testsupport::source_path("fixtures/noise/noise.json"));
  auto html = simweb::render_dom(simweb::initial_state(script), script);
  ASSERT_GE(html.size(), 50u * 1024u);
  auto d = distill(html);
  EXPECT_LT(static_cast<double>(d.distilled_bytes), 0.30 * static_cast<double>(d.source_bytes));
}

TEST(FormatObservationTest, HeaderOnlyWhenEmpty) {
  EXPECT_EQ(format_observation(DistilledDom{}, "https://a.sim/p", "A"), "URL: https://a.sim/p\nTitle: A\n");
}

TEST(FormatObservationTest, NumberedElementLines) {
  auto d = distill("<a id='x'>Go</a><button id='y'>Stop</button>");
  auto s = format_observation(d, "u", "t");
  EXPECT_NE(s.find("[1] x (link) \"Go\"\n"), std::string::npos);
  EXPECT_NE(s.find("[2] y (button) \"Stop\"\n"), std::string::npos);
  EXPECT_EQ(s.find("[3]"), std::string::npos);
}

TEST(FormatObservationTest, ShopPagesMatchGolden) {
  auto script = testsupport::hermetic_sites().at("Shop");
  std::string all;
  for (const auto& [pid, page] : script->pages) {
    simweb::SimState st = simweb::initial_state(*script);
    st.current_page = pid;
    all += format_observation(distill(simweb::render_dom(st, *script)), script->page_url(pid), page.title);
    all += "----\n";
  }
  EXPECT_EQ(testsupport::check_golden("shop_observations.txt", all), "");
}
