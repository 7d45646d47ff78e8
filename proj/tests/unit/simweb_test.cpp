#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "webrefine/dom_distill.hpp"
#include "webrefine/errors.hpp"
#include "webrefine/png.hpp"
#include "webrefine/simweb.hpp"

using namespace webrefine;
using namespace webrefine::simweb;

namespace {

const char* kMinimal = R"({
  "site_name": "Tiny",
  "pages": {"only": {"title": "Tiny page", "initial": true, "elements": []}},
  "success_predicate": true
})";

std::shared_ptr<const SiteScript> shop() { return testsupport::hermetic_sites().at("Shop"); }

}  // namespace

TEST(LoadSiteTest, MinimalScript) {
  auto s = load_site(kMinimal);
  EXPECT_EQ(s.site_name, "Tiny");
  EXPECT_EQ(s.pages.size(), 1u);
  EXPECT_EQ(s.base_url, "https://tiny.sim");
  EXPECT_EQ(s.initial_page().id, "only");
}

TEST(LoadSiteTest, DanglingPageIsNamed) {
  const char* text = R"({
    "site_name": "Tiny",
    "pages": {"only": {"title": "T", "initial": true,
              "elements": [{"id": "pay", "kind": "button", "label": "Pay", "transitions": [{"target": "checkout"}]}]}},
    "success_predicate": true
  })";
  try {
    load_site(text);
    FAIL() << "expected ScriptSemanticError";
  } catch (const ScriptSemanticError& e) {
    EXPECT_NE(std::string(e.what()).find("'checkout'"), std::string::npos) << e.what();
  }
}

TEST(LoadSiteTest, SyntaxErrorCarriesPosition) {
  try {
    load_site("{\n  \"site_name\": \"x\",\n  oops\n}");
    FAIL() << "expected ScriptSyntaxError";
  } catch (const ScriptSyntaxError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GE(e.column(), 3u);
  }
}

TEST(LoadSiteTest, InvariantViolations) {
  // No initial page.
  EXPECT_THROW(load_site(R"({"site_name":"a","pages":{"p":{"title":"t"}},"success_predicate":true})"),
               ScriptSemanticError);
  // Duplicate element id.
  EXPECT_THROW(load_site(R"({"site_name":"a","pages":{"p":{"title":"t","initial":true,"elements":[
      {"id":"x","kind":"link","label":"a"},{"id":"x","kind":"button","label":"b"}]}},"success_predicate":true})"),
               ScriptSemanticError);
  // Unknown key.
  EXPECT_THROW(load_site(R"({"site_name":"a","colour":"red","pages":{"p":{"title":"t","initial":true}},
      "success_predicate":true})"),
               ScriptSemanticError);
  // Predicate naming an undeclared page.
  EXPECT_THROW(load_site(R"({"site_name":"a","pages":{"p":{"title":"t","initial":true}},
      "success_predicate":{"page":"q"}})"),
               ScriptSemanticError);
}

TEST(LoadSiteTest, ShopFixtureShape) {
  auto s = shop();
  EXPECT_EQ(s->pages.size(), 4u);
  EXPECT_EQ(s->element_count(), 9u);
}

TEST(RenderDomTest, TitleOnceAndDeterministic) {
  auto s = load_site(kMinimal);
  auto st = initial_state(s);
  auto html = render_dom(st, s);
  EXPECT_EQ(html, render_dom(st, s));
  std::size_t first = html.find("Tiny page");
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(html.find("Tiny page", first + 1), std::string::npos);
}

TEST(RenderDomTest, ShopResultsCarriesEveryElementId) {
  auto s = shop();
  SimState st = initial_state(*s);
  st.current_page = "results";
  auto d = distill(render_dom(st, *s));
  std::set<std::string> got, want;
  for (const auto& e : d.interactive_elements) got.insert(e.ref);
  for (const auto& e : s->page("results").elements) want.insert(e.id);
  EXPECT_EQ(got, want);
}

TEST(ScreenshotTest, FailurePlan) {
  auto s = load_site(kMinimal);
  auto st = initial_state(s);
  auto r = capture_screenshot(st, s, 0, 3);
  EXPECT_TRUE(r.captured);
  EXPECT_EQ(r.attempts_used, 1);
  ASSERT_TRUE(png::read_header(r.image));

  s.screenshot_failure_plan = {{0, 2}};
  r = capture_screenshot(st, s, 0, 3);
  EXPECT_TRUE(r.captured);
  EXPECT_EQ(r.attempts_used, 3);
  // Other steps are unaffected.
  EXPECT_EQ(capture_screenshot(st, s, 1, 3).attempts_used, 1);

  s.screenshot_failure_plan = {{0, 5}};
  r = capture_screenshot(st, s, 0, 3);
  EXPECT_FALSE(r.captured);
  EXPECT_EQ(r.attempts_used, 3);
  EXPECT_TRUE(r.image.empty());

  s.screenshot_failure_plan = {{-1, 3}};
  EXPECT_FALSE(capture_screenshot(st, s, 7, 3).captured);
  EXPECT_THROW(capture_screenshot(st, s, 0, 0), ConfigError);
}

TEST(ScreenshotTest, PngBytesAreDeterministicAndStateDependent) {
  auto s = shop();
  SimState a = initial_state(*s);
  a.current_page = "results";
  SimState b = a;
  b.widget_state["color_filter"] = "black";
  auto ra = capture_screenshot(a, *s, 0, 1);
  EXPECT_EQ(ra.image, capture_screenshot(a, *s, 0, 1).image);
  EXPECT_NE(ra.image, capture_screenshot(b, *s, 0, 1).image);
}

TEST(SimWebEnvironmentTest, ClickFollowsLinkAndMissingElementFailsInBand) {
  SimWebEnvironment env(shop());
  auto obs = env.reset(testsupport::hermetic_task("Shop--0"));
  EXPECT_EQ(obs.url, "https://shop.sim/home");
  EXPECT_TRUE(obs.feedback.empty());

  auto r = env.step(action::Click{"nowhere"});
  EXPECT_EQ(r.observation.feedback, "action failed: no such element 'nowhere'");
  EXPECT_EQ(env.state().current_page, "home");
  EXPECT_FALSE(r.done);

  r = env.step(action::Click{"cart_link"});
  EXPECT_EQ(r.observation.feedback, "clicked cart_link");
  EXPECT_EQ(env.state().current_page, "cart");
  EXPECT_EQ(r.observation.title, "Shop - Cart");
}

TEST(SimWebEnvironmentTest, WidgetCyclesAndPredicateEndsEpisode) {
  SimWebEnvironment env(shop());
  env.reset(testsupport::hermetic_task("Shop--0"));
  env.step(action::Type{"search_box", "white shoes"});
  auto r = env.step(action::PressEnter{});
  EXPECT_EQ(r.observation.feedback, "pressed enter in search_box");
  r = env.step(action::Click{"color_filter"});
  EXPECT_EQ(r.observation.feedback, "color_filter set to white");
  EXPECT_EQ(env.ground_truth_success(), false);
  r = env.step(action::Click{"product_link"});
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_EQ(env.ground_truth_success(), true);
  EXPECT_THROW(env.step(action::Scroll{}), EpisodeFinished);
  env.reset(testsupport::hermetic_task("Shop--0"));
  EXPECT_FALSE(env.done());
  EXPECT_EQ(env.state().step_count, 0);
}

TEST(SimWebEnvironmentTest, StopEndsWithoutReward) {
  SimWebEnvironment env(shop());
  env.reset(testsupport::hermetic_task("Shop--0"));
  auto r = env.step(action::Stop{});
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.reward, 0.0);
}

TEST(SimWebEnvironmentTest, ScriptedEnvironmentError) {
  auto s = std::make_shared<SiteScript>(*shop());
  s->environment_error_at_step = 1;
  SimWebEnvironment env(s);
  env.reset(testsupport::hermetic_task("Shop--0"));
  EXPECT_NO_THROW(env.step(action::Scroll{}));
  EXPECT_THROW(env.step(action::Scroll{}), EnvironmentError);
}

TEST(SimWebEnvironmentTest, TypingIntoANonTextboxFails) {
  SimWebEnvironment env(shop());
  env.reset(testsupport::hermetic_task("Shop--0"));
  auto r = env.step(action::Type{"cart_link", "x"});
  EXPECT_EQ(r.observation.feedback.rfind("action failed", 0), 0u);
}

TEST(EnvironmentFactoryTest, UnknownSite) {
  auto f = testsupport::hermetic_env_factory();
  Task t{"X--1", "Nowhere", "x", "https://x.sim/"};
  EXPECT_THROW(f(t), ConfigError);
  EXPECT_NE(f(testsupport::hermetic_task("News--0")), nullptr);
}
