#include <gtest/gtest.h>

#include <random>

#include "webrefine/core_model.hpp"

using namespace webrefine;

namespace {

Trajectory three_step_trajectory() {
  Trajectory t;
  t.task_id = "Shop--0";
  t.planner_log = {{ChatRole::UserProxy, "Task: x"}, {ChatRole::Planner, "step a"},
                   {ChatRole::UserProxy, "Step 1 result: ok"}, {ChatRole::Planner, "##TERMINATE## done"}};
  for (int i = 0; i < 3; ++i) {
    StepRecord s;
    s.index = i;
    s.directive = "step " + std::to_string(i);
    s.actions.push_back({action::Click{"link_" + std::to_string(i)}, "clicked"});
    s.observation_after.url = "https://shop.sim/home";
    s.observation_after.distilled_dom = "URL: https://shop.sim/home";
    t.steps.push_back(s);
    t.screenshots.push_back({i, Bytes{1, 2, 3}, 1, true});
  }
  t.final_response = "done";
  t.termination = Termination::AgentDeclaredDone;
  return t;
}

}  // namespace

TEST(TaskTest, ValidTaskHasNoViolations) {
  Task t{"Amazon--4", "Amazon", "Find a kettle", "https://www.amazon.com/"};
  EXPECT_TRUE(validate_task(t).empty());
}

TEST(TaskTest, ViolationsNameTheField) {
  Task t{"", "Amazon", "  ", "amazon dot com"};
  auto v = validate_task(t);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].rfind("id:", 0), 0u);
  EXPECT_EQ(v[1].rfind("instruction:", 0), 0u);
  EXPECT_EQ(v[2].rfind("start_url:", 0), 0u);
}

TEST(TaskTest, UrlSyntax) {
  EXPECT_TRUE(is_url("https://shop.sim/home"));
  EXPECT_TRUE(is_url("http://localhost:8080"));
  EXPECT_FALSE(is_url("shop.sim/home"));
  EXPECT_FALSE(is_url("https://"));
  EXPECT_FALSE(is_url("1http://x"));
}

TEST(ActionTest, RefRequiredWhereTheVariantNeedsOne) {
  EXPECT_TRUE(validate_action(action::Click{"a"}).empty());
  EXPECT_FALSE(validate_action(action::Click{""}).empty());
  EXPECT_FALSE(validate_action(action::Type{"", "x"}).empty());
  EXPECT_FALSE(validate_action(action::ReadText{""}).empty());
  EXPECT_FALSE(validate_action(action::Navigate{""}).empty());
  EXPECT_TRUE(validate_action(action::PressEnter{}).empty());
  EXPECT_TRUE(validate_action(action::Stop{}).empty());
}

TEST(ActionTest, GrammarExamples) {
  EXPECT_EQ(format_action(action::Type{"search_box", "white shoes"}), "type search_box white shoes");
  EXPECT_EQ(parse_action("type search_box white shoes"), ActionCommand(action::Type{"search_box", "white shoes"}));
  EXPECT_EQ(parse_action("CLICK cart_link"), ActionCommand(action::Click{"cart_link"}));
  EXPECT_EQ(parse_action("scroll up"), ActionCommand(action::Scroll{ScrollDirection::Up}));
  EXPECT_EQ(parse_action("press_enter"), ActionCommand(action::PressEnter{}));
  EXPECT_FALSE(parse_action("jump high"));
  EXPECT_FALSE(parse_action("click"));
  EXPECT_FALSE(parse_action(""));
}

TEST(ActionTest, FormatParseRoundTripOnGeneratedCommands) {
  std::mt19937 rng(7);
  const std::vector<std::string> refs = {"a", "search_box", "e12", "x-y"};
  const std::vector<std::string> texts = {"white shoes", "Paris", "a  b", "42"};
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  for (int i = 0; i < 500; ++i) {
    ActionCommand c;
    switch (rng() % 7) {
      case 0: c = action::Navigate{"https://" + pick(refs) + ".sim/p"}; break;
      case 1: c = action::Click{pick(refs)}; break;
      case 2: c = action::Type{pick(refs), pick(texts)}; break;
      case 3: c = action::PressEnter{}; break;
      case 4: c = action::Scroll{rng() % 2 ? ScrollDirection::Up : ScrollDirection::Down}; break;
      case 5: c = action::ReadText{pick(refs)}; break;
      default: c = action::Stop{}; break;
    }
    auto back = parse_action(format_action(c));
    ASSERT_TRUE(back) << format_action(c);
    EXPECT_EQ(*back, c) << format_action(c);
  }
}

TEST(EnumTest, SpellingsRoundTrip) {
  for (auto r : {ChatRole::Planner, ChatRole::UserProxy, ChatRole::BrowserAgent, ChatRole::Executor,
                 ChatRole::Verifier}) {
    EXPECT_EQ(parse_chat_role(to_string(r)), r);
  }
  for (auto m : {Modality::TaskLogText, Modality::ScreenshotsVision, Modality::ScreenshotsPlusFinalResponse}) {
    EXPECT_EQ(parse_modality(to_string(m)), m);
  }
  EXPECT_EQ(parse_label("complete"), Label::Complete);
  EXPECT_FALSE(parse_label("done"));
  EXPECT_FALSE(uses_screenshots(Modality::TaskLogText));
  EXPECT_TRUE(uses_screenshots(Modality::ScreenshotsPlusFinalResponse));
}

TEST(TrajectoryTest, WellFormedHasNoViolations) {
  EXPECT_TRUE(validate_trajectory(three_step_trajectory()).empty());
}

TEST(TrajectoryTest, NonContiguousStepIndices) {
  auto t = three_step_trajectory();
  t.steps.pop_back();
  t.steps[1].index = 2;
  auto v = validate_trajectory(t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "steps: non-contiguous indices");
}

TEST(TrajectoryTest, DoneWithoutFinalResponse) {
  auto t = three_step_trajectory();
  t.final_response.reset();
  EXPECT_EQ(validate_trajectory(t).size(), 1u);
}

TEST(TrajectoryTest, FinalResponseOnlyWhenDone) {
  auto t = three_step_trajectory();
  t.termination = Termination::StepBudgetExhausted;
  EXPECT_EQ(validate_trajectory(t).size(), 1u);
}

TEST(TrajectoryTest, UnsortedAndEmptyScreenshots) {
  auto t = three_step_trajectory();
  std::swap(t.screenshots[0], t.screenshots[2]);
  t.screenshots[1].image.clear();
  auto v = validate_trajectory(t);
  EXPECT_EQ(v.size(), 2u);
}

TEST(TrajectoryTest, PlannerLogRoles) {
  auto t = three_step_trajectory();
  t.planner_log.push_back({ChatRole::Executor, "x"});
  t.planner_log.push_back({ChatRole::Planner, "a"});
  t.planner_log.push_back({ChatRole::Planner, "b"});
  auto v = validate_trajectory(t);
  EXPECT_EQ(v.size(), 2u);
}

TEST(TrajectoryTest, InvalidUtf8Dom) {
  auto t = three_step_trajectory();
  t.steps[0].observation_after.distilled_dom = std::string("bad \xC3");
  ASSERT_EQ(validate_trajectory(t).size(), 1u);
}

TEST(TimeTest, Iso8601Shape) {
  auto s = utc_now_iso8601();
  ASSERT_EQ(s.size(), 20u);
  EXPECT_EQ(s[4], '-');
  EXPECT_EQ(s[10], 'T');
  EXPECT_EQ(s.back(), 'Z');
}
