#include <gtest/gtest.h>

#include <cstdio>

#include "support.hpp"
#include "webrefine/archive.hpp"
#include "webrefine/errors.hpp"
#include "webrefine/hier_agent.hpp"
#include "webrefine/simweb.hpp"

using namespace webrefine;
using llm::ScriptedBackend;

namespace {

std::shared_ptr<ScriptedBackend> queue(std::vector<std::string> replies) {
  return std::make_shared<ScriptedBackend>(std::move(replies));
}

std::unique_ptr<WebEnvironment> shop_env() {
  return testsupport::hermetic_env_factory()(testsupport::hermetic_task("Shop--0"));
}

std::string fnv_hex(const Bytes& b) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto c : b) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

TEST(PlannerReplyTest, NextStepAndTerminate) {
  EXPECT_EQ(parse_planner_reply("Search for white shoes"), PlannerDirective(NextStep{"Search for white shoes"}));
  EXPECT_EQ(parse_planner_reply("##TERMINATE## The answer is 42."), PlannerDirective(Terminate{"The answer is 42."}));
  EXPECT_EQ(parse_planner_reply("The answer is 42.\n##TERMINATE##"), PlannerDirective(Terminate{"The answer is 42."}));
  EXPECT_EQ(parse_planner_reply("first\nsecond"), PlannerDirective(NextStep{"first\nsecond"}));
}

TEST(PlannerReplyTest, EmptyRepliesAreErrors) {
  EXPECT_THROW(parse_planner_reply(""), PlannerReplyError);
  EXPECT_THROW(parse_planner_reply("  \n "), PlannerReplyError);
  EXPECT_THROW(parse_planner_reply("##TERMINATE##"), PlannerReplyError);
}

TEST(PlanNextStepTest, SeedsTaskAndFeedbackMessages) {
  auto task = testsupport::hermetic_task("Shop--0");
  auto cfg = testsupport::test_agent_config();
  std::vector<ChatEntry> log;
  auto planner = queue({"Search for white shoes"});
  auto d = plan_next_step(*planner, task, log, std::string("wrong colour"), cfg);
  EXPECT_EQ(d, PlannerDirective(NextStep{"Search for white shoes"}));
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].role, ChatRole::UserProxy);
  EXPECT_EQ(log[0].content, "Task: " + task.instruction + "\nStart URL: " + task.start_url);
  EXPECT_EQ(log[1].role, ChatRole::Verifier);
  EXPECT_EQ(log[1].content, "Previous attempt judged incomplete. Feedback: wrong colour");
  EXPECT_EQ(log[2].role, ChatRole::Planner);
}

TEST(PlanNextStepTest, EmptyReplySurfacesAnError) {
  std::vector<ChatEntry> log;
  auto planner = queue({""});
  EXPECT_THROW(plan_next_step(*planner, testsupport::hermetic_task("Shop--0"), log, std::nullopt,
                              testsupport::test_agent_config()),
               PlannerReplyError);
}

TEST(BrowserReplyTest, Grammar) {
  auto a = parse_browser_reply("I will click it.\nACTION: click search_box");
  ASSERT_TRUE(a);
  EXPECT_EQ(std::get<ActionCommand>(*a), ActionCommand(action::Click{"search_box"}));
  auto d = parse_browser_reply("DONE: Searched.");
  ASSERT_TRUE(d);
  EXPECT_EQ(std::get<BrowserDone>(*d).summary, "Searched.");
  EXPECT_FALSE(parse_browser_reply("no idea"));
  EXPECT_FALSE(parse_browser_reply("ACTION: fly away"));
  EXPECT_FALSE(parse_browser_reply("ACTION: click"));
}

TEST(ExecuteDirectiveTest, SearchDecomposesIntoThreeActions) {
  auto env = shop_env();
  auto obs = env->reset(testsupport::hermetic_task("Shop--0"));
  auto browser = queue({"ACTION: click search_box", "ACTION: type search_box white shoes", "ACTION: press_enter",
                        "DONE: Searched for white shoes."});
  auto r = execute_directive(*browser, NextStep{"Search for white shoes"}, *env, obs, 0,
                             testsupport::test_agent_config());
  ASSERT_EQ(r.step.actions.size(), 3u);
  EXPECT_EQ(r.step.actions[0].command, ActionCommand(action::Click{"search_box"}));
  EXPECT_EQ(r.step.actions[1].command, ActionCommand(action::Type{"search_box", "white shoes"}));
  EXPECT_EQ(r.step.actions[2].command, ActionCommand(action::PressEnter{}));
  EXPECT_EQ(r.summary, "Searched for white shoes.");
  EXPECT_EQ(r.step.directive, "Search for white shoes");
  EXPECT_EQ(r.step.observation_after.title, "Shop - Search results");
  ASSERT_TRUE(r.step.observation_after.screenshot);
  EXPECT_TRUE(r.step.observation_after.screenshot->captured);
  EXPECT_EQ(r.step.observation_after.screenshot->step_index, 0);
  // Opening message, then one agent and one executor entry per turn, then DONE.
  EXPECT_EQ(r.step.sub_log.size(), 8u);
  EXPECT_EQ(r.step.sub_log[0].content.rfind("Directive: Search for white shoes\n\nObservation:\nURL: ", 0), 0u);
}

TEST(ExecuteDirectiveTest, MissingElementIsRecordedAndTheLoopContinues) {
  auto env = shop_env();
  auto obs = env->reset(testsupport::hermetic_task("Shop--0"));
  auto browser = queue({"ACTION: click checkout_button", "ACTION: click cart_link", "DONE: In the cart."});
  auto r = execute_directive(*browser, NextStep{"Open the cart"}, *env, obs, 0, testsupport::test_agent_config());
  ASSERT_EQ(r.step.actions.size(), 2u);
  EXPECT_EQ(r.step.actions[0].summary.rfind("action failed", 0), 0u);
  EXPECT_EQ(r.step.actions[1].summary, "clicked cart_link");
}

TEST(ExecuteDirectiveTest, ActionBudget) {
  auto env = shop_env();
  auto obs = env->reset(testsupport::hermetic_task("Shop--0"));
  auto browser = std::make_shared<ScriptedBackend>();
  browser->set_default("ACTION: scroll down");
  auto cfg = testsupport::test_agent_config();
  cfg.max_actions_per_step = 1;
  auto r = execute_directive(*browser, NextStep{"Browse"}, *env, obs, 0, cfg);
  EXPECT_EQ(r.step.actions.size(), 1u);
  EXPECT_EQ(r.summary, "Action budget exhausted before the step was finished.");
}

TEST(ExecuteDirectiveTest, UnparseableReplyGetsACorrection) {
  auto env = shop_env();
  auto obs = env->reset(testsupport::hermetic_task("Shop--0"));
  auto browser = queue({"let me think", "DONE: nothing to do"});
  auto r = execute_directive(*browser, NextStep{"Wait"}, *env, obs, 0, testsupport::test_agent_config());
  EXPECT_TRUE(r.step.actions.empty());
  ASSERT_EQ(r.step.sub_log.size(), 4u);
  EXPECT_EQ(r.step.sub_log[2].content.rfind("Result: could not parse a command", 0), 0u);
}

TEST(ExecuteDirectiveTest, EnvironmentErrorFlagsTheStep) {
  auto script = std::make_shared<simweb::SiteScript>(*testsupport::hermetic_sites().at("Shop"));
  script->environment_error_at_step = 0;
  simweb::SimWebEnvironment env(script);
  auto obs = env.reset(testsupport::hermetic_task("Shop--0"));
  auto browser = queue({"ACTION: click cart_link"});
  auto r = execute_directive(*browser, NextStep{"Open the cart"}, env, obs, 0, testsupport::test_agent_config());
  ASSERT_TRUE(r.step.error);
  EXPECT_FALSE(r.step.observation_after.screenshot);
}

TEST(RunTaskTest, ImmediateTermination) {
  auto env = shop_env();
  auto planner = queue({"##TERMINATE## Nothing to do."});
  auto browser = queue({});
  auto t = run_task({planner, browser}, testsupport::hermetic_task("Shop--0"), *env, testsupport::test_agent_config());
  EXPECT_TRUE(t.steps.empty());
  EXPECT_EQ(t.termination, Termination::AgentDeclaredDone);
  EXPECT_EQ(t.final_response, "Nothing to do.");
  EXPECT_EQ(t.oracle_label, Label::Incomplete);
  EXPECT_TRUE(validate_trajectory(t).empty());
}

TEST(RunTaskTest, PlannerBudget) {
  auto env = shop_env();
  auto planner = std::make_shared<ScriptedBackend>();
  planner->set_default("Look around");
  auto browser = std::make_shared<ScriptedBackend>();
  browser->set_default("DONE: Looked.");
  auto cfg = testsupport::test_agent_config();
  cfg.max_planner_steps = 2;
  auto t = run_task({planner, browser}, testsupport::hermetic_task("Shop--0"), *env, cfg);
  EXPECT_EQ(t.steps.size(), 2u);
  EXPECT_EQ(t.termination, Termination::StepBudgetExhausted);
  EXPECT_FALSE(t.final_response);
  EXPECT_TRUE(validate_trajectory(t).empty());
}

TEST(RunTaskTest, EnvironmentErrorTerminates) {
  auto script = std::make_shared<simweb::SiteScript>(*testsupport::hermetic_sites().at("Shop"));
  script->environment_error_at_step = 1;
  simweb::SimWebEnvironment env(script);
  auto planner = std::make_shared<ScriptedBackend>();
  planner->set_default("Look around");
  auto browser = std::make_shared<ScriptedBackend>();
  browser->set_default("ACTION: scroll down");
  auto t = run_task({planner, browser}, testsupport::hermetic_task("Shop--0"), env, testsupport::test_agent_config());
  EXPECT_EQ(t.termination, Termination::EnvironmentError);
  ASSERT_EQ(t.steps.size(), 1u);
  EXPECT_TRUE(t.steps[0].error);
}

TEST(RunTaskTest, ShopGoldenArchive) {
  auto task = testsupport::hermetic_task("Shop--0");
  auto backends = testsupport::hermetic_backends()(task);
  auto env = shop_env();
  auto t = run_task(backends.agent, task, *env, testsupport::test_agent_config());

  EXPECT_TRUE(validate_trajectory(t).empty());
  ASSERT_EQ(t.steps.size(), 3u);
  EXPECT_EQ(t.termination, Termination::AgentDeclaredDone);
  EXPECT_EQ(t.oracle_label, Label::Incomplete);

  std::string shots;
  for (const auto& s : t.screenshots) shots += screenshot_file_name(s) + " " + fnv_hex(s.image) + "\n";
  EXPECT_EQ(testsupport::check_golden("shop_run/trajectory.json", to_stable_text(trajectory_to_json(t))), "");
  EXPECT_EQ(testsupport::check_golden("shop_run/screenshots.txt", shots), "");

  // A second run is identical.
  auto again_backends = testsupport::hermetic_backends()(task);
  auto env2 = shop_env();
  EXPECT_EQ(run_task(again_backends.agent, task, *env2, testsupport::test_agent_config()), t);
}

TEST(RunTaskTest, HierarchySeparationOnTheHermeticSuite) {
  auto make_env = testsupport::hermetic_env_factory();
  auto backends = testsupport::hermetic_backends();
  for (const auto& task : testsupport::hermetic_tasks()) {
    auto env = make_env(task);
    auto t = run_task(backends(task).agent, task, *env, testsupport::test_agent_config());
    EXPECT_TRUE(validate_trajectory(t).empty()) << task.id;
    std::size_t next_step = 0;
    for (const auto& e : t.planner_log) {
      EXPECT_EQ(e.content.find("Interactive elements:"), std::string::npos) << task.id;
      for (const auto& s : t.steps) {
        EXPECT_EQ(e.content.find(s.observation_after.distilled_dom), std::string::npos) << task.id;
      }
      if (e.role == ChatRole::Planner && next_step < t.steps.size()) {
        EXPECT_EQ(t.steps[next_step++].directive, e.content) << task.id;
      }
    }
    for (const auto& s : t.steps) {
      for (const auto& e : s.sub_log) {
        if (s.directive.find(task.instruction) == std::string::npos) {
          EXPECT_EQ(e.content.find(task.instruction), std::string::npos) << task.id;
        }
      }
    }
  }
}

TEST(AgentConfigTest, Validation) {
  auto cfg = AgentConfig::with_default_prompts();
  EXPECT_FALSE(cfg.planner_system_prompt.empty());
  EXPECT_NO_THROW(cfg.validate());
  cfg.max_planner_steps = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
