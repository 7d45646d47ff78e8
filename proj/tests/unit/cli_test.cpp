#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "webrefine/archive.hpp"
#include "webrefine/cli.hpp"
#include "webrefine/eval_harness.hpp"

using namespace webrefine;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "webrefine");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string src(std::string_view rel) { return testsupport::source_path(rel).string(); }

std::vector<std::string> suite_args(std::string_view cmd, std::string_view suite, const std::filesystem::path& out) {
  return {std::string(cmd),
          "--suite",
          src(suite),
          "--env",
          "simweb:" + src("fixtures/sites"),
          "--backend",
          "scripted:" + src("fixtures/scripts/hermetic_backends.json"),
          "--timestamp",
          "2024-01-01T00:00:00Z",
          "--out",
          out.string()};
}

std::vector<std::string> with(std::vector<std::string> args, const std::vector<std::string>& extra) {
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

TEST(CliTest, HelpListsSubcommands) {
  auto r = cli({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  for (auto sub : {"run", "refine", "validate", "eval", "report"}) EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  EXPECT_EQ(testsupport::check_golden("cli/help.txt", r.out), "");
}

TEST(CliTest, SubcommandHelpGoldens) {
  for (std::string sub : {"run", "refine", "validate", "eval", "report"}) {
    auto r = cli({sub, "--help"});
    EXPECT_EQ(r.code, kExitOk) << sub;
    EXPECT_EQ(testsupport::check_golden("cli/help_" + sub + ".txt", r.out), "") << sub;
  }
}

TEST(CliTest, UsageErrorsExitWithTwo) {
  testsupport::TempDir dir;
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"launch"}).code, kExitUsage);
  auto base = suite_args("refine", "fixtures/suites/hermetic.jsonl", dir / "out");
  EXPECT_EQ(cli(suite_args("refine", "fixtures/suites/missing.jsonl", dir / "out")).code, kExitUsage);
  EXPECT_EQ(cli(with(base, {"--parallelism", "0"})).code, kExitUsage);
  EXPECT_EQ(cli(with(base, {"--max-attempts", "0"})).code, kExitUsage);
  EXPECT_EQ(cli(with(base, {"--modality", "smell"})).code, kExitUsage);
  EXPECT_EQ(cli(with(base, {"--subset", "odd"})).code, kExitUsage);
  auto bad_env = base;
  bad_env[4] = "browser:chrome";
  EXPECT_EQ(cli(bad_env).code, kExitUsage);
  auto bad_backend = base;
  bad_backend[6] = "scripted:/nonexistent.json";
  EXPECT_EQ(cli(bad_backend).code, kExitUsage);
}

TEST(CliTest, BadSuiteLineIsAUsageError) {
  testsupport::TempDir dir;
  write_text_file(dir / "bad.jsonl", "{\"id\": 1}\n");
  auto args = suite_args("run", "fixtures/suites/hermetic.jsonl", dir / "out");
  args[2] = (dir / "bad.jsonl").string();
  auto r = cli(args);
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}

TEST(CliTest, EmptyLabelFileIsAUsageError) {
  testsupport::TempDir dir;
  write_text_file(dir / "labels.csv", "task_id,label\n");
  write_text_file(dir / "verdicts.jsonl", "");
  auto r = cli({"eval", "--verdicts", (dir / "verdicts.jsonl").string(), "--labels", (dir / "labels.csv").string(),
                "--out", (dir / "report").string()});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST(CliTest, ConfigRejectsUnknownKeys) {
  testsupport::TempDir dir;
  auto args = suite_args("run", "fixtures/suites/hermetic.jsonl", dir / "out");
  write_text_file(dir / "bad.toml", "[run]\nparallelizm = 2\n");
  write_text_file(dir / "bad.json", R"({"run": {"parallelizm": 2}})");
  EXPECT_EQ(cli(with({"--config", (dir / "bad.toml").string()}, args)).code, kExitUsage);
  EXPECT_EQ(cli(with({"--config", (dir / "bad.json").string()}, args)).code, kExitUsage);
}

TEST(CliTest, ConfigSuppliesOptions) {
  testsupport::TempDir dir;
  write_text_file(dir / "cfg.toml", "[refine]\nmax-attempts = 1\nparallelism = 2\n");
  write_text_file(dir / "cfg.json", R"({"refine": {"max-attempts": 1, "parallelism": 2}})");
  auto args = suite_args("refine", "fixtures/suites/shop_seeded.jsonl", dir / "a");
  auto toml = cli(with({"--config", (dir / "cfg.toml").string()}, args));
  ASSERT_EQ(toml.code, kExitOk) << toml.err;
  EXPECT_NE(toml.out.find("No refinement: 0/1"), std::string::npos) << toml.out;
  args.back() = (dir / "b").string();
  auto js = cli(with({"--config", (dir / "cfg.json").string()}, args));
  ASSERT_EQ(js.code, kExitOk) << js.err;
  EXPECT_EQ(js.out, toml.out);
  // A flag on the command line beats the file.
  args.back() = (dir / "c").string();
  args.push_back("--max-attempts");
  args.push_back("2");
  auto over = cli(with({"--config", (dir / "cfg.toml").string()}, args));
  EXPECT_NE(over.out.find("Self-Refine (Text): 1/1"), std::string::npos) << over.out;
}

TEST(CliTest, HermeticRefine) {
  testsupport::TempDir dir;
  auto r = cli(suite_args("refine", "fixtures/suites/hermetic.jsonl", dir / "out"));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "Self-Refine (Text): 5/6 succeeded (83.33%), 3 refined, 0 errored\n");
  for (auto f : {"verdicts.jsonl", "audit.jsonl", "summary.json", "oracle_labels.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
  }
  EXPECT_EQ(testsupport::check_golden("cli/hermetic_refine_summary.json", read_text_file(dir / "out/summary.json")), "");
  EXPECT_EQ(testsupport::check_golden("cli/hermetic_refine_verdicts.jsonl", read_text_file(dir / "out/verdicts.jsonl")),
            "");
}

TEST(CliTest, RunWritesArchivesAndOracleLabels) {
  testsupport::TempDir dir;
  auto r = cli(suite_args("run", "fixtures/suites/hermetic.jsonl", dir / "out"));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto labels = ingest_human_labels(dir / "out/oracle_labels.csv");
  EXPECT_EQ(labels.size(), 6u);
  EXPECT_EQ(labels.at("News--0"), Label::Complete);
  EXPECT_EQ(labels.at("Shop--0"), Label::Incomplete);
}

TEST(CliTest, SingleAttemptRefineEqualsRunThenValidate) {
  testsupport::TempDir dir;
  auto backend = "scripted:" + src("fixtures/scripts/hermetic_backends.json");
  auto refine = cli(with(suite_args("refine", "fixtures/suites/hermetic.jsonl", dir / "refine"), {"--max-attempts", "1"}));
  ASSERT_EQ(refine.code, kExitOk) << refine.err;
  ASSERT_EQ(cli(suite_args("run", "fixtures/suites/hermetic.jsonl", dir / "run")).code, kExitOk);
  auto val = cli({"validate", "--archives", (dir / "run").string(), "--backend", backend, "--out",
                  (dir / "val").string()});
  ASSERT_EQ(val.code, kExitOk) << val.err;

  auto sorted = [](std::vector<VerdictRecord> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
    return v;
  };
  auto a = sorted(parse_verdict_records(read_text_file(dir / "refine/verdicts.jsonl")));
  auto b = sorted(parse_verdict_records(read_text_file(dir / "val/verdicts.jsonl")));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].task_id, b[i].task_id);
    EXPECT_EQ(a[i].verdict, b[i].verdict) << a[i].task_id;
  }
}

TEST(CliTest, ScreenshotlessArchiveIsExcludedFromVision) {
  testsupport::TempDir dir;
  ASSERT_EQ(cli(suite_args("run", "fixtures/suites/hermetic.jsonl", dir / "run")).code, kExitOk);
  auto r = cli({"validate", "--archives", (dir / "run").string(), "--backend",
                "scripted:" + src("fixtures/scripts/hermetic_backends.json"), "--modality", "screenshots", "--out",
                (dir / "val").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("1 excluded"), std::string::npos) << r.out;
  auto recs = parse_verdict_records(read_text_file(dir / "val/verdicts.jsonl"));
  for (const auto& rec : recs) EXPECT_EQ(rec.excluded, rec.task_id == "Recipes--0") << rec.task_id;
}

TEST(CliTest, EvalEmitsRequestedFormats) {
  testsupport::TempDir dir;
  ASSERT_EQ(cli(suite_args("refine", "fixtures/suites/hermetic.jsonl", dir / "refine")).code, kExitOk);
  auto labels = (dir / "refine/oracle_labels.csv").string();
  auto r = cli({"eval", "--verdicts", (dir / "refine/verdicts.jsonl").string(), "--labels", labels, "--outcomes",
                (dir / "refine").string(), "--format", "csv,html", "--out", (dir / "report").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "report/metrics.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report/report.html"));
  EXPECT_FALSE(std::filesystem::exists(dir / "report/report.md"));
  auto csv = read_text_file(dir / "report/metrics.csv");
  EXPECT_NE(csv.find("success,Self-Refine (Text),rate,83.33\n"), std::string::npos) << csv;
  EXPECT_EQ(testsupport::check_golden("cli/hermetic_metrics.csv", csv), "");
}

TEST(CliTest, ReportCrossChecksPublishedTables) {
  testsupport::TempDir dir;
  auto r = cli({"report", "--reported", src("fixtures/reported"), "--out", dir.path().string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("Task Log (text): tp+tn=84.24 accuracy=84.24 cells=100.00 ok\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Screenshots (vision): tp+tn=70.05 accuracy=70.04 cells=99.78 ok flagged\n"),
            std::string::npos)
      << r.out;
  auto md = read_text_file(dir / "report.md");
  EXPECT_NE(md.find("| Agent-E (text) | 76.2% |"), std::string::npos);
  EXPECT_NE(md.find("cells sum to 99.78%, not 100%"), std::string::npos);
}

TEST(CliTest, RemoteStubEnvironmentErrorsPerTask) {
  testsupport::TempDir dir;
  auto args = suite_args("run", "fixtures/suites/hermetic.jsonl", dir / "out");
  args[4] = "remote-stub";
  auto r = cli(args);
  EXPECT_EQ(r.code, kExitTaskErrors);
  EXPECT_NE(r.out.find("6 errored"), std::string::npos) << r.out;
}
