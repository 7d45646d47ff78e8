#include "support.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "webrefine/archive.hpp"
#include "webrefine/png.hpp"
#include "webrefine/text.hpp"

namespace testsupport {

using namespace webrefine;

fs::path source_path(std::string_view rel) { return fs::path(WEBREFINE_SOURCE_DIR) / rel; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  auto name = "webrefine-test-" + std::to_string(rd()) + "-" + std::to_string(counter++);
  path_ = fs::temp_directory_path() / name;
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::map<std::string, std::shared_ptr<const simweb::SiteScript>> hermetic_sites() {
  return simweb::load_site_directory(source_path("fixtures/sites"));
}

EnvironmentFactory hermetic_env_factory() { return simweb::environment_factory(hermetic_sites()); }

std::vector<Task> hermetic_tasks() {
  return load_tasks(source_path("fixtures/suites/hermetic.jsonl"), Subset::All);
}

Task hermetic_task(std::string_view id) {
  for (auto& t : hermetic_tasks()) {
    if (t.id == id) return t;
  }
  throw std::runtime_error("no hermetic task " + std::string(id));
}

BackendFactory scripted_backends(const nlohmann::json& doc) {
  auto shared = std::make_shared<const nlohmann::json>(doc);
  return [shared](const Task& task) {
    auto role = [&](const char* name) -> std::shared_ptr<llm::Backend> {
      const auto& d = *shared;
      if (d.contains("tasks") && d["tasks"].contains(task.id) && d["tasks"][task.id].contains(name)) {
        return llm::ScriptedBackend::from_json(d["tasks"][task.id][name]);
      }
      if (d.contains("default") && d["default"].contains(name)) {
        return llm::ScriptedBackend::from_json(d["default"][name]);
      }
      return nullptr;
    };
    return TaskBackends{{role("planner"), role("browser")}, role("validator")};
  };
}

BackendFactory hermetic_backends() {
  return scripted_backends(read_json_file(source_path("fixtures/scripts/hermetic_backends.json")));
}

llm::RetryPolicy no_sleep_retry(int max_retries) {
  llm::RetryPolicy p;
  p.max_retries = max_retries;
  p.sleep = [](std::chrono::milliseconds) {};
  return p;
}

AgentConfig test_agent_config() {
  auto cfg = AgentConfig::with_default_prompts();
  cfg.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
  cfg.retry = no_sleep_retry();
  return cfg;
}

std::string check_golden(std::string_view name, std::string_view actual) {
  auto path = source_path("tests/golden") / name;
  const char* update = std::getenv("WEBREFINE_UPDATE_GOLDEN");
  if (update && std::string_view(update) == "1") {
    write_text_file(path, actual);
    return {};
  }
  if (!fs::exists(path)) return "missing golden file " + path.string();
  auto expected = read_text_file(path);
  if (expected == actual) return {};
  std::size_t i = 0;
  while (i < expected.size() && i < actual.size() && expected[i] == actual[i]) ++i;
  std::ostringstream os;
  os << name << " differs at byte " << i << " (expected " << expected.size() << " bytes, got " << actual.size()
     << ")";
  return os.str();
}

std::string decode_latex_prompt(std::string_view latex) {
  auto lines = text::split_lines(latex);
  // Drop the \texttt{ opener and the closing brace.
  std::size_t first = 0, last = lines.size();
  while (first < last && text::trim(lines[first]) != "\\texttt{") ++first;
  while (last > first && text::trim(lines[last - 1]) != "}") --last;
  std::string out;
  for (std::size_t i = first + 1; i + 1 < last; ++i) {
    std::string line(lines[i]);
    const std::string nl = "\\newline";
    if (line.size() >= nl.size() && line.compare(line.size() - nl.size(), nl.size(), nl) == 0) {
      line.erase(line.size() - nl.size());
      while (!line.empty() && line.back() == ' ') line.pop_back();
    }
    std::string plain;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (line[k] == '\\' && k + 1 < line.size() && std::string_view("#{}_").find(line[k + 1]) != std::string_view::npos) {
        continue;
      }
      plain += line[k];
    }
    if (!out.empty() || i > first + 1) out += "\n";
    out += plain;
  }
  return out;
}

std::string latex_prompt(std::string_view file_name) {
  return decode_latex_prompt(read_text_file(source_path("fixtures/prompt_latex") / file_name));
}

Task golden_prompt_task() {
  return Task{"Allrecipes--0",
              "Allrecipes",
              "Provide a recipe for vegetarian lasagna with more than 100 reviews and a rating of at least 4.5 "
              "stars suitable for 6 people.",
              "https://www.allrecipes.com/"};
}

Trajectory golden_prompt_trajectory() {
  Trajectory t;
  t.task_id = "Allrecipes--0";
  t.recorded_at = "2024-01-01T00:00:00Z";
  t.planner_log = {
      {ChatRole::UserProxy, "Task: " + golden_prompt_task().instruction + "\nStart URL: https://www.allrecipes.com/"},
      {ChatRole::Planner, "Search for vegetarian lasagna"},
      {ChatRole::UserProxy, "Step 1 result: Search results are listed.\nCurrent page: Results (https://www.allrecipes.com/search)"},
      {ChatRole::Planner, "##TERMINATE## Spinach lasagna, 4.7 stars from 812 reviews, serves 6."},
  };
  for (int i = 0; i < 3; ++i) {
    std::vector<std::uint8_t> rgb(4 * 3 * 3, static_cast<std::uint8_t>(40 * (i + 1)));
    ScreenshotRecord s;
    s.step_index = i;
    s.image = png::encode_rgb(4, 3, rgb);
    s.captured = true;
    s.attempts_used = 1;
    t.screenshots.push_back(std::move(s));
  }
  t.final_response = "Spinach lasagna, 4.7 stars from 812 reviews, serves 6.";
  t.termination = Termination::AgentDeclaredDone;
  return t;
}

std::string render_request(const llm::ChatRequest& req) {
  std::ostringstream os;
  os << "model: " << req.model_id << "\n";
  int image = 0;
  for (const auto& m : req.messages) {
    os << "=== " << llm::to_string(m.role) << "\n";
    for (const auto& part : m.parts) {
      if (auto* t = std::get_if<llm::TextPart>(&part)) {
        os << "--- text\n" << t->text << "\n";
      } else {
        const auto& img = std::get<llm::ImagePart>(part);
        auto h = png::read_header(img.png);
        os << "--- [image " << ++image << ": " << (h ? h->width : 0) << "x" << (h ? h->height : 0) << ", "
           << img.png.size() << " bytes]\n";
      }
    }
  }
  return os.str();
}

}  // namespace testsupport
