#include "webrefine/archive.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "webrefine/errors.hpp"

namespace webrefine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Bytes read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& path, const Bytes& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw ArchiveError("short write to " + path.string());
}

template <class Enum>
Enum parse_enum(const json& j, std::optional<Enum> (*parse)(std::string_view), const char* what) {
  auto v = parse(j.get<std::string>());
  if (!v) throw ArchiveError(std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

json chat_to_json(const std::vector<ChatEntry>& log) {
  json out = json::array();
  for (const auto& e : log) out.push_back({{"role", to_string(e.role)}, {"content", e.content}});
  return out;
}

std::vector<ChatEntry> chat_from_json(const json& j) {
  std::vector<ChatEntry> out;
  for (const auto& e : j) {
    out.push_back({parse_enum(e.at("role"), &parse_chat_role, "chat role"), e.at("content").get<std::string>()});
  }
  return out;
}

json screenshot_to_json(const ScreenshotRecord& s) {
  json j{{"step_index", s.step_index}, {"attempts_used", s.attempts_used}, {"captured", s.captured}};
  j["image_file"] = s.captured ? json(screenshot_file_name(s)) : json(nullptr);
  return j;
}

ScreenshotRecord screenshot_from_json(const json& j, const fs::path& root) {
  ScreenshotRecord s;
  s.step_index = j.at("step_index").get<int>();
  s.attempts_used = j.at("attempts_used").get<int>();
  s.captured = j.at("captured").get<bool>();
  if (s.captured) s.image = read_bytes(root / j.at("image_file").get<std::string>());
  return s;
}

json observation_to_json(const Observation& o) {
  json j{{"url", o.url}, {"title", o.title}, {"distilled_dom", o.distilled_dom}, {"feedback", o.feedback}};
  j["screenshot"] = o.screenshot ? screenshot_to_json(*o.screenshot) : json(nullptr);
  return j;
}

Observation observation_from_json(const json& j, const fs::path& root) {
  Observation o;
  o.url = j.at("url").get<std::string>();
  o.title = j.at("title").get<std::string>();
  o.distilled_dom = j.at("distilled_dom").get<std::string>();
  o.feedback = j.value("feedback", "");
  if (j.contains("screenshot") && !j.at("screenshot").is_null()) {
    o.screenshot = screenshot_from_json(j.at("screenshot"), root);
  }
  return o;
}

}  // namespace

std::string screenshot_file_name(const ScreenshotRecord& s) {
  return "shots/step_" + std::to_string(s.step_index) + "_" + std::to_string(s.attempts_used) + ".png";
}

json action_to_json(const ActionCommand& a) {
  return std::visit(
      overloaded{
          [](const action::Navigate& x) { return json{{"verb", "navigate"}, {"url", x.url}}; },
          [](const action::Click& x) { return json{{"verb", "click"}, {"ref", x.ref}}; },
          [](const action::Type& x) { return json{{"verb", "type"}, {"ref", x.ref}, {"text", x.text}}; },
          [](const action::PressEnter&) { return json{{"verb", "press_enter"}}; },
          [](const action::Scroll& x) {
            return json{{"verb", "scroll"}, {"direction", x.direction == ScrollDirection::Up ? "up" : "down"}};
          },
          [](const action::ReadText& x) { return json{{"verb", "read_text"}, {"ref", x.ref}}; },
          [](const action::Stop&) { return json{{"verb", "stop"}}; },
      },
      a);
}

ActionCommand action_from_json(const json& j) {
  auto verb = j.at("verb").get<std::string>();
  if (verb == "navigate") return action::Navigate{j.at("url").get<std::string>()};
  if (verb == "click") return action::Click{j.at("ref").get<std::string>()};
  if (verb == "type") return action::Type{j.at("ref").get<std::string>(), j.at("text").get<std::string>()};
  if (verb == "press_enter") return action::PressEnter{};
  if (verb == "scroll") {
    auto dir = j.at("direction").get<std::string>();
    if (dir != "up" && dir != "down") throw ArchiveError("unknown scroll direction '" + dir + "'");
    return action::Scroll{dir == "up" ? ScrollDirection::Up : ScrollDirection::Down};
  }
  if (verb == "read_text") return action::ReadText{j.at("ref").get<std::string>()};
  if (verb == "stop") return action::Stop{};
  throw ArchiveError("unknown action verb '" + verb + "'");
}

json task_to_json(const Task& task) {
  return {{"id", task.id}, {"site", task.site}, {"instruction", task.instruction}, {"start_url", task.start_url}};
}

Task task_from_json(const json& j) {
  try {
    return Task{j.at("id").get<std::string>(), j.at("site").get<std::string>(),
                j.at("instruction").get<std::string>(), j.at("start_url").get<std::string>()};
  } catch (const json::exception& e) {
    throw ArchiveError(std::string("malformed task: ") + e.what());
  }
}

json trajectory_to_json(const Trajectory& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json actions = json::array();
    for (const auto& a : s.actions) actions.push_back({{"command", action_to_json(a.command)}, {"summary", a.summary}});
    json step{{"index", s.index},
              {"directive", s.directive},
              {"actions", std::move(actions)},
              {"sub_log", chat_to_json(s.sub_log)},
              {"observation_after", observation_to_json(s.observation_after)}};
    step["error"] = s.error ? json(*s.error) : json(nullptr);
    steps.push_back(std::move(step));
  }
  json shots = json::array();
  for (const auto& s : t.screenshots) shots.push_back(screenshot_to_json(s));

  json j{{"task_id", t.task_id},
         {"planner_log", chat_to_json(t.planner_log)},
         {"steps", std::move(steps)},
         {"screenshots", std::move(shots)},
         {"termination", to_string(t.termination)},
         {"recorded_at", t.recorded_at}};
  j["final_response"] = t.final_response ? json(*t.final_response) : json(nullptr);
  j["oracle_label"] = t.oracle_label ? json(to_string(*t.oracle_label)) : json(nullptr);
  return j;
}

Trajectory trajectory_from_json(const json& j, const fs::path& root) {
  try {
    Trajectory t;
    t.task_id = j.at("task_id").get<std::string>();
    t.planner_log = chat_from_json(j.at("planner_log"));
    for (const auto& s : j.at("steps")) {
      StepRecord step;
      step.index = s.at("index").get<int>();
      step.directive = s.at("directive").get<std::string>();
      for (const auto& a : s.at("actions")) {
        step.actions.push_back({action_from_json(a.at("command")), a.at("summary").get<std::string>()});
      }
      step.sub_log = chat_from_json(s.at("sub_log"));
      step.observation_after = observation_from_json(s.at("observation_after"), root);
      if (s.contains("error") && !s.at("error").is_null()) step.error = s.at("error").get<std::string>();
      t.steps.push_back(std::move(step));
    }
    for (const auto& s : j.at("screenshots")) t.screenshots.push_back(screenshot_from_json(s, root));
    if (!j.at("final_response").is_null()) t.final_response = j.at("final_response").get<std::string>();
    t.termination = parse_enum(j.at("termination"), &parse_termination, "termination");
    t.recorded_at = j.value("recorded_at", "");
    if (j.contains("oracle_label") && !j.at("oracle_label").is_null()) {
      t.oracle_label = parse_enum(j.at("oracle_label"), &parse_label, "label");
    }
    return t;
  } catch (const json::exception& e) {
    throw ArchiveError(std::string("malformed trajectory: ") + e.what());
  }
}

void write_trajectory_archive(const fs::path& dir, const Task& task, const Trajectory& t) {
  std::error_code ec;
  fs::create_directories(dir / "shots", ec);
  if (ec) throw ArchiveError("cannot create " + (dir / "shots").string() + ": " + ec.message());
  for (const auto& s : t.screenshots) {
    if (s.captured) write_bytes(dir / screenshot_file_name(s), s.image);
  }
  for (const auto& step : t.steps) {
    const auto& s = step.observation_after.screenshot;
    if (s && s->captured) write_bytes(dir / screenshot_file_name(*s), s->image);
  }
  write_text_file(dir / "task.json", to_stable_text(task_to_json(task)));
  write_text_file(dir / "trajectory.json", to_stable_text(trajectory_to_json(t)));
}

TrajectoryArchive read_trajectory_archive(const fs::path& dir) {
  return {task_from_json(read_json_file(dir / "task.json")),
          trajectory_from_json(read_json_file(dir / "trajectory.json"), dir)};
}

std::string archive_dir_name(std::string_view task_id) {
  std::string out;
  for (char c : task_id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
              c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::string to_stable_text(const json& j) {
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw ArchiveError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot write " + path.string());
  out << content;
  if (!out) throw ArchiveError("short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const fs::path& path) {
  auto text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ArchiveError("invalid JSON in " + path.string());
  return j;
}

}  // namespace webrefine
