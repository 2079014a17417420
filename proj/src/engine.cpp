#include "aerialvp/engine.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <set>

#include "aerialvp/assets.hpp"
#include "aerialvp/error.hpp"
#include "text_util.hpp"

namespace aerialvp {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Canonical input name for a tool parameter name.
std::string canonical_input(const std::string& param) {
  static const std::map<std::string, std::string> aliases = {
      {"image", "image"},         {"image_path", "image"},   {"image_ref", "image"},
      {"image_url", "image"},     {"classes", "objects"},    {"categories", "objects"},
      {"objects", "objects"},     {"targets", "objects"},    {"target_objects", "objects"},
      {"prompt", "prompt"},       {"guiding_prompt", "prompt"}, {"instruction", "prompt"},
      {"query", "prompt"},        {"text", "prompt"},        {"detections", "detections"},
      {"boxes", "detections"},    {"task_type", "task_type"},
  };
  auto it = aliases.find(param);
  return it == aliases.end() ? std::string() : it->second;
}

/// Fills the tool's declared parameters from the available inputs.
json bind_arguments(const json& schema, const std::map<std::string, json>& available) {
  json args = json::object();
  const json properties = schema.is_object() ? schema.value("properties", json::object()) : json::object();
  for (const auto& [param, _] : properties.items()) {
    const auto canon = canonical_input(param);
    if (auto it = available.find(canon); !canon.empty() && it != available.end()) args[param] = it->second;
  }
  if (schema.is_object() && schema.contains("required") && schema["required"].is_array()) {
    for (const auto& req : schema["required"]) {
      if (req.is_string() && !args.contains(req.get<std::string>())) {
        throw ArgumentError("cannot supply required parameter \"" + req.get<std::string>() + "\"");
      }
    }
  }
  return args;
}

json objects_json(const ObjectSet& objects) {
  json arr = json::array();
  for (const auto& o : objects.items()) arr.push_back(o);
  return arr;
}

/// Items of a list-shaped tool answer: a JSON array of strings when one is
/// present, otherwise comma/newline separated entries.
std::vector<std::string> extract_list_items(std::string_view text) {
  const auto open = text.find('[');
  const auto close = text.rfind(']');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    json parsed = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (parsed.is_array() &&
        std::all_of(parsed.begin(), parsed.end(), [](const json& v) { return v.is_string(); })) {
      std::vector<std::string> out;
      for (const auto& v : parsed) out.push_back(v.get<std::string>());
      return out;
    }
    text = text.substr(open + 1, close - open - 1);
  }
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    std::string_view item = detail::trim(current);
    // Strip bullets, numbering and quotes (ASCII and typographic).
    while (!item.empty() && (item.front() == '-' || item.front() == '*')) item = detail::trim(item.substr(1));
    std::size_t digits = 0;
    while (digits < item.size() && std::isdigit(static_cast<unsigned char>(item[digits]))) ++digits;
    if (digits && digits < item.size() && (item[digits] == '.' || item[digits] == ')')) {
      item = detail::trim(item.substr(digits + 1));
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (std::string_view q : {"\"", "'", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99"}) {
        if (detail::starts_with(item, q)) item.remove_prefix(q.size()), changed = true;
        if (item.size() >= q.size() && item.substr(item.size() - q.size()) == q) {
          item.remove_suffix(q.size());
          changed = true;
        }
      }
      item = detail::trim(item);
    }
    if (!item.empty()) out.emplace_back(item);
    current.clear();
  };
  for (char c : text) {
    if (c == ',' || c == '\n' || c == ';') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace

void validate(const TaskImage& image) {
  if (image.width <= 0 || image.height <= 0) throw InputError("image dimensions must be positive");
}

TaskPrompt::TaskPrompt(std::string text) : text_(std::move(text)) {
  if (detail::trim(text_).empty()) throw InputError("task prompt is empty");
}

std::string_view to_string(StepInput input) noexcept {
  switch (input) {
    case StepInput::Image: return "image";
    case StepInput::Objects: return "objects";
    case StepInput::Detections: return "detections";
    case StepInput::GuidingPrompt: return "guiding_prompt";
  }
  return "";
}

std::string ProgramStep::name() const {
  return kind ? std::string(tool_prefix(*kind)) : std::string("prompt_fusion");
}

void validate(const EnhancementProgram& program) {
  if (program.steps.empty() || !program.steps.back().is_fusion()) {
    throw PlanningError("program must end with prompt fusion");
  }
  std::set<EnhancementKind> seen;
  bool position_done = false;
  for (std::size_t i = 0; i + 1 < program.steps.size(); ++i) {
    const auto& step = program.steps[i];
    if (step.is_fusion()) throw PlanningError("prompt fusion must be the only terminal step");
    if (!step.tool) throw PlanningError("step " + step.name() + " has no tool");
    if (!seen.insert(*step.kind).second) throw PlanningError("step " + step.name() + " repeats");
    const bool wants_detections =
        std::find(step.inputs.begin(), step.inputs.end(), StepInput::Detections) != step.inputs.end();
    if (wants_detections && !position_done) {
      throw PlanningError("step " + step.name() + " reads detections before they exist");
    }
    if (*step.kind == EnhancementKind::SpatialPositionDescription) position_done = true;
  }
}

std::string render_detections(const std::vector<Detection>& detections) {
  std::map<std::string, int> counters;
  std::string out;
  for (const auto& d : detections) {
    const int k = ++counters[d.label];
    if (!out.empty()) out += "\n";
    out += d.label + std::to_string(k) + ": [" + detail::format_number(d.box.x1) + "," +
           detail::format_number(d.box.y1) + "," + detail::format_number(d.box.x2) + "," +
           detail::format_number(d.box.y2) + "]";
  }
  return out;
}

std::vector<std::string> parse_object_list(std::string_view text) {
  ObjectSet set(extract_list_items(text));
  return set.items();
}

std::pair<EnhancementPlan, std::vector<std::string>> parse_plan(std::string_view text) {
  EnhancementPlan plan;
  std::vector<std::string> unknown;
  for (const auto& item : extract_list_items(text)) {
    if (auto kind = parse_enhancement_kind(item)) {
      if (std::find(plan.begin(), plan.end(), *kind) == plan.end()) plan.push_back(*kind);
    } else {
      unknown.push_back(item);
    }
  }
  return {plan, unknown};
}

// ---------------------------------------------------------------------------

TaskEngine::TaskEngine(const ToolRegistry& registry, McpClient& client, ChatBackend* selector,
                       EngineOptions options)
    : registry_(registry), client_(client), selector_(selector), options_(options) {}

TaskEngine::AnalysisCall TaskEngine::run_analysis_tool(
    ToolCategory category, const std::map<std::string, json>& available) const {
  AnalysisCall call;
  const auto candidates = registry_.screen_candidates(category);
  if (candidates.empty()) {
    call.error = "no tool registered for " + std::string(to_string(category));
    return call;
  }
  // Analysis tools are chosen without an object set; none exists yet.
  const auto selection = select_tool(category, ObjectSet{}, candidates, selector_);
  if (selection.degraded) call.degradations.push_back({"tool_selection", selection.detail});
  call.tool = selection.tool.name;
  StepRecord record{std::string(to_string(category)), call.tool, false, {}, 0.0};
  const auto start = Clock::now();
  try {
    const auto result = client_.call_tool(selection.tool, bind_arguments(selection.tool.input_schema, available));
    record.latency_ms = elapsed_ms(start);
    if (result.ok) {
      record.ok = true;
      call.text = result.text;
    } else {
      call.error = result.error;
    }
  } catch (const ArgumentError& err) {
    record.latency_ms = elapsed_ms(start);
    call.error = err.what();
  }
  record.detail = call.error;
  call.record = record;
  return call;
}

AnalysisOutcome TaskEngine::analyze(const TaskPrompt& prompt) const {
  AnalysisOutcome outcome;
  const std::map<std::string, json> prompt_input = {{"prompt", prompt.text()}};
  auto type_call = std::async(std::launch::async, [&] {
    return run_analysis_tool(ToolCategory::TaskTypeAnalysis, prompt_input);
  });
  auto objects_call = run_analysis_tool(ToolCategory::TaskFocusedObjectsAnalysis, prompt_input);
  auto type_result = type_call.get();

  const auto absorb = [&](ToolCategory category, AnalysisCall& call) {
    if (call.record) outcome.steps.push_back(*call.record);
    for (auto& d : call.degradations) outcome.degradations.push_back(std::move(d));
    if (!call.tool.empty()) outcome.tools[category] = call.tool;
  };
  absorb(ToolCategory::TaskTypeAnalysis, type_result);
  absorb(ToolCategory::TaskFocusedObjectsAnalysis, objects_call);

  if (!type_result.text) throw AnalysisError("task type analysis failed: " + type_result.error);
  const auto type = parse_task_type(*type_result.text);
  if (!type) throw AnalysisError("unparseable task type", *type_result.text);
  outcome.result.task_type = *type;

  if (objects_call.text) {
    outcome.result.objects = ObjectSet(parse_object_list(*objects_call.text));
  }
  if (outcome.result.objects.empty()) {
    if (*type == TaskType::VisualGrounding) {
      throw AnalysisError("empty object set for a grounding task",
                          objects_call.text.value_or(objects_call.error));
    }
    outcome.degradations.push_back(
        {"analysis", objects_call.text ? "object analysis returned no objects"
                                       : "object analysis failed: " + objects_call.error});
  }

  std::map<std::string, json> planning_input = {
      {"task_type", std::string(display_name(*type))}, {"objects", objects_json(outcome.result.objects)},
      {"prompt", prompt.text()}};
  auto plan_call = run_analysis_tool(ToolCategory::EnhancementTaskPlanning, planning_input);
  absorb(ToolCategory::EnhancementTaskPlanning, plan_call);
  EnhancementPlan plan;
  if (plan_call.text) {
    auto [parsed, unknown] = parse_plan(*plan_call.text);
    plan = std::move(parsed);
    for (const auto& u : unknown) outcome.degradations.push_back({"analysis", "dropped unknown plan entry \"" + u + "\""});
  } else {
    outcome.degradations.push_back({"analysis", "planning failed: " + plan_call.error});
  }
  if (plan.empty()) {
    plan = default_plan(*type);
    outcome.degradations.push_back({"analysis", "empty plan replaced by the default plan"});
  }
  outcome.result.plan = std::move(plan);
  return outcome;
}

std::map<EnhancementKind, ToolSelection> TaskEngine::select_tools(
    const AnalysisResult& analysis, std::vector<Degradation>& degradations) const {
  std::map<EnhancementKind, ToolSelection> out;
  for (auto kind : analysis.plan) {
    const auto category = category_for(kind);
    const auto candidates = registry_.screen_candidates(category);
    if (candidates.empty()) {
      degradations.push_back({"tool_selection", "no tool available for " + std::string(to_string(category))});
      continue;
    }
    auto selection = select_tool(category, analysis.objects, candidates, selector_);
    if (selection.degraded) degradations.push_back({"tool_selection", selection.detail});
    out.emplace(kind, std::move(selection));
  }
  return out;
}

EnhancementProgram TaskEngine::plan_program(const AnalysisResult& analysis,
                                            const std::map<EnhancementKind, ToolDescriptor>& selections,
                                            const TaskImage& image) {
  validate(analysis);
  validate(image);
  EnhancementProgram program;
  program.analysis = analysis;
  bool position_before = false;
  for (auto kind : analysis.plan) {
    auto it = selections.find(kind);
    if (it == selections.end()) {
      throw PlanningError("no tool selected for " + std::string(tool_prefix(kind)));
    }
    ProgramStep step;
    step.kind = kind;
    step.tool = it->second;
    step.inputs = {StepInput::Image, StepInput::Objects, StepInput::GuidingPrompt};
    if (kind == EnhancementKind::SpatialPositionDescription) {
      position_before = true;
    } else if (position_before) {
      step.inputs.push_back(StepInput::Detections);
    }
    program.steps.push_back(std::move(step));
  }
  program.steps.push_back(ProgramStep{});
  validate(program);
  return program;
}

ExecutionOutcome TaskEngine::execute_program(const EnhancementProgram& program, const TaskImage& image) const {
  validate(program);
  ExecutionOutcome outcome;
  std::vector<Detection> detections;
  std::size_t tool_steps = 0;
  std::size_t failures = 0;
  for (const auto& step : program.steps) {
    if (step.is_fusion()) break;
    ++tool_steps;
    const auto kind = *step.kind;
    std::map<std::string, json> available;
    for (auto input : step.inputs) {
      switch (input) {
        case StepInput::Image:
          available["image"] = image.reference;
          break;
        case StepInput::Objects:
          available["objects"] = objects_json(program.analysis.objects);
          break;
        case StepInput::GuidingPrompt:
          available["prompt"] = fill_template(prompt_asset(tool_prefix(kind)),
                                              {{"objects", program.analysis.objects.joined()}});
          break;
        case StepInput::Detections: {
          json arr = json::array();
          std::map<std::string, int> counters;
          for (const auto& d : detections) {
            arr.push_back({{"name", d.label + std::to_string(++counters[d.label])},
                           {"label", d.label},
                           {"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}},
                           {"confidence", d.confidence}});
          }
          available["detections"] = std::move(arr);
          break;
        }
      }
    }
    StepRecord record{step.name(), step.tool->name, false, {}, 0.0};
    const auto start = Clock::now();
    ToolResult result;
    try {
      result = client_.call_tool(*step.tool, bind_arguments(step.tool->input_schema, available));
    } catch (const ArgumentError& err) {
      result.ok = false;
      result.error = err.what();
    }
    record.latency_ms = elapsed_ms(start);
    if (result.ok) {
      std::string text;
      if (!result.detections.empty()) {
        text = render_detections(result.detections);
        if (kind == EnhancementKind::SpatialPositionDescription) detections = result.detections;
      }
      if (text.empty()) text = result.text;
      outcome.bundle.blocks[kind] = EnhancementBlock{step.tool->name, std::move(text)};
      record.ok = true;
    } else {
      ++failures;
      record.detail = result.error;
      outcome.degradations.push_back({"execution", step.name() + " failed: " + result.error});
    }
    outcome.steps.push_back(std::move(record));
  }
  if (tool_steps > 0 && failures == tool_steps) {
    outcome.degradations.push_back({"execution", "every enhancement step failed"});
  }
  return outcome;
}

EnhancedPrompt TaskEngine::enhance(const TaskPrompt& prompt, const TaskImage& image,
                                   const std::optional<std::set<EnhancementKind>>& enabled) const {
  validate(image);
  return enhance_from(analyze(prompt), prompt, image, enabled);
}

EnhancedPrompt TaskEngine::enhance_from(const AnalysisOutcome& analysis, const TaskPrompt& prompt,
                                        const TaskImage& image,
                                        const std::optional<std::set<EnhancementKind>>& enabled) const {
  validate(image);
  std::vector<Degradation> degradations = analysis.degradations;
  AnalysisResult effective = analysis.result;
  if (enabled) {
    std::erase_if(effective.plan, [&](EnhancementKind k) { return !enabled->count(k); });
  }
  std::map<EnhancementKind, ToolSelection> selections;
  if (!effective.plan.empty()) selections = select_tools(effective, degradations);
  std::erase_if(effective.plan, [&](EnhancementKind k) { return !selections.count(k); });

  ExecutionOutcome executed;
  if (!effective.plan.empty()) {
    std::map<EnhancementKind, ToolDescriptor> chosen;
    for (const auto& [kind, sel] : selections) chosen.emplace(kind, sel.tool);
    executed = execute_program(plan_program(effective, chosen, image), image);
  }

  const auto start = Clock::now();
  auto fused = fuse_prompt(analysis.result, prompt.text(), executed.bundle, options_.fusion);
  auto& prov = fused.provenance;
  prov.effective_plan = effective.plan;
  for (const auto& [kind, sel] : selections) prov.selections[kind] = sel.tool.name;
  prov.steps = analysis.steps;
  prov.steps.insert(prov.steps.end(), executed.steps.begin(), executed.steps.end());
  prov.steps.push_back(StepRecord{"prompt_fusion", "", true, {}, elapsed_ms(start)});
  std::vector<Degradation> all = std::move(degradations);
  all.insert(all.end(), executed.degradations.begin(), executed.degradations.end());
  all.insert(all.end(), prov.degradations.begin(), prov.degradations.end());
  prov.degradations = std::move(all);
  return fused;
}

// ---------------------------------------------------------------------------

std::string perceive_text(std::string_view text, const TaskImage& image, ChatBackend& vlm,
                          std::optional<std::uint64_t> seed) {
  ChatRequest request;
  request.user = std::string(text);
  if (!image.reference.empty()) request.image = ImageAttachment{image.reference, {}, {}};
  request.seed = seed;
  try {
    return vlm.complete(request);
  } catch (const Error& err) {
    throw PerceptionError(std::string("perception failed: ") + err.what());
  }
}

std::string perceive(const EnhancedPrompt& enhanced, const TaskImage& image, ChatBackend& vlm,
                     std::optional<std::uint64_t> seed) {
  return perceive_text(enhanced.text, image, vlm, seed);
}

json to_json(const AnalysisResult& analysis) {
  json plan = json::array();
  for (auto k : analysis.plan) plan.push_back(tool_prefix(k));
  return {{"task_type", display_name(analysis.task_type)},
          {"objects", analysis.objects.items()},
          {"plan", std::move(plan)}};
}

json to_json(const Provenance& provenance) {
  json effective = json::array();
  for (auto k : provenance.effective_plan) effective.push_back(tool_prefix(k));
  json selections = json::object();
  for (const auto& [k, name] : provenance.selections) selections[std::string(tool_prefix(k))] = name;
  json steps = json::array();
  for (const auto& s : provenance.steps) {
    steps.push_back({{"step", s.step}, {"tool", s.tool}, {"ok", s.ok}, {"detail", s.detail},
                     {"latency_ms", s.latency_ms}});
  }
  json degradations = json::array();
  for (const auto& d : provenance.degradations) {
    degradations.push_back({{"stage", d.stage}, {"detail", d.detail}});
  }
  return {{"analysis", to_json(provenance.analysis)},
          {"effective_plan", std::move(effective)},
          {"selections", std::move(selections)},
          {"tools_used", provenance.tools_used},
          {"steps", std::move(steps)},
          {"degradations", std::move(degradations)},
          {"degraded", provenance.degraded()},
          {"program", "interpreted"}};
}

}  // namespace aerialvp
