#include "aerialvp/eval.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "aerialvp/error.hpp"
#include "text_util.hpp"

namespace aerialvp {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Dataset

void validate(const Sample& sample) {
  if (sample.id.empty()) throw LoadError("sample id is empty");
  validate(sample.image);
  if (detail::trim(sample.instruction).empty()) throw LoadError("sample " + sample.id + " has an empty instruction");
  switch (sample.task) {
    case TaskType::VisualGrounding: {
      const auto* box = std::get_if<BoundingBox>(&sample.gold);
      if (!box) throw LoadError("grounding sample " + sample.id + " needs a gold box");
      validate(*box);
      if (box->x1 < 0 || box->y1 < 0 || box->x2 > sample.image.width || box->y2 > sample.image.height) {
        throw LoadError("gold box " + to_string(*box) + " of sample " + sample.id + " lies outside the " +
                        std::to_string(sample.image.width) + "x" + std::to_string(sample.image.height) + " image");
      }
      break;
    }
    case TaskType::VisualReasoning:
      if (!std::holds_alternative<bool>(sample.gold)) {
        throw LoadError("reasoning sample " + sample.id + " needs a boolean gold label");
      }
      break;
    case TaskType::VisualQuestionAnswering: {
      const auto* gold = std::get_if<VqaGold>(&sample.gold);
      if (!gold) throw LoadError("VQA sample " + sample.id + " needs options and an answer");
      if (gold->options.size() < 2) throw LoadError("VQA sample " + sample.id + " needs at least two options");
      std::set<std::string> letters;
      for (const auto& o : gold->options) {
        if (o.letter.empty()) throw LoadError("VQA sample " + sample.id + " has an option without a letter");
        if (!letters.insert(o.letter).second) {
          throw LoadError("VQA sample " + sample.id + " repeats option letter " + o.letter);
        }
      }
      if (!letters.count(gold->answer)) {
        throw LoadError("VQA sample " + sample.id + " answer " + gold->answer + " is not an option");
      }
      break;
    }
  }
}

namespace {

BoundingBox box_from_json(const json& arr, bool xywh) {
  if (!arr.is_array() || arr.size() != 4) throw LoadError("box must be an array of four numbers");
  double v[4];
  for (int i = 0; i < 4; ++i) {
    if (!arr[i].is_number()) throw LoadError("box must be an array of four numbers");
    v[i] = arr[i].get<double>();
  }
  if (xywh) {
    if (v[2] < 0 || v[3] < 0) throw LoadError("box width/height must be non-negative");
    return BoundingBox{v[0], v[1], v[0] + v[2], v[1] + v[3]};
  }
  BoundingBox box{v[0], v[1], v[2], v[3]};
  try {
    validate(box);
  } catch (const GeometryError& err) {
    throw LoadError(err.what());
  }
  return box;
}

Sample sample_from_json(const json& obj) {
  if (!obj.is_object()) throw LoadError("line is not a JSON object");
  Sample s;
  s.id = obj.at("id").is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
  s.image.id = s.id;
  s.image.reference = obj.at("image").get<std::string>();
  s.image.width = obj.at("width").get<int>();
  s.image.height = obj.at("height").get<int>();
  const auto task = task_from_code(obj.at("task").get<std::string>());
  if (!task) throw LoadError("unknown task \"" + obj["task"].get<std::string>() + "\"");
  s.task = *task;
  s.instruction = obj.at("instruction").get<std::string>();
  const json& gold = obj.at("gold");
  switch (s.task) {
    case TaskType::VisualGrounding:
      if (gold.is_array()) {
        s.gold = box_from_json(gold, false);
      } else if (gold.is_object() && gold.contains("bbox")) {
        s.gold = box_from_json(gold["bbox"], gold.value("format", std::string("xyxy")) == "xywh");
      } else {
        throw LoadError("grounding gold must be a box");
      }
      break;
    case TaskType::VisualReasoning:
      if (gold.is_boolean()) {
        s.gold = gold.get<bool>();
      } else if (gold.is_string() && (detail::lower(gold.get<std::string>()) == "true" ||
                                      detail::lower(gold.get<std::string>()) == "false")) {
        s.gold = detail::lower(gold.get<std::string>()) == "true";
      } else {
        throw LoadError("reasoning gold must be a boolean");
      }
      break;
    case TaskType::VisualQuestionAnswering: {
      VqaGold g;
      for (const auto& o : gold.at("options")) {
        g.options.push_back({o.at("letter").get<std::string>(), o.at("text").get<std::string>()});
      }
      g.answer = gold.at("answer").get<std::string>();
      s.gold = std::move(g);
      break;
    }
  }
  validate(s);
  return s;
}

}  // namespace

std::vector<Sample> parse_dataset(std::istream& in, const std::string& source) {
  std::vector<Sample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (detail::trim(line).empty()) continue;
    const auto where = source + ":" + std::to_string(number) + ": ";
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw LoadError(where + "malformed JSON", number);
    try {
      auto sample = sample_from_json(obj);
      if (!ids.insert(sample.id).second) throw LoadError("duplicate sample id " + sample.id);
      out.push_back(std::move(sample));
    } catch (const LoadError& err) {
      throw LoadError(where + err.what(), number);
    } catch (const InputError& err) {
      throw LoadError(where + err.what(), number);
    } catch (const json::exception& err) {
      throw LoadError(where + "schema violation: " + err.what(), number);
    }
  }
  return out;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

// ---------------------------------------------------------------------------
// Answer parsing

namespace {

std::optional<double> parse_number(std::string_view s) {
  s = detail::trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<BoundingBox> parse_vg_answer(std::string_view text, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) throw InputError("image dimensions must be positive");
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char open = text[i];
    if (open != '[' && open != '(') continue;
    const char close = open == '[' ? ']' : ')';
    const auto end = text.find_first_of(std::string{close, open}, i + 1);
    if (end == std::string_view::npos || text[end] != close) continue;
    const auto parts = detail::split(text.substr(i + 1, end - i - 1), ',');
    if (parts.size() != 4) continue;
    double v[4];
    bool ok = true;
    for (int k = 0; k < 4 && ok; ++k) {
      auto n = parse_number(parts[k]);
      ok = n.has_value();
      if (ok) v[k] = *n;
    }
    if (!ok) continue;
    if (v[0] <= 1.0 && v[1] <= 1.0 && v[2] <= 1.0 && v[3] <= 1.0) {
      v[0] *= width;
      v[1] *= height;
      v[2] *= width;
      v[3] *= height;
    }
    return clamp_to_image(make_box(v[0], v[1], v[2], v[3]), width, height);
  }
  return std::nullopt;
}

std::optional<bool> parse_vr_answer(std::string_view text) {
  const auto lowered = detail::lower(text);
  const bool yes = detail::contains_word(lowered, "true") || detail::contains_word(lowered, "yes");
  const bool no = detail::contains_word(lowered, "false") || detail::contains_word(lowered, "no");
  if (yes == no) return std::nullopt;
  return yes;
}

std::optional<std::string> parse_vqa_answer(std::string_view text, std::span<const VqaOption> options) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_')) continue;
    for (const auto& o : options) {
      if (o.letter.empty() || text.substr(i, o.letter.size()) != o.letter) continue;
      const std::size_t after = i + o.letter.size();
      if (after >= text.size()) return o.letter;
      const char c = text[after];
      if (c == '.' || c == ')' || c == ':' || detail::is_space(c)) return o.letter;
    }
  }
  const auto lowered = detail::lower(text);
  std::optional<std::string> found;
  for (const auto& o : options) {
    const auto needle = detail::lower(detail::trim(o.text));
    if (needle.empty() || lowered.find(needle) == std::string::npos) continue;
    if (found) return std::nullopt;
    found = o.letter;
  }
  return found;
}

// ---------------------------------------------------------------------------
// Configuration

bool EnhancementSwitches::enabled(EnhancementKind kind) const noexcept {
  switch (kind) {
    case EnhancementKind::SemanticDescription: return semantic;
    case EnhancementKind::SpatialPositionDescription: return spatial_position;
    case EnhancementKind::SpatialRelationshipDescription: return spatial_relationship;
  }
  return false;
}

void EnhancementSwitches::set(EnhancementKind kind, bool on) noexcept {
  switch (kind) {
    case EnhancementKind::SemanticDescription: semantic = on; break;
    case EnhancementKind::SpatialPositionDescription: spatial_position = on; break;
    case EnhancementKind::SpatialRelationshipDescription: spatial_relationship = on; break;
  }
}

std::set<EnhancementKind> EnhancementSwitches::enabled_kinds() const {
  std::set<EnhancementKind> out;
  for (auto k : kAllEnhancementKinds) {
    if (enabled(k)) out.insert(k);
  }
  return out;
}

std::string EnhancementSwitches::tag() const {
  return std::string("sem") + (semantic ? "1" : "0") + "_pos" + (spatial_position ? "1" : "0") + "_rel" +
         (spatial_relationship ? "1" : "0");
}

void validate(const RunConfig& config) {
  if (!(config.beta >= 0.0 && config.beta < 1.0)) throw InputError("beta must lie in [0,1)");
  if (config.concurrency == 0) throw InputError("concurrency must be at least 1");
}

std::vector<Sample> filter_samples(std::span<const Sample> samples, std::optional<TaskType> task) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (!task || s.task == *task) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache

std::string EnhancementCache::key(const std::string& sample_id, const EnhancementPlan& effective) {
  std::string k = sample_id + "|";
  for (auto kind : effective) {
    k += tool_prefix(kind);
    k += ',';
  }
  return k;
}

std::optional<AnalysisOutcome> EnhancementCache::analysis(const std::string& sample_id) const {
  std::lock_guard lock(mutex_);
  auto it = analyses_.find(sample_id);
  if (it == analyses_.end()) return std::nullopt;
  return it->second;
}

void EnhancementCache::store_analysis(const std::string& sample_id, AnalysisOutcome outcome) {
  std::lock_guard lock(mutex_);
  analyses_.emplace(sample_id, std::move(outcome));
}

std::optional<EnhancedPrompt> EnhancementCache::prompt(const std::string& sample_id,
                                                       const EnhancementPlan& effective) const {
  std::lock_guard lock(mutex_);
  auto it = prompts_.find(key(sample_id, effective));
  if (it == prompts_.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

void EnhancementCache::store_prompt(const std::string& sample_id, const EnhancementPlan& effective,
                                    EnhancedPrompt prompt) {
  std::lock_guard lock(mutex_);
  prompts_.emplace(key(sample_id, effective), std::move(prompt));
}

std::size_t EnhancementCache::prompt_hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

// ---------------------------------------------------------------------------
// Benchmark

namespace {

json gold_json(const Sample& s) {
  return std::visit(
      [](const auto& g) -> json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, BoundingBox>) {
          return json::array({g.x1, g.y1, g.x2, g.y2});
        } else if constexpr (std::is_same_v<T, bool>) {
          return g;
        } else {
          return g.answer;
        }
      },
      s.gold);
}

void score(const Sample& sample, const RunConfig& config, SampleRow& row) {
  switch (sample.task) {
    case TaskType::VisualGrounding: {
      const auto box = parse_vg_answer(row.raw_answer, sample.image.width, sample.image.height);
      row.parsed = box ? json::array({box->x1, box->y1, box->x2, box->y2}) : json();
      row.iou = box ? iou(*box, std::get<BoundingBox>(sample.gold)) : 0.0;
      row.correct = *row.iou > config.beta;
      break;
    }
    case TaskType::VisualReasoning: {
      const auto v = parse_vr_answer(row.raw_answer);
      row.parsed = v ? json(*v) : json();
      row.correct = v && *v == std::get<bool>(sample.gold);
      break;
    }
    case TaskType::VisualQuestionAnswering: {
      const auto& gold = std::get<VqaGold>(sample.gold);
      const auto v = parse_vqa_answer(row.raw_answer, gold.options);
      row.parsed = v ? json(*v) : json();
      row.correct = v && *v == gold.answer;
      break;
    }
  }
}

SampleRow evaluate_sample(const Sample& sample, const RunConfig& config, BenchmarkContext& ctx) {
  SampleRow row;
  row.id = sample.id;
  row.task = sample.task;
  row.gold = gold_json(sample);
  row.parsed = json();
  if (sample.task == TaskType::VisualGrounding) row.iou = 0.0;
  const auto start = Clock::now();
  try {
    if (!config.switches.any()) {
      row.prompt = sample.instruction;
    } else {
      if (!ctx.engine) throw InputError("enhanced configuration needs a task engine");
      const TaskPrompt prompt(sample.instruction);
      std::optional<AnalysisOutcome> analysis = ctx.cache ? ctx.cache->analysis(sample.id) : std::nullopt;
      if (!analysis) {
        analysis = ctx.engine->analyze(prompt);
        if (ctx.cache) ctx.cache->store_analysis(sample.id, *analysis);
      }
      EnhancementPlan effective;
      for (auto k : analysis->result.plan) {
        if (config.switches.enabled(k)) effective.push_back(k);
      }
      std::optional<EnhancedPrompt> enhanced = ctx.cache ? ctx.cache->prompt(sample.id, effective) : std::nullopt;
      if (!enhanced) {
        enhanced = ctx.engine->enhance_from(*analysis, prompt, sample.image, config.switches.enabled_kinds());
        if (ctx.cache) ctx.cache->store_prompt(sample.id, effective, *enhanced);
      }
      row.prompt = enhanced->text;
      row.degradations = enhanced->provenance.degradations;
      row.provenance = enhanced->provenance;
    }
    if (!ctx.vlm) throw InputError("benchmark needs a VLM backend");
    row.raw_answer = perceive_text(row.prompt, sample.image, *ctx.vlm, config.seed);
    score(sample, config, row);
  } catch (const Error& err) {
    row.failed = true;
    row.correct = false;
    row.error = err.what();
    row.parsed = json();
    if (sample.task == TaskType::VisualGrounding) row.iou = 0.0;
  }
  row.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return row;
}

std::string row_prediction_key(const SampleRow& row) { return row.parsed.dump(); }

}  // namespace

std::vector<TaskAggregate> aggregate_rows(std::span<const SampleRow> rows, double beta) {
  std::vector<TaskAggregate> out;
  for (auto task : {TaskType::VisualGrounding, TaskType::VisualReasoning, TaskType::VisualQuestionAnswering}) {
    std::vector<double> ious;
    std::vector<std::optional<std::string>> predictions;
    std::vector<std::string> golds;
    std::size_t failed = 0;
    for (const auto& r : rows) {
      if (r.task != task) continue;
      if (r.failed) ++failed;
      if (task == TaskType::VisualGrounding) {
        ious.push_back(r.iou.value_or(0.0));
      } else {
        predictions.push_back(r.parsed.is_null() ? std::nullopt : std::optional(row_prediction_key(r)));
        golds.push_back(r.gold.dump());
      }
    }
    if (ious.empty() && golds.empty()) continue;
    TaskAggregate agg;
    agg.task = task;
    agg.failed = failed;
    if (task == TaskType::VisualGrounding) {
      const auto m = grounding_metrics_from_ious(ious, beta);
      agg.n = m.n;
      agg.accuracy = m.accuracy;
      agg.mean_iou = m.mean_iou;
      agg.empty = m.empty;
    } else {
      const auto m = classification_accuracy(predictions, golds);
      agg.n = m.n;
      agg.accuracy = m.accuracy;
      agg.empty = m.empty;
    }
    out.push_back(agg);
  }
  return out;
}

bool verify_report(const RunReport& report) {
  const auto again = aggregate_rows(report.rows, report.config.beta);
  if (again.size() != report.aggregates.size()) return false;
  for (std::size_t i = 0; i < again.size(); ++i) {
    const auto& a = again[i];
    const auto& b = report.aggregates[i];
    if (a.task != b.task || a.n != b.n || a.accuracy != b.accuracy || a.mean_iou != b.mean_iou ||
        a.failed != b.failed) {
      return false;
    }
  }
  for (const auto& r : report.rows) {
    if (r.task == TaskType::VisualGrounding) {
      if (!r.iou || r.correct != (*r.iou > report.config.beta)) return false;
    } else if (r.correct != (!r.parsed.is_null() && r.parsed == r.gold)) {
      return false;
    }
  }
  return true;
}

RunReport run_benchmark(const RunConfig& config, std::span<const Sample> samples, BenchmarkContext& context) {
  validate(config);
  const auto selected = filter_samples(samples, config.task_filter);
  if (selected.empty()) throw InputError("no samples left after filtering");

  const auto start = Clock::now();
  RunReport report;
  report.config = config;
  report.rows.resize(selected.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < selected.size(); i = next.fetch_add(1)) {
      report.rows[i] = evaluate_sample(selected[i], config, context);
    }
  };
  const std::size_t width = std::min(config.concurrency, selected.size());
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(width);
    for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
  }
  report.aggregates = aggregate_rows(report.rows, config.beta);
  std::size_t failed = 0;
  for (const auto& r : report.rows) failed += r.failed ? 1 : 0;
  report.valid = failed * 2 <= report.rows.size();
  report.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return report;
}

std::vector<RunReport> run_ablation(const RunConfig& base, std::span<const EnhancementKind> vary,
                                    std::span<const Sample> samples, BenchmarkContext& context) {
  if (vary.empty()) throw InputError("ablation needs at least one enhancement kind to vary");
  std::set<EnhancementKind> unique(vary.begin(), vary.end());
  if (unique.size() != vary.size()) throw InputError("ablation kinds repeat");
  EnhancementCache local;
  BenchmarkContext ctx = context;
  if (!ctx.cache) ctx.cache = &local;
  const std::size_t k = vary.size();
  std::vector<RunReport> reports;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    RunConfig config = base;
    for (std::size_t j = 0; j < k; ++j) config.switches.set(vary[j], (mask >> (k - 1 - j)) & 1U);
    reports.push_back(run_benchmark(config, samples, ctx));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const RunConfig& config) {
  return {{"dataset", config.dataset_path},
          {"task", config.task_filter ? json(std::string(task_code(*config.task_filter))) : json()},
          {"model", config.model},
          {"switches",
           {{"semantic", config.switches.semantic},
            {"spatial_position", config.switches.spatial_position},
            {"spatial_relationship", config.switches.spatial_relationship}}},
          {"beta", config.beta},
          {"concurrency", config.concurrency},
          {"seed", config.seed}};
}

namespace {

std::string safe_file_name(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

json to_json(const RunReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json degradations = json::array();
    for (const auto& d : r.degradations) degradations.push_back({{"stage", d.stage}, {"detail", d.detail}});
    rows.push_back({{"id", r.id},
                    {"task", task_code(r.task)},
                    {"prompt", r.prompt},
                    {"raw_answer", r.raw_answer},
                    {"parsed", r.parsed},
                    {"gold", r.gold},
                    {"iou", r.iou ? json(*r.iou) : json()},
                    {"correct", r.correct},
                    {"failed", r.failed},
                    {"error", r.error},
                    {"degradations", std::move(degradations)},
                    {"provenance", r.provenance ? json("provenance/" + safe_file_name(r.id) + ".json") : json()}});
  }
  json aggregates = json::array();
  for (const auto& a : report.aggregates) {
    aggregates.push_back({{"task", task_code(a.task)},
                          {"n", a.n},
                          {"acc", a.accuracy},
                          {"mean_iou", a.mean_iou ? json(*a.mean_iou) : json()},
                          {"failed", a.failed},
                          {"empty", a.empty}});
  }
  return {{"config", to_json(report.config)},
          {"valid", report.valid},
          {"aggregates", std::move(aggregates)},
          {"rows", std::move(rows)},
          {"notes", json::array({"grounding answers: only the first parsed box is scored",
                                 "unparseable or failed answers score IoU 0 / incorrect"})}};
}

std::vector<std::string> summary_rows(const RunReport& report) {
  std::vector<std::string> out;
  const auto& sw = report.config.switches;
  for (const auto& a : report.aggregates) {
    out.push_back(csv_field(report.config.model) + "," + std::string(task_code(a.task)) + "," +
                  (sw.semantic ? "1" : "0") + "," + (sw.spatial_position ? "1" : "0") + "," +
                  (sw.spatial_relationship ? "1" : "0") + "," + fixed6(a.accuracy) + "," +
                  (a.mean_iou ? fixed6(*a.mean_iou) : std::string()));
  }
  return out;
}

void write_summary(std::span<const RunReport> reports, const std::filesystem::path& file) {
  std::string text(kSummaryHeader);
  text += "\n";
  for (const auto& r : reports) {
    for (const auto& line : summary_rows(r)) text += line + "\n";
  }
  write_text(file, text);
}

void write_report(const RunReport& report, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory / "provenance", ec);
  if (ec) throw Error("cannot create " + (directory / "provenance").string() + ": " + ec.message());
  write_text(directory / "report.json", to_json(report).dump(2) + "\n");
  write_summary(std::span<const RunReport>(&report, 1), directory / "summary.csv");
  json timings = {{"elapsed_ms", report.elapsed_ms}, {"rows", json::array()}};
  for (const auto& r : report.rows) {
    timings["rows"].push_back({{"id", r.id}, {"latency_ms", r.latency_ms}});
    if (r.provenance) {
      json prov = to_json(*r.provenance);
      prov["sample_id"] = r.id;
      write_text(directory / "provenance" / (safe_file_name(r.id) + ".json"), prov.dump(2) + "\n");
    }
  }
  write_text(directory / "timings.json", timings.dump(2) + "\n");
}

}  // namespace aerialvp
