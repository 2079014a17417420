#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerialvp/engine.hpp"
#include "aerialvp/geometry.hpp"
#include "aerialvp/prompt.hpp"

namespace aerialvp {

struct VqaOption {
  std::string letter;
  std::string text;
};

struct VqaGold {
  std::vector<VqaOption> options;
  std::string answer;
};

using GoldAnswer = std::variant<BoundingBox, bool, VqaGold>;

struct Sample {
  std::string id;
  TaskImage image;
  TaskType task = TaskType::VisualGrounding;
  std::string instruction;
  GoldAnswer gold;
};

/// Throws LoadError unless the task-specific gold answer is well formed.
void validate(const Sample& sample);

/// One JSON object per line:
///   {"id", "image", "width", "height", "task": "vg"|"vr"|"vqa", "instruction",
///    "gold": [x1,y1,x2,y2] | {"bbox": [...]} | true/false | {"options": [{"letter","text"}], "answer"}}
/// Any invalid line rejects the whole input with its line number.
std::vector<Sample> parse_dataset(std::istream& in, const std::string& source = "<stream>");
std::vector<Sample> load_dataset(const std::filesystem::path& path);

/// First bracketed group of exactly four numbers. Values all <= 1 are taken as
/// normalized and scaled to the image. Corners are reordered and clamped.
std::optional<BoundingBox> parse_vg_answer(std::string_view text, double width, double height);
/// Exactly one of true/yes or false/no as a whole word.
std::optional<bool> parse_vr_answer(std::string_view text);
/// First standalone option letter followed by '.', ')', ':' or a token end;
/// otherwise the one option whose text the answer contains.
std::optional<std::string> parse_vqa_answer(std::string_view text, std::span<const VqaOption> options);

struct EnhancementSwitches {
  bool semantic = true;
  bool spatial_position = true;
  bool spatial_relationship = true;

  bool any() const noexcept { return semantic || spatial_position || spatial_relationship; }
  bool enabled(EnhancementKind kind) const noexcept;
  void set(EnhancementKind kind, bool on) noexcept;
  std::set<EnhancementKind> enabled_kinds() const;
  /// Directory-safe tag, e.g. "sem1_pos0_rel1".
  std::string tag() const;

  bool operator==(const EnhancementSwitches&) const = default;
};

inline constexpr EnhancementSwitches kBaselineSwitches{false, false, false};

struct RunConfig {
  std::string dataset_path;
  std::optional<TaskType> task_filter;
  /// Model column of summary.csv.
  std::string model;
  EnhancementSwitches switches;
  double beta = kDefaultIouThreshold;
  std::size_t concurrency = 1;
  std::uint64_t seed = 0;
};

/// Throws InputError when beta is outside [0,1) or concurrency is 0.
void validate(const RunConfig& config);

std::vector<Sample> filter_samples(std::span<const Sample> samples, std::optional<TaskType> task);

struct SampleRow {
  std::string id;
  TaskType task = TaskType::VisualGrounding;
  std::string prompt;
  std::string raw_answer;
  /// Box as [x1,y1,x2,y2], bool, option letter, or null when unparseable.
  nlohmann::json parsed;
  /// Gold answer in the same shape as `parsed`.
  nlohmann::json gold;
  std::optional<double> iou;
  bool correct = false;
  bool failed = false;
  std::string error;
  std::vector<Degradation> degradations;
  std::optional<Provenance> provenance;
  double latency_ms = 0.0;
};

struct TaskAggregate {
  TaskType task = TaskType::VisualGrounding;
  std::size_t n = 0;
  double accuracy = 0.0;
  /// Grounding only.
  std::optional<double> mean_iou;
  std::size_t failed = 0;
  bool empty = true;
};

struct RunReport {
  RunConfig config;
  std::vector<SampleRow> rows;
  std::vector<TaskAggregate> aggregates;
  /// False when more than half of the rows failed.
  bool valid = true;
  double elapsed_ms = 0.0;
};

/// Aggregates per task in TaskType order, recomputed from rows.
std::vector<TaskAggregate> aggregate_rows(std::span<const SampleRow> rows, double beta);

/// True when stored aggregates equal a recomputation from the rows.
bool verify_report(const RunReport& report);

/// Shares analysis results and enhanced prompts between runs that differ only
/// in their ablation switches. Thread-safe.
class EnhancementCache {
 public:
  std::optional<AnalysisOutcome> analysis(const std::string& sample_id) const;
  void store_analysis(const std::string& sample_id, AnalysisOutcome outcome);
  std::optional<EnhancedPrompt> prompt(const std::string& sample_id, const EnhancementPlan& effective) const;
  void store_prompt(const std::string& sample_id, const EnhancementPlan& effective, EnhancedPrompt prompt);
  std::size_t prompt_hits() const;

 private:
  static std::string key(const std::string& sample_id, const EnhancementPlan& effective);
  mutable std::mutex mutex_;
  std::map<std::string, AnalysisOutcome> analyses_;
  std::map<std::string, EnhancedPrompt> prompts_;
  mutable std::size_t hits_ = 0;
};

struct BenchmarkContext {
  /// Required unless every run is a baseline run.
  const TaskEngine* engine = nullptr;
  ChatBackend* vlm = nullptr;
  EnhancementCache* cache = nullptr;
};

/// Scores every sample; row order follows input order.
RunReport run_benchmark(const RunConfig& config, std::span<const Sample> samples, BenchmarkContext& context);

/// One run per on/off combination of `vary` (2^k runs), in lexicographic
/// switch order with the first varied kind most significant. Kinds not varied
/// keep their value from `base`. Enhanced prompts are shared across runs
/// through the context cache (a private one when none is given).
std::vector<RunReport> run_ablation(const RunConfig& base, std::span<const EnhancementKind> vary,
                                    std::span<const Sample> samples, BenchmarkContext& context);

nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const RunReport& report);

/// summary.csv rows (header excluded), one per (report, task).
std::vector<std::string> summary_rows(const RunReport& report);
inline constexpr std::string_view kSummaryHeader =
    "model,task,semantic,spatial_position,spatial_relationship,acc,mean_iou";

/// Writes report.json, summary.csv, timings.json and provenance/<id>.json.
void write_report(const RunReport& report, const std::filesystem::path& directory);
/// Writes a summary.csv covering several reports, in the given order.
void write_summary(std::span<const RunReport> reports, const std::filesystem::path& file);

}  // namespace aerialvp
