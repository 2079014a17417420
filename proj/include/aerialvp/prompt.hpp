#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aerialvp {

enum class TaskType { VisualGrounding, VisualReasoning, VisualQuestionAnswering };

/// "Visual Grounding", "Visual Reasoning", "Visual Question Answering".
std::string_view display_name(TaskType type) noexcept;
/// Short dataset code: "vg", "vr", "vqa".
std::string_view task_code(TaskType type) noexcept;
std::optional<TaskType> task_from_code(std::string_view code);

/// Reads a task type out of free text ("Aerial Visual Grounding", "vqa", ...).
/// Returns nullopt unless exactly one task type is named.
std::optional<TaskType> parse_task_type(std::string_view text);

enum class EnhancementKind { SemanticDescription, SpatialPositionDescription, SpatialRelationshipDescription };

inline constexpr EnhancementKind kAllEnhancementKinds[] = {
    EnhancementKind::SemanticDescription, EnhancementKind::SpatialPositionDescription,
    EnhancementKind::SpatialRelationshipDescription};

/// Tool-name prefix, e.g. "semantic_description".
std::string_view tool_prefix(EnhancementKind kind) noexcept;
/// Section title, e.g. "Spatial Position Description".
std::string_view display_name(EnhancementKind kind) noexcept;
/// Accepts the prefix, the display name, or a lower-case spaced form.
std::optional<EnhancementKind> parse_enhancement_kind(std::string_view text);

/// Ordered, duplicate-free list of trimmed non-empty category names.
class ObjectSet {
 public:
  ObjectSet() = default;
  ObjectSet(std::initializer_list<std::string> items);
  explicit ObjectSet(const std::vector<std::string>& items);

  /// Trims and appends unless empty or already present. Returns true if added.
  bool add(std::string_view item);

  const std::vector<std::string>& items() const noexcept { return items_; }
  bool empty() const noexcept { return items_.empty(); }
  std::size_t size() const noexcept { return items_.size(); }
  /// ", "-joined rendering.
  std::string joined() const;

  bool operator==(const ObjectSet&) const = default;

 private:
  std::vector<std::string> items_;
};

using EnhancementPlan = std::vector<EnhancementKind>;

struct AnalysisResult {
  TaskType task_type = TaskType::VisualGrounding;
  ObjectSet objects;
  EnhancementPlan plan;

  bool operator==(const AnalysisResult&) const = default;
};

/// Throws InputError if the plan is empty or repeats a kind.
void validate(const AnalysisResult& analysis);

EnhancementPlan default_plan(TaskType type);

struct EnhancementBlock {
  std::string tool_name;
  std::string text;

  bool operator==(const EnhancementBlock&) const = default;
};

struct EnhancementBundle {
  std::map<EnhancementKind, EnhancementBlock> blocks;

  bool empty() const noexcept { return blocks.empty(); }
  const EnhancementBlock* find(EnhancementKind kind) const;

  bool operator==(const EnhancementBundle&) const = default;
};

/// Machine-readable record of one fallback applied somewhere in the pipeline.
struct Degradation {
  std::string stage;
  std::string detail;

  bool operator==(const Degradation&) const = default;
};

struct StepRecord {
  std::string step;  // enhancement kind prefix or "prompt_fusion"
  std::string tool;
  bool ok = false;
  std::string detail;
  double latency_ms = 0.0;
};

struct Provenance {
  AnalysisResult analysis;
  /// Plan actually executed after configuration switches and tool availability.
  EnhancementPlan effective_plan;
  std::map<EnhancementKind, std::string> selections;
  std::vector<std::string> tools_used;
  std::vector<StepRecord> steps;
  std::vector<Degradation> degradations;

  bool degraded() const noexcept { return !degradations.empty(); }
};

struct EnhancedPrompt {
  std::string text;
  Provenance provenance;
};

struct FusionOptions {
  /// Per-block character cap; 0 keeps blocks whole.
  std::size_t block_char_cap = 0;
};

/// One "== Title ==\n<text>" section per present block, in plan order,
/// separated by a blank line.
std::string render_bundle(const EnhancementBundle& bundle, const EnhancementPlan& plan,
                          const FusionOptions& options = {});

EnhancedPrompt fuse_prompt(const AnalysisResult& analysis, std::string_view original_instruction,
                           const EnhancementBundle& bundle, const FusionOptions& options = {});

}  // namespace aerialvp
