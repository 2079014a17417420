#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerialvp/backends.hpp"
#include "aerialvp/prompt.hpp"
#include "aerialvp/tool_repository.hpp"

namespace aerialvp {

struct TaskImage {
  std::string id;
  int width = 0;
  int height = 0;
  /// Path or opaque handle forwarded to tools and the VLM.
  std::string reference;
};

void validate(const TaskImage& image);

/// Raw user instruction; non-empty after trimming.
class TaskPrompt {
 public:
  explicit TaskPrompt(std::string text);
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

/// Inputs a program step draws from.
enum class StepInput { Image, Objects, Detections, GuidingPrompt };

std::string_view to_string(StepInput input) noexcept;

struct ProgramStep {
  /// Empty for the terminal prompt-fusion step.
  std::optional<EnhancementKind> kind;
  std::optional<ToolDescriptor> tool;
  std::vector<StepInput> inputs;

  bool is_fusion() const noexcept { return !kind.has_value(); }
  std::string name() const;
};

/// Directed chain of tool calls ending in prompt fusion.
struct EnhancementProgram {
  AnalysisResult analysis;
  std::vector<ProgramStep> steps;
};

/// Throws PlanningError unless the program ends in exactly one fusion step,
/// tool steps have unique kinds and tools, and detections only flow forward.
void validate(const EnhancementProgram& program);

struct AnalysisOutcome {
  AnalysisResult result;
  std::vector<StepRecord> steps;
  std::vector<Degradation> degradations;
  std::map<ToolCategory, std::string> tools;
};

struct ExecutionOutcome {
  EnhancementBundle bundle;
  std::vector<StepRecord> steps;
  std::vector<Degradation> degradations;
};

/// "label_k: [x1,y1,x2,y2]" lines, k counted per label from 1.
std::string render_detections(const std::vector<Detection>& detections);

/// Tool-output parsers used by the analysis stage.
std::vector<std::string> parse_object_list(std::string_view text);
/// Kinds named in the planner output plus the entries that matched none.
std::pair<EnhancementPlan, std::vector<std::string>> parse_plan(std::string_view text);

struct EngineOptions {
  FusionOptions fusion;
};

/// LLM task engine: analysis, tool selection, program assembly and execution.
class TaskEngine {
 public:
  /// `selector` may be null; multi-candidate selection then falls back to the
  /// first registered candidate.
  TaskEngine(const ToolRegistry& registry, McpClient& client, ChatBackend* selector,
             EngineOptions options = {});

  AnalysisOutcome analyze(const TaskPrompt& prompt) const;

  /// Screens and selects one tool per planned kind. Kinds without any
  /// candidate are left out and recorded as degradations.
  std::map<EnhancementKind, ToolSelection> select_tools(const AnalysisResult& analysis,
                                                        std::vector<Degradation>& degradations) const;

  static EnhancementProgram plan_program(const AnalysisResult& analysis,
                                         const std::map<EnhancementKind, ToolDescriptor>& selections,
                                         const TaskImage& image);

  ExecutionOutcome execute_program(const EnhancementProgram& program, const TaskImage& image) const;

  /// Full pipeline. `enabled`, when given, restricts the analysis plan to
  /// those kinds (ablation switches).
  EnhancedPrompt enhance(const TaskPrompt& prompt, const TaskImage& image,
                         const std::optional<std::set<EnhancementKind>>& enabled = std::nullopt) const;

  /// Pipeline from stage 2 onwards on a previously computed analysis.
  EnhancedPrompt enhance_from(const AnalysisOutcome& analysis, const TaskPrompt& prompt,
                              const TaskImage& image,
                              const std::optional<std::set<EnhancementKind>>& enabled = std::nullopt) const;

 private:
  struct AnalysisCall {
    std::optional<std::string> text;
    std::optional<StepRecord> record;
    std::vector<Degradation> degradations;
    std::string tool;
    std::string error;
  };
  AnalysisCall run_analysis_tool(ToolCategory category,
                                 const std::map<std::string, nlohmann::json>& available) const;

  const ToolRegistry& registry_;
  McpClient& client_;
  ChatBackend* selector_;
  EngineOptions options_;
};

/// Sends text plus image to the VLM and returns its raw answer. Throws
/// PerceptionError when the backend fails.
std::string perceive_text(std::string_view text, const TaskImage& image, ChatBackend& vlm,
                          std::optional<std::uint64_t> seed = std::nullopt);
std::string perceive(const EnhancedPrompt& enhanced, const TaskImage& image, ChatBackend& vlm,
                     std::optional<std::uint64_t> seed = std::nullopt);

nlohmann::json to_json(const AnalysisResult& analysis);
nlohmann::json to_json(const Provenance& provenance);

}  // namespace aerialvp
