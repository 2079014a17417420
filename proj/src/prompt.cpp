#include "aerialvp/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "aerialvp/error.hpp"
#include "text_util.hpp"

namespace aerialvp {

namespace detail {

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    std::ostringstream out;
    out << static_cast<long long>(v);
    return out.str();
  }
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace detail

std::string_view display_name(TaskType type) noexcept {
  switch (type) {
    case TaskType::VisualGrounding: return "Visual Grounding";
    case TaskType::VisualReasoning: return "Visual Reasoning";
    case TaskType::VisualQuestionAnswering: return "Visual Question Answering";
  }
  return "";
}

std::string_view task_code(TaskType type) noexcept {
  switch (type) {
    case TaskType::VisualGrounding: return "vg";
    case TaskType::VisualReasoning: return "vr";
    case TaskType::VisualQuestionAnswering: return "vqa";
  }
  return "";
}

std::optional<TaskType> task_from_code(std::string_view code) {
  const auto c = detail::lower(detail::trim(code));
  if (c == "vg") return TaskType::VisualGrounding;
  if (c == "vr") return TaskType::VisualReasoning;
  if (c == "vqa") return TaskType::VisualQuestionAnswering;
  return std::nullopt;
}

std::optional<TaskType> parse_task_type(std::string_view text) {
  const auto norm = detail::normalize_words(text);
  std::set<TaskType> hits;
  if (detail::contains_word(norm, "grounding") || detail::contains_word(norm, "vg")) {
    hits.insert(TaskType::VisualGrounding);
  }
  if (detail::contains_word(norm, "reasoning") || detail::contains_word(norm, "vr")) {
    hits.insert(TaskType::VisualReasoning);
  }
  if (detail::contains_word(norm, "question answering") || detail::contains_word(norm, "vqa")) {
    hits.insert(TaskType::VisualQuestionAnswering);
  }
  if (hits.size() != 1) return std::nullopt;
  return *hits.begin();
}

std::string_view tool_prefix(EnhancementKind kind) noexcept {
  switch (kind) {
    case EnhancementKind::SemanticDescription: return "semantic_description";
    case EnhancementKind::SpatialPositionDescription: return "spatial_position_description";
    case EnhancementKind::SpatialRelationshipDescription: return "spatial_relationship_description";
  }
  return "";
}

std::string_view display_name(EnhancementKind kind) noexcept {
  switch (kind) {
    case EnhancementKind::SemanticDescription: return "Semantic Description";
    case EnhancementKind::SpatialPositionDescription: return "Spatial Position Description";
    case EnhancementKind::SpatialRelationshipDescription: return "Spatial Relationship Description";
  }
  return "";
}

std::optional<EnhancementKind> parse_enhancement_kind(std::string_view text) {
  auto norm = detail::normalize_words(text);
  constexpr std::string_view suffix = " enhancement";
  if (norm.size() > suffix.size() && norm.ends_with(suffix)) {
    norm.resize(norm.size() - suffix.size());
  }
  if (norm == "semantic description" || norm == "semantic") {
    return EnhancementKind::SemanticDescription;
  }
  if (norm == "spatial position description" || norm == "spatial position") {
    return EnhancementKind::SpatialPositionDescription;
  }
  if (norm == "spatial relationship description" || norm == "spatial relationship" ||
      norm == "spatial relation description" || norm == "spatial relation") {
    return EnhancementKind::SpatialRelationshipDescription;
  }
  return std::nullopt;
}

ObjectSet::ObjectSet(std::initializer_list<std::string> items) {
  for (const auto& item : items) add(item);
}

ObjectSet::ObjectSet(const std::vector<std::string>& items) {
  for (const auto& item : items) add(item);
}

bool ObjectSet::add(std::string_view item) {
  const auto t = detail::trim(item);
  if (t.empty()) return false;
  if (std::find(items_.begin(), items_.end(), t) != items_.end()) return false;
  items_.emplace_back(t);
  return true;
}

std::string ObjectSet::joined() const {
  std::string out;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (i) out += ", ";
    out += items_[i];
  }
  return out;
}

void validate(const AnalysisResult& analysis) {
  if (analysis.plan.empty()) throw InputError("enhancement plan is empty");
  std::set<EnhancementKind> seen;
  for (auto kind : analysis.plan) {
    if (!seen.insert(kind).second) {
      throw InputError("enhancement plan repeats " + std::string(tool_prefix(kind)));
    }
  }
}

EnhancementPlan default_plan(TaskType type) {
  switch (type) {
    case TaskType::VisualGrounding:
      return {EnhancementKind::SpatialPositionDescription, EnhancementKind::SemanticDescription,
              EnhancementKind::SpatialRelationshipDescription};
    case TaskType::VisualReasoning:
    case TaskType::VisualQuestionAnswering:
      return {EnhancementKind::SemanticDescription, EnhancementKind::SpatialRelationshipDescription};
  }
  return {};
}

const EnhancementBlock* EnhancementBundle::find(EnhancementKind kind) const {
  auto it = blocks.find(kind);
  return it == blocks.end() ? nullptr : &it->second;
}

std::string render_bundle(const EnhancementBundle& bundle, const EnhancementPlan& plan,
                          const FusionOptions& options) {
  std::string out;
  for (auto kind : plan) {
    const auto* block = bundle.find(kind);
    if (!block) continue;
    if (!out.empty()) out += "\n\n";
    out += "== ";
    out += display_name(kind);
    out += " ==\n";
    out += options.block_char_cap ? detail::utf8_truncate(block->text, options.block_char_cap)
                                  : block->text;
  }
  return out;
}

EnhancedPrompt fuse_prompt(const AnalysisResult& analysis, std::string_view original_instruction,
                           const EnhancementBundle& bundle, const FusionOptions& options) {
  validate(analysis);
  const auto instruction = detail::rtrim(original_instruction);
  if (detail::trim(instruction).empty()) throw InputError("original instruction is empty");

  EnhancedPrompt result;
  result.provenance.analysis = analysis;

  std::string text = "You are an assistant responsible for UAV Image ";
  text += display_name(analysis.task_type);
  text += " Task. The target objects you need to pay attention to include: ";
  text += analysis.objects.empty() ? std::string("unspecified") : analysis.objects.joined();
  text += ". ";
  text += instruction;
  const char last = instruction.back();
  if (last != '.' && last != '?' && last != '!') text += '.';
  text += " Here is some additional information:\n";

  const auto rendered = render_bundle(bundle, analysis.plan, options);
  if (rendered.empty()) {
    text += "None.";
    result.provenance.degradations.push_back(
        {"prompt_fusion", "no enhancement information available"});
  } else {
    text += rendered;
  }
  for (auto kind : analysis.plan) {
    if (const auto* block = bundle.find(kind)) result.provenance.tools_used.push_back(block->tool_name);
  }
  result.text = std::move(text);
  return result;
}

}  // namespace aerialvp
