#include <doctest.h>

#include <random>

#include "aerialvp/error.hpp"
#include "aerialvp/prompt.hpp"
#include "support.hpp"

using namespace aerialvp;
using K = EnhancementKind;

namespace {

std::string golden(const std::string& name) {
  return testsupport::read_file(testsupport::fs::path(AERIALVP_TEST_GOLDEN) / name);
}

EnhancementBundle bundle_of(std::initializer_list<std::pair<K, std::string>> blocks) {
  EnhancementBundle b;
  for (const auto& [kind, text] : blocks) b.blocks[kind] = {std::string(tool_prefix(kind)) + "_stub", text};
  return b;
}

}  // namespace

TEST_CASE("task type display names and codes") {
  CHECK(display_name(TaskType::VisualGrounding) == "Visual Grounding");
  CHECK(display_name(TaskType::VisualReasoning) == "Visual Reasoning");
  CHECK(display_name(TaskType::VisualQuestionAnswering) == "Visual Question Answering");
  CHECK(task_from_code("vqa") == TaskType::VisualQuestionAnswering);
  CHECK_FALSE(task_from_code("detection").has_value());
}

TEST_CASE("parse_task_type accepts one unambiguous type") {
  CHECK(parse_task_type("Visual Grounding") == TaskType::VisualGrounding);
  CHECK(parse_task_type("The task type is: visual reasoning.") == TaskType::VisualReasoning);
  CHECK(parse_task_type("VQA") == TaskType::VisualQuestionAnswering);
  CHECK_FALSE(parse_task_type("grounding or reasoning").has_value());
  CHECK_FALSE(parse_task_type("segmentation").has_value());
  CHECK_FALSE(parse_task_type("").has_value());
}

TEST_CASE("enhancement kinds carry tool prefixes") {
  CHECK(tool_prefix(K::SemanticDescription) == "semantic_description");
  CHECK(tool_prefix(K::SpatialPositionDescription) == "spatial_position_description");
  CHECK(tool_prefix(K::SpatialRelationshipDescription) == "spatial_relationship_description");
  CHECK(parse_enhancement_kind("Spatial Position Enhancement") == K::SpatialPositionDescription);
  CHECK(parse_enhancement_kind("semantic_description") == K::SemanticDescription);
  CHECK(parse_enhancement_kind(" spatial relationship ") == K::SpatialRelationshipDescription);
  CHECK_FALSE(parse_enhancement_kind("depth description").has_value());
}

TEST_CASE("object sets trim, dedupe and keep first-mention order") {
  ObjectSet s{" house", "car", "house ", "", "building"};
  CHECK(s.items() == std::vector<std::string>{"house", "car", "building"});
  CHECK(s.joined() == "house, car, building");
  CHECK_FALSE(s.add("car"));
  CHECK(s.add("tree"));
}

TEST_CASE("default plans") {
  CHECK(default_plan(TaskType::VisualGrounding) ==
        EnhancementPlan{K::SpatialPositionDescription, K::SemanticDescription, K::SpatialRelationshipDescription});
  CHECK(default_plan(TaskType::VisualReasoning) ==
        EnhancementPlan{K::SemanticDescription, K::SpatialRelationshipDescription});
  CHECK(default_plan(TaskType::VisualQuestionAnswering) ==
        EnhancementPlan{K::SemanticDescription, K::SpatialRelationshipDescription});
  CHECK(default_plan(TaskType::VisualGrounding) == default_plan(TaskType::VisualGrounding));
}

TEST_CASE("analysis validation") {
  AnalysisResult a{TaskType::VisualReasoning, ObjectSet{"bus"}, {}};
  CHECK_THROWS_AS(validate(a), InputError);
  a.plan = {K::SemanticDescription, K::SemanticDescription};
  CHECK_THROWS_AS(validate(a), InputError);
  a.plan = {K::SemanticDescription};
  CHECK_NOTHROW(validate(a));
}

TEST_CASE("render_bundle") {
  const EnhancementPlan vg = default_plan(TaskType::VisualGrounding);
  CHECK(render_bundle(bundle_of({{K::SpatialPositionDescription, "car1: [10,20,50,60]"}}), vg) ==
        "== Spatial Position Description ==\ncar1: [10,20,50,60]");
  CHECK(render_bundle(EnhancementBundle{}, vg).empty());

  const auto two = bundle_of({{K::SpatialRelationshipDescription, "rel"}, {K::SemanticDescription, "sem"}});
  CHECK(render_bundle(two, {K::SemanticDescription, K::SpatialRelationshipDescription}) ==
        "== Semantic Description ==\nsem\n\n== Spatial Relationship Description ==\nrel");
  // Blocks outside the plan are not rendered.
  CHECK(render_bundle(two, {K::SemanticDescription}) == "== Semantic Description ==\nsem");
}

TEST_CASE("block character cap keeps whole UTF-8 sequences") {
  FusionOptions opts;
  opts.block_char_cap = 4;
  const auto b = bundle_of({{K::SemanticDescription, "abc\xC3\xA9xyz"}});
  CHECK(render_bundle(b, {K::SemanticDescription}, opts) == "== Semantic Description ==\nabc\xC3\xA9");
}

TEST_CASE("golden: grounding with three blocks") {
  const AnalysisResult a{TaskType::VisualGrounding, ObjectSet{"car"}, default_plan(TaskType::VisualGrounding)};
  const auto b = bundle_of({{K::SpatialPositionDescription, "car1: [412,288,470,331]\ncar2: [120,40,168,77]"},
                            {K::SemanticDescription, "A black sedan sits in a paved lot next to a white van."},
                            {K::SpatialRelationshipDescription, "car1 is directly left of the white van."}});
  const auto out = fuse_prompt(a, "Locate the black car parked beside the white van", b);
  CHECK(out.text == golden("vg_three_blocks.txt"));
  CHECK_FALSE(out.provenance.degraded());
  CHECK(out.provenance.analysis == a);
  CHECK(out.provenance.tools_used.size() == 3);
}

TEST_CASE("golden: reasoning keeps the instruction's question mark") {
  const AnalysisResult a{TaskType::VisualReasoning, ObjectSet{"bus", "road"}, default_plan(TaskType::VisualReasoning)};
  const auto b = bundle_of({{K::SemanticDescription, "Two red buses drive along a four-lane road."},
                            {K::SpatialRelationshipDescription, "Both buses are on the road, one behind the other."}});
  CHECK(fuse_prompt(a, "There are two buses on the road. True or false?", b).text == golden("vr_two_blocks.txt"));
}

TEST_CASE("golden: question answering") {
  const AnalysisResult a{TaskType::VisualQuestionAnswering, ObjectSet{"ship", "bridge"},
                         default_plan(TaskType::VisualQuestionAnswering)};
  const auto b = bundle_of({{K::SemanticDescription, "A cargo ship passes beneath a steel bridge."},
                            {K::SpatialRelationshipDescription, "The ship is below the bridge deck."}});
  CHECK(fuse_prompt(a, "What is under the bridge? A. ship B. car C. tree D. person", b).text ==
        golden("vqa_two_blocks.txt"));
}

TEST_CASE("golden: empty bundle degrades to None.") {
  const AnalysisResult a{TaskType::VisualReasoning, ObjectSet{"bus"}, default_plan(TaskType::VisualReasoning)};
  const auto out = fuse_prompt(a, "Is the bus turning left", EnhancementBundle{});
  CHECK(out.text == golden("vr_degraded_empty.txt"));
  CHECK(out.provenance.degraded());
  REQUIRE(out.provenance.degradations.size() == 1);
  CHECK(out.provenance.degradations[0].stage == "prompt_fusion");
}

TEST_CASE("fusion details") {
  const AnalysisResult a{TaskType::VisualQuestionAnswering, ObjectSet{"house", "car", "building"},
                         {K::SemanticDescription}};
  const auto b = bundle_of({{K::SemanticDescription, "x"}});
  const auto text = fuse_prompt(a, "Which is largest?", b).text;
  CHECK(text.find("include: house, car, building. Which is largest? Here") != std::string::npos);
  // A trailing period is not doubled; trailing whitespace is dropped.
  CHECK(fuse_prompt(a, "Count the cars.  ", b).text.find("Count the cars. Here is") != std::string::npos);
  CHECK_THROWS_AS(fuse_prompt(a, "   ", b), InputError);
  const AnalysisResult none{TaskType::VisualReasoning, ObjectSet{}, {K::SemanticDescription}};
  CHECK(fuse_prompt(none, "Is it raining", b).text.find("include: unspecified. Is it raining.") !=
        std::string::npos);
}

TEST_CASE("fusion embeds the instruction verbatim and is injective on it") {
  std::mt19937 rng(3);
  const std::string alphabet = "abcXYZ 019,;:-?!.\n\xC3\xA9";
  const AnalysisResult a{TaskType::VisualGrounding, ObjectSet{"car"}, default_plan(TaskType::VisualGrounding)};
  const auto b = bundle_of({{K::SemanticDescription, "sem"}});
  const std::string prefix =
      "You are an assistant responsible for UAV Image Visual Grounding Task. The target objects you need to pay "
      "attention to include: car. ";
  for (int i = 0; i < 500; ++i) {
    std::string instr = "q";
    const int len = 1 + static_cast<int>(rng() % 40);
    for (int j = 0; j < len; ++j) instr += alphabet[rng() % alphabet.size()];
    instr += "z";  // keep trailing trim and period rules out of the way
    const auto text = fuse_prompt(a, instr, b).text;
    REQUIRE(text.rfind(prefix, 0) == 0);
    const auto tail = text.find(". Here is some additional information:\n", prefix.size());
    REQUIRE(tail != std::string::npos);
    REQUIRE(text.substr(prefix.size(), tail - prefix.size()) == instr);
    REQUIRE(fuse_prompt(a, instr + "w", b).text != text);
  }
}
