#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aerialvp {

/// Axis-aligned box in corner form, image frame with origin at top-left.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }

  bool operator==(const BoundingBox&) const = default;
};

/// Throws GeometryError unless all coordinates are finite and ordered.
void validate(const BoundingBox& box);

/// Builds a box from possibly unordered corners.
BoundingBox make_box(double xa, double ya, double xb, double yb);

std::string to_string(const BoundingBox& box);

/// Intersection over union. Zero when the union has no area.
double iou(const BoundingBox& a, const BoundingBox& b);

BoundingBox clamp_to_image(const BoundingBox& box, double width, double height);

inline constexpr double kDefaultIouThreshold = 0.5;

struct GroundingMetrics {
  double accuracy = 0.0;
  double mean_iou = 0.0;
  std::size_t n = 0;
  double beta = kDefaultIouThreshold;
  /// Set when computed over an empty list; accuracy/mean_iou are then 0.
  bool empty = true;
};

struct GroundingPair {
  std::optional<BoundingBox> prediction;
  BoundingBox gold;
};

/// A prediction counts as correct when its IoU strictly exceeds beta.
/// Missing predictions score IoU 0.
GroundingMetrics grounding_metrics(std::span<const GroundingPair> pairs,
                                   double beta = kDefaultIouThreshold);

/// Same fold over precomputed per-sample IoU values.
GroundingMetrics grounding_metrics_from_ious(std::span<const double> ious,
                                             double beta = kDefaultIouThreshold);

struct ClassificationMetrics {
  double accuracy = 0.0;
  std::size_t n = 0;
  bool empty = true;
};

/// Fraction of exact matches. An absent prediction counts as wrong.
ClassificationMetrics classification_accuracy(
    std::span<const std::optional<std::string>> predictions,
    std::span<const std::string> golds);

}  // namespace aerialvp
