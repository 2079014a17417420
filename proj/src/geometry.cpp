#include "aerialvp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aerialvp/error.hpp"

namespace aerialvp {

void validate(const BoundingBox& box) {
  if (!std::isfinite(box.x1) || !std::isfinite(box.y1) || !std::isfinite(box.x2) ||
      !std::isfinite(box.y2)) {
    throw GeometryError("non-finite box coordinate in " + to_string(box));
  }
  if (box.x1 > box.x2 || box.y1 > box.y2) {
    throw GeometryError("box corners out of order: " + to_string(box));
  }
}

BoundingBox make_box(double xa, double ya, double xb, double yb) {
  // min/max would swallow a NaN, so check the raw values first.
  validate(BoundingBox{xa, ya, xa, ya});
  validate(BoundingBox{xb, yb, xb, yb});
  BoundingBox box{std::min(xa, xb), std::min(ya, yb), std::max(xa, xb), std::max(ya, yb)};
  validate(box);
  return box;
}

std::string to_string(const BoundingBox& box) {
  std::ostringstream out;
  out << '[' << box.x1 << ',' << box.y1 << ',' << box.x2 << ',' << box.y2 << ']';
  return out.str();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  validate(a);
  validate(b);
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox clamp_to_image(const BoundingBox& box, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw GeometryError("image dimensions must be positive");
  }
  validate(box);
  return BoundingBox{std::clamp(box.x1, 0.0, width), std::clamp(box.y1, 0.0, height),
                     std::clamp(box.x2, 0.0, width), std::clamp(box.y2, 0.0, height)};
}

GroundingMetrics grounding_metrics_from_ious(std::span<const double> ious, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw InputError("IoU threshold must lie in [0,1)");
  }
  GroundingMetrics m;
  m.beta = beta;
  m.n = ious.size();
  if (ious.empty()) return m;
  m.empty = false;
  std::size_t correct = 0;
  double sum = 0.0;
  for (double v : ious) {
    if (v > beta) ++correct;
    sum += v;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  m.mean_iou = sum / static_cast<double>(m.n);
  return m;
}

GroundingMetrics grounding_metrics(std::span<const GroundingPair> pairs, double beta) {
  std::vector<double> ious;
  ious.reserve(pairs.size());
  for (const auto& p : pairs) {
    validate(p.gold);
    ious.push_back(p.prediction ? iou(*p.prediction, p.gold) : 0.0);
  }
  return grounding_metrics_from_ious(ious, beta);
}

ClassificationMetrics classification_accuracy(
    std::span<const std::optional<std::string>> predictions,
    std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw InputError("prediction and gold lists differ in length");
  }
  ClassificationMetrics m;
  m.n = golds.size();
  if (golds.empty()) return m;
  m.empty = false;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (predictions[i] && *predictions[i] == golds[i]) ++hits;
  }
  m.accuracy = static_cast<double>(hits) / static_cast<double>(m.n);
  return m;
}

}  // namespace aerialvp
