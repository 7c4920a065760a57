#pragma once

#include <cstddef>
#include <ostream>
#include <utility>
#include <vector>

#include "satgan/boxes.hpp"
#include "satgan/scene.hpp"

namespace satgan {

inline constexpr real kDefaultIouThreshold = 0.5f;

struct MatchResult {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  /// (detection index, truth index) in the order matches were made.
  std::vector<std::pair<int, int>> pairs;
};

/// Greedy matching in descending confidence order. Each detection takes the
/// unmatched truth of highest IoU when that IoU reaches `iou_threshold`.
MatchResult match_detections(const std::vector<Detection>& detections, const Labels& truths,
                             real iou_threshold = kDefaultIouThreshold);

struct PRPoint {
  real threshold = 0.0f;
  long true_positives = 0;
  long false_positives = 0;
  long false_negatives = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 0.0;
};

/// 2PR / (P + R), or 0 when P + R = 0.
double f1_score(double precision, double recall);

/// Fills precision/recall/f1 from the counts; empty denominators give 1.
PRPoint make_pr_point(real threshold, long tp, long fp, long fn);

/// 101 evenly spaced thresholds from 1 down to 0.
std::vector<real> default_thresholds();

using DetectionSet = std::vector<std::vector<Detection>>;

/// One point per threshold (sorted descending), counts aggregated over images.
std::vector<PRPoint> pr_curve(const DetectionSet& detections, const std::vector<Labels>& truths,
                              real iou_threshold, const std::vector<real>& thresholds);

/// Max F1 over the curve, recomputed from each point's precision and recall;
/// throws std::invalid_argument on an empty curve.
double f1_star(const std::vector<PRPoint>& curve);
/// The point attaining f1_star (the highest threshold among ties).
PRPoint best_point(const std::vector<PRPoint>& curve);

struct ObjectOutcome {
  real magnitude = 0.0f;
  bool matched = false;
};

/// Match outcome of every truth object at one confidence threshold.
std::vector<ObjectOutcome> object_outcomes(const DetectionSet& detections, const std::vector<Labels>& truths,
                                           real iou_threshold, real confidence_threshold);

struct MagnitudeBin {
  real lo = 0.0f;
  real hi = 0.0f;
  double recall = 0.0;
  long support = 0;
  bool overflow = false;
};

/// Edges lo, lo+width, ..., reaching at least hi.
std::vector<real> magnitude_bin_edges(real lo, real hi, real width = 0.5f);

/// One bin per consecutive edge pair ([lo, hi), last bin closed) plus a final
/// overflow bin for magnitudes outside every bin. Empty bins report recall 0.
std::vector<MagnitudeBin> recall_vs_magnitude(const std::vector<ObjectOutcome>& outcomes, const std::vector<real>& edges);

void write_pr_curve_csv(std::ostream& out, const std::vector<PRPoint>& curve);
void write_recall_by_magnitude_csv(std::ostream& out, const std::vector<MagnitudeBin>& bins);

}  // namespace satgan
