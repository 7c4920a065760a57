#include <algorithm>
#include <numeric>

#include "satgan/evaluation.hpp"

namespace satgan {

real iou(const Box& a, const Box& b) {
  const real iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const real ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0f || ih <= 0.0f) return 0.0f;
  const real inter = iw * ih;
  const real uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0f ? std::clamp<real>(inter / uni, 0, 1) : real(0);
}

MatchResult match_detections(const std::vector<Detection>& detections, const Labels& truths, real iou_threshold) {
  std::vector<int> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return detections[static_cast<std::size_t>(a)].confidence > detections[static_cast<std::size_t>(b)].confidence;
  });
  std::vector<bool> taken(truths.size(), false);
  MatchResult r;
  for (int d : order) {
    int best = -1;
    real best_iou = -1.0f;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (taken[t]) continue;
      const real v = iou(detections[static_cast<std::size_t>(d)].box, truths[t].box());
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(t);
      }
    }
    if (best >= 0 && best_iou >= iou_threshold) {
      taken[static_cast<std::size_t>(best)] = true;
      r.pairs.emplace_back(d, best);
      ++r.true_positives;
    } else {
      ++r.false_positives;
    }
  }
  r.false_negatives = static_cast<int>(truths.size()) - r.true_positives;
  return r;
}

}  // namespace satgan
