#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satgan/csv.hpp"
#include "satgan/evaluation.hpp"

namespace satgan {

namespace {

std::vector<Detection> above(const std::vector<Detection>& dets, real threshold) {
  std::vector<Detection> out;
  for (const Detection& d : dets)
    if (d.confidence >= threshold) out.push_back(d);
  return out;
}

void check_sizes(const DetectionSet& detections, const std::vector<Labels>& truths) {
  if (detections.size() != truths.size()) {
    throw std::invalid_argument("detections for " + std::to_string(detections.size()) + " images but truths for " +
                                std::to_string(truths.size()));
  }
}

}  // namespace

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

PRPoint make_pr_point(real threshold, long tp, long fp, long fn) {
  PRPoint p;
  p.threshold = threshold;
  p.true_positives = tp;
  p.false_positives = fp;
  p.false_negatives = fn;
  p.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  p.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  p.f1 = f1_score(p.precision, p.recall);
  return p;
}

std::vector<real> default_thresholds() {
  std::vector<real> t;
  for (int i = 100; i >= 0; --i) t.push_back(static_cast<real>(i) / 100.0f);
  return t;
}

std::vector<PRPoint> pr_curve(const DetectionSet& detections, const std::vector<Labels>& truths, real iou_threshold,
                              const std::vector<real>& thresholds) {
  check_sizes(detections, truths);
  if (!std::is_sorted(thresholds.begin(), thresholds.end(), std::greater<>())) {
    throw std::invalid_argument("pr_curve: thresholds must be sorted descending");
  }
  std::vector<PRPoint> curve;
  curve.reserve(thresholds.size());
  for (real t : thresholds) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
      const MatchResult m = match_detections(above(detections[i], t), truths[i], iou_threshold);
      tp += m.true_positives;
      fp += m.false_positives;
      fn += m.false_negatives;
    }
    curve.push_back(make_pr_point(t, tp, fp, fn));
  }
  return curve;
}

PRPoint best_point(const std::vector<PRPoint>& curve) {
  if (curve.empty()) throw std::invalid_argument("f1_star: empty curve");
  PRPoint best = curve.front();
  best.f1 = f1_score(best.precision, best.recall);
  for (PRPoint p : curve) {
    p.f1 = f1_score(p.precision, p.recall);
    if (p.f1 > best.f1 || (p.f1 == best.f1 && p.threshold > best.threshold)) best = p;
  }
  return best;
}

double f1_star(const std::vector<PRPoint>& curve) { return best_point(curve).f1; }

std::vector<ObjectOutcome> object_outcomes(const DetectionSet& detections, const std::vector<Labels>& truths,
                                           real iou_threshold, real confidence_threshold) {
  check_sizes(detections, truths);
  std::vector<ObjectOutcome> out;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const MatchResult m = match_detections(above(detections[i], confidence_threshold), truths[i], iou_threshold);
    std::vector<bool> matched(truths[i].size(), false);
    for (const auto& [d, t] : m.pairs) matched[static_cast<std::size_t>(t)] = true;
    for (std::size_t t = 0; t < truths[i].size(); ++t) out.push_back({truths[i][t].magnitude, matched[t]});
  }
  return out;
}

std::vector<real> magnitude_bin_edges(real lo, real hi, real width) {
  if (!(width > 0.0f) || !(hi >= lo)) throw std::invalid_argument("magnitude_bin_edges: need width > 0 and hi >= lo");
  std::vector<real> edges;
  for (int i = 0;; ++i) {
    const real e = lo + static_cast<real>(i) * width;
    edges.push_back(e);
    if (e >= hi && i > 0) break;
  }
  return edges;
}

std::vector<MagnitudeBin> recall_vs_magnitude(const std::vector<ObjectOutcome>& outcomes, const std::vector<real>& edges) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) {
    throw std::invalid_argument("recall_vs_magnitude: need at least two ascending edges");
  }
  const std::size_t nbins = edges.size() - 1;
  std::vector<long> hits(nbins + 1, 0), support(nbins + 1, 0);
  for (const ObjectOutcome& o : outcomes) {
    std::size_t bin = nbins;  // overflow
    if (o.magnitude >= edges.front() && o.magnitude <= edges.back()) {
      bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), o.magnitude) - edges.begin()) - 1;
      bin = std::min(bin, nbins - 1);
    }
    ++support[bin];
    if (o.matched) ++hits[bin];
  }
  std::vector<MagnitudeBin> bins;
  for (std::size_t b = 0; b <= nbins; ++b) {
    MagnitudeBin m;
    m.overflow = b == nbins;
    m.lo = m.overflow ? std::nanf("") : edges[b];
    m.hi = m.overflow ? std::nanf("") : edges[b + 1];
    m.support = support[b];
    m.recall = support[b] > 0 ? static_cast<double>(hits[b]) / static_cast<double>(support[b]) : 0.0;
    bins.push_back(m);
  }
  return bins;
}

void write_pr_curve_csv(std::ostream& out, const std::vector<PRPoint>& curve) {
  write_csv_row(out, {"threshold", "tp", "fp", "fn", "precision", "recall", "f1"});
  for (const PRPoint& p : curve) {
    write_csv_row(out, {format_number(p.threshold), std::to_string(p.true_positives), std::to_string(p.false_positives),
                        std::to_string(p.false_negatives), format_number(p.precision), format_number(p.recall),
                        format_number(p.f1)});
  }
}

void write_recall_by_magnitude_csv(std::ostream& out, const std::vector<MagnitudeBin>& bins) {
  write_csv_row(out, {"bin_lo", "bin_hi", "recall", "support"});
  for (const MagnitudeBin& b : bins) {
    write_csv_row(out, {format_number(b.lo), format_number(b.hi), format_number(b.recall), std::to_string(b.support)});
  }
}

}  // namespace satgan
