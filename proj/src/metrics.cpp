#include "zenesis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"

namespace zenesis {

Confusion confusion(const Mask& pred, const Mask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(Errc::DimensionMismatch, "prediction " + std::to_string(pred.width()) + "x" +
                                             std::to_string(pred.height()) + " vs ground truth " +
                                             std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  Confusion c;
  const auto p = pred.bits();
  const auto g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) {
      g[i] ? ++c.tp : ++c.fp;
    } else {
      g[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

double accuracy(const Confusion& c) {
  const auto n = c.total();
  return n == 0 ? 1.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
}

double iou(const Confusion& c, const MetricOptions& opts) {
  const auto den = c.tp + c.fp + c.fn;
  if (den == 0) return opts.empty_as_one ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(den);
}

double dice(const Confusion& c, const MetricOptions& opts) {
  const auto den = 2 * c.tp + c.fp + c.fn;
  if (den == 0) return opts.empty_as_one ? 1.0 : 0.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(den);
}

SliceMetrics slice_metrics(int slice_index, const Confusion& c, const MetricOptions& opts) {
  return {slice_index, accuracy(c), iou(c, opts), dice(c, opts)};
}

namespace {

// Summation over sorted values makes the result independent of input order.
Summary summarize(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (const double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  Summary s{sum / n, 0.0};
  if (values.size() > 1) {
    std::vector<double> sq;
    sq.reserve(values.size());
    for (const double v : values) sq.push_back((v - s.mean) * (v - s.mean));
    std::sort(sq.begin(), sq.end());
    double acc = 0.0;
    for (const double v : sq) acc += v;
    s.std = std::sqrt(acc / (n - 1.0));
  }
  return s;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

MetricsReport aggregate(std::span<const SliceMetrics> slices) {
  if (slices.empty()) {
    throw Error(Errc::EmptyInput, "no per-slice metrics to aggregate");
  }
  MetricsReport report;
  report.per_slice.assign(slices.begin(), slices.end());
  std::vector<double> acc;
  std::vector<double> ious;
  std::vector<double> dices;
  for (const auto& s : slices) {
    acc.push_back(s.accuracy);
    ious.push_back(s.iou);
    dices.push_back(s.dice);
  }
  report.accuracy = summarize(std::move(acc));
  report.iou = summarize(std::move(ious));
  report.dice = summarize(std::move(dices));
  report.sample_count = slices.size();
  return report;
}

MetricsReport evaluate_masks(std::span<const Mask> pred, std::span<const Mask> gt, const MetricOptions& opts) {
  if (pred.size() != gt.size()) {
    throw Error(Errc::CountMismatch,
                std::to_string(pred.size()) + " predictions vs " + std::to_string(gt.size()) + " ground-truth masks");
  }
  std::vector<SliceMetrics> slices;
  slices.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].width() != gt[i].width() || pred[i].height() != gt[i].height()) {
      throw Error(Errc::DimensionMismatch, "slice " + std::to_string(i) + ": mask dimensions differ");
    }
    slices.push_back(slice_metrics(static_cast<int>(i), confusion(pred[i], gt[i]), opts));
  }
  return aggregate(slices);
}

MetricsReport evaluate_pair_set(const std::filesystem::path& pred, const std::filesystem::path& gt,
                                const MetricOptions& opts) {
  const auto p = load_mask_source(pred);
  const auto g = load_mask_source(gt);
  return evaluate_masks(p, g, opts);
}

void to_json(nlohmann::json& j, const MetricsReport& report) {
  auto rows = nlohmann::json::array();
  for (const auto& s : report.per_slice) {
    rows.push_back({{"slice", s.slice_index}, {"accuracy", s.accuracy}, {"iou", s.iou}, {"dice", s.dice}});
  }
  auto summary = [](const Summary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
  j = nlohmann::json{{"per_slice", std::move(rows)},
                     {"aggregate",
                      {{"accuracy", summary(report.accuracy)},
                       {"iou", summary(report.iou)},
                       {"dice", summary(report.dice)}}},
                     {"sample_count", report.sample_count}};
}

void from_json(const nlohmann::json& j, MetricsReport& report) {
  report = MetricsReport{};
  for (const auto& row : j.at("per_slice")) {
    report.per_slice.push_back({row.at("slice").get<int>(), row.at("accuracy").get<double>(),
                                row.at("iou").get<double>(), row.at("dice").get<double>()});
  }
  const auto& agg = j.at("aggregate");
  auto summary = [](const nlohmann::json& s) { return Summary{s.at("mean").get<double>(), s.at("std").get<double>()}; };
  report.accuracy = summary(agg.at("accuracy"));
  report.iou = summary(agg.at("iou"));
  report.dice = summary(agg.at("dice"));
  report.sample_count = j.at("sample_count").get<std::size_t>();
}

std::string to_csv(const MetricsReport& report) {
  std::string out = "slice,accuracy,iou,dice\n";
  for (const auto& s : report.per_slice) {
    out += std::to_string(s.slice_index) + "," + fixed6(s.accuracy) + "," + fixed6(s.iou) + "," + fixed6(s.dice) + "\n";
  }
  out += "mean," + fixed6(report.accuracy.mean) + "," + fixed6(report.iou.mean) + "," + fixed6(report.dice.mean) + "\n";
  out += "std," + fixed6(report.accuracy.std) + "," + fixed6(report.iou.std) + "," + fixed6(report.dice.std) + "\n";
  return out;
}

}  // namespace zenesis
