#ifndef PROPNET_EVAL_METRICS_HPP
#define PROPNET_EVAL_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "propnet/common.hpp"

namespace propnet::eval {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

// Counts at a strict threshold: score > threshold predicts the positive class.
ConfusionMatrix confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold = 0.5);

// 0/0 denominators yield value 0 with the degenerate flag set.
struct MetricValue {
    double value = 0.0;
    bool degenerate = false;
};

MetricValue recall(const ConfusionMatrix& cm);
MetricValue precision(const ConfusionMatrix& cm);
MetricValue f1(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // descending threshold sweep, (0,0) .. (1,1)
    double auc = 0.0;              // trapezoidal: 1/2 sum (x_{i+1}-x_i)(y_i+y_{i+1})
};

// Threshold sweep over distinct scores, tied scores grouped into one step.
// Throws a domain error when only one class is present.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricsReport {
    std::string model;
    std::string dataset;
    double recall = 0.0;
    double auc = 0.0;
    double f1 = 0.0;
    ConfusionMatrix cm;
    bool degenerate = false;
};

MetricsReport metrics_from_scores(const std::vector<double>& scores, const std::vector<int>& labels,
                                  const std::string& model, const std::string& dataset);

std::string metrics_report_json(const MetricsReport& report);
std::string roc_curve_csv(const RocCurve& curve);

}  // namespace propnet::eval

#endif  // PROPNET_EVAL_METRICS_HPP
