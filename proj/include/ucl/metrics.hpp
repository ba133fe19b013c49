#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ucl/common.hpp"

// Threshold-free evaluation of fake-vs-real scores. "fake" is the positive
// class throughout; scores are the predicted fake probability (any monotone
// score works for ROC/AUC).

namespace ucl {

struct RocPoint {
    double threshold; // +inf sentinel opens the curve, -inf closes it
    double fpr;
    double tpr;
};

/// Points ordered by descending threshold; fpr/tpr non-decreasing from (0,0)
/// to (1,1). Ties share one point: thresholds are the distinct scores.
struct RocCurve {
    std::vector<RocPoint> points;
};

/// labels: 1 = fake (positive), 0 = real. Both classes must be present.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

/// Mann-Whitney statistic: fraction of (fake, real) pairs ranked correctly,
/// ties counted half. Equals the trapezoidal area under roc_curve.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Trapezoidal area under an ROC curve (the second route of the dual check).
double trapezoid_area(const RocCurve& curve);

/// Fraction of samples classified correctly at `threshold` (predict fake when
/// score >= threshold). Errors on empty input.
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold = 0.5);

struct EvalReport {
    std::string train_domain;
    std::string test_domain;
    double auc = 0.0;
    double accuracy = 0.0;
    std::size_t real_count = 0;
    std::size_t fake_count = 0;
    std::string checkpoint_hash;
    std::string config_hash;

    std::string to_json() const;
};

/// CSV with header `threshold,fpr,tpr`.
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);
RocCurve read_roc_csv(const std::filesystem::path& path);

} // namespace ucl
