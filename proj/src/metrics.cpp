#include "ucl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace ucl {

namespace {

void check_two_classes(const std::vector<double>& scores, const std::vector<int>& labels,
                       const char* op) {
    if (scores.size() != labels.size())
        throw ValidationError(std::string(op) + ": " + std::to_string(scores.size()) +
                              " scores for " + std::to_string(labels.size()) + " labels");
    if (scores.empty()) throw ValidationError(std::string(op) + ": empty input");
    for (double s : scores)
        if (!std::isfinite(s))
            throw ValidationError(std::string(op) + ": scores must be finite");
    bool has_pos = false, has_neg = false;
    for (int l : labels) {
        if (l != 0 && l != 1)
            throw ValidationError(std::string(op) + ": labels must be 0 (real) or 1 (fake)");
        (l ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
        throw ValidationError(std::string(op) + ": both classes must be present");
}

} // namespace

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_two_classes(scores, labels, "roc_curve");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b]; // descending
    });
    const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double neg = static_cast<double>(n) - pos;

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double threshold = scores[order[i]];
        // consume the whole tie group: one curve point per distinct score
        while (i < n && scores[order[i]] == threshold) {
            if (labels[order[i]])
                tp += 1.0;
            else
                fp += 1.0;
            ++i;
        }
        if (i == n) break; // the minimum score's point is the closing sentinel
        curve.points.push_back({threshold, fp / neg, tp / pos});
    }
    curve.points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
    return curve;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_two_classes(scores, labels, "auc");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups, then the rank-sum statistic
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j); // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = mid;
        i = j;
    }
    double pos = 0.0, rank_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k]) {
            pos += 1.0;
            rank_sum += rank[k];
        }
    const double neg = static_cast<double>(n) - pos;
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold) {
    if (scores.size() != labels.size())
        throw ValidationError("accuracy: size mismatch");
    if (scores.empty()) throw ValidationError("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int predicted = scores[i] >= threshold ? 1 : 0;
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["train_domain"] = train_domain;
    j["test_domain"] = test_domain;
    j["auc"] = auc;
    j["accuracy"] = accuracy;
    j["real_count"] = real_count;
    j["fake_count"] = fake_count;
    j["checkpoint_hash"] = checkpoint_hash;
    j["config_hash"] = config_hash;
    return j.dump(2);
}

namespace {

std::string fmt_threshold(double t) {
    if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(10);
    os << t;
    return os.str();
}

} // namespace

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
    std::ofstream f(path);
    if (!f) throw IoError("write_roc_csv: cannot open " + path.string());
    f << "threshold,fpr,tpr\n";
    f.precision(10);
    for (const auto& p : curve.points)
        f << fmt_threshold(p.threshold) << "," << p.fpr << "," << p.tpr << "\n";
    if (!f) throw IoError("write_roc_csv: short write to " + path.string());
}

RocCurve read_roc_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_roc_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line) || line != "threshold,fpr,tpr")
        throw IoError("read_roc_csv: missing header in " + path.string());
    RocCurve curve;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string t, fpr, tpr;
        if (!std::getline(row, t, ',') || !std::getline(row, fpr, ',') || !std::getline(row, tpr))
            throw IoError("read_roc_csv: malformed row '" + line + "' in " + path.string());
        RocPoint p;
        if (t == "inf")
            p.threshold = std::numeric_limits<double>::infinity();
        else if (t == "-inf")
            p.threshold = -std::numeric_limits<double>::infinity();
        else
            p.threshold = std::stod(t);
        p.fpr = std::stod(fpr);
        p.tpr = std::stod(tpr);
        curve.points.push_back(p);
    }
    return curve;
}

} // namespace ucl
