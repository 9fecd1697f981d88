#pragma once

#include <cstddef>
#include <vector>

namespace varlat {

// Summary of one latency sample set. Variance is population (1/n); the
// percentile is nearest-rank (no interpolation).
struct LatencySummary {
    std::size_t n = 0;
    double mean_ns = 0.0;
    double variance_ns2 = 0.0;
    double p99_ns = 0.0;
    double lp_p = 2.0;
    double lp_value = 0.0;
};

// (sum |x_i|^p)^(1/p). Empty input -> 0. Throws std::invalid_argument if p < 1.
double lp_norm(const std::vector<double>& xs, double p);

// Nearest-rank percentile: sorted value at 1-based index ceil(q/100 * n).
// Throws std::invalid_argument on empty input or q outside (0, 100].
double percentile(const std::vector<double>& xs, double q);

LatencySummary summarize(const std::vector<double>& latencies_ns, double p = 2.0);

// One-pass centered co-moment accumulator over a fixed set of columns.
// Uses Welford-style recurrences so large ns magnitudes with small relative
// variance do not cancel. Population normalization.
class CoMoment {
public:
    explicit CoMoment(std::size_t cols);

    void add(const std::vector<double>& row);
    void merge(const CoMoment& other);

    std::size_t rows() const { return n_; }
    std::size_t cols() const { return cols_; }
    double mean(std::size_t i) const;
    double variance(std::size_t i) const;
    double covariance(std::size_t i, std::size_t j) const;

private:
    std::size_t cols_;
    std::size_t n_ = 0;
    std::vector<double> origin_;  // first-row pivot per column
    std::vector<double> mean_;    // mean of (row - origin)
    std::vector<double> c_;  // centered cross-product sums, row-major cols_ x cols_
};

// Population covariance matrix of the given rows. Throws if fewer than 2 rows
// or if rows are ragged.
std::vector<std::vector<double>> covariance_matrix(
    const std::vector<std::vector<double>>& rows);

}  // namespace varlat
