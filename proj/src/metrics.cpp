#include "varlat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varlat {

double lp_norm(const std::vector<double>& xs, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (xs.empty()) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += std::pow(std::fabs(x), p);
    return std::pow(acc, 1.0 / p);
}

double percentile(const std::vector<double>& xs, double q) {
    if (xs.empty()) throw std::invalid_argument("percentile: empty input");
    if (q <= 0.0 || q > 100.0) throw std::invalid_argument("percentile: q out of (0,100]");
    std::vector<double> sorted(xs);
    std::sort(sorted.begin(), sorted.end());
    std::size_t rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(sorted.size())));
    if (rank == 0) rank = 1;
    return sorted[rank - 1];
}

LatencySummary summarize(const std::vector<double>& latencies_ns, double p) {
    LatencySummary s;
    s.n = latencies_ns.size();
    s.lp_p = p;
    if (s.n == 0) return s;
    CoMoment acc(1);
    for (double l : latencies_ns) acc.add({l});
    s.mean_ns = acc.mean(0);
    s.variance_ns2 = acc.variance(0);
    s.p99_ns = percentile(latencies_ns, 99.0);
    s.lp_value = lp_norm(latencies_ns, p);
    return s;
}

CoMoment::CoMoment(std::size_t cols)
    : cols_(cols), origin_(cols, 0.0), mean_(cols, 0.0), c_(cols * cols, 0.0) {}

void CoMoment::add(const std::vector<double>& row) {
    if (row.size() != cols_) throw std::invalid_argument("CoMoment::add: wrong row width");
    // Pivot at the first row so the recurrences run on small offsets; a
    // large common magnitude (ns timestamps) would otherwise eat the
    // variance's low bits.
    if (n_ == 0) origin_ = row;
    ++n_;
    std::vector<double> shifted(cols_), delta(cols_);
    for (std::size_t i = 0; i < cols_; ++i) {
        shifted[i] = row[i] - origin_[i];
        delta[i] = shifted[i] - mean_[i];
        mean_[i] += delta[i] / static_cast<double>(n_);
    }
    for (std::size_t i = 0; i < cols_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            c_[i * cols_ + j] += delta[i] * (shifted[j] - mean_[j]);
}

void CoMoment::merge(const CoMoment& other) {
    if (other.cols_ != cols_) throw std::invalid_argument("CoMoment::merge: column mismatch");
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    double na = static_cast<double>(n_);
    double nb = static_cast<double>(other.n_);
    double nt = na + nb;
    // Origins differ between shards; their difference is exact while the
    // per-shard means are small.
    std::vector<double> d(cols_);
    for (std::size_t i = 0; i < cols_; ++i)
        d[i] = (other.origin_[i] - origin_[i]) + (other.mean_[i] - mean_[i]);
    for (std::size_t i = 0; i < cols_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            c_[i * cols_ + j] += other.c_[i * cols_ + j] + d[i] * d[j] * na * nb / nt;
    for (std::size_t i = 0; i < cols_; ++i) mean_[i] += d[i] * nb / nt;
    n_ += other.n_;
}

double CoMoment::mean(std::size_t i) const { return origin_.at(i) + mean_.at(i); }

double CoMoment::variance(std::size_t i) const { return covariance(i, i); }

double CoMoment::covariance(std::size_t i, std::size_t j) const {
    if (i >= cols_ || j >= cols_) throw std::out_of_range("CoMoment::covariance");
    if (n_ == 0) return 0.0;
    return c_[i * cols_ + j] / static_cast<double>(n_);
}

std::vector<std::vector<double>> covariance_matrix(
    const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw std::invalid_argument("covariance_matrix: need >= 2 rows");
    CoMoment acc(rows.front().size());
    for (const auto& r : rows) acc.add(r);
    std::size_t k = acc.cols();
    std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) m[i][j] = acc.covariance(i, j);
    return m;
}

}  // namespace varlat
