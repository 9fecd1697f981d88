#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "varlat/bufpool.hpp"
#include "varlat/lockmgr.hpp"
#include "varlat/metrics.hpp"

namespace varlat {

// P(rank i) proportional to 1/i^s over ranks 1..n; s = 0 is uniform.
// Returns 0-based rank indices.
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double s);
    std::size_t operator()(std::mt19937_64& rng) const;

private:
    std::vector<double> cdf_;
};

struct ServiceModel {
    enum class Kind { Lognormal, Constant };
    Kind kind = Kind::Lognormal;
    double mu = 10.8;      // log-ns, lognormal
    double sigma = 0.4;
    double constant_ns = 50000;

    std::uint64_t sample(std::mt19937_64& rng) const;
};

struct LogDeviceConfig {
    int devices = 1;  // 1 or 2
    enum class FlushPolicy { Eager, LazyFlush, LazyWrite };
    FlushPolicy flush_policy = FlushPolicy::Eager;
    ServiceModel flush_latency{ServiceModel::Kind::Lognormal, 13.0, 0.5, 400000};
    std::uint64_t block_size = 8192;
    std::uint64_t bytes_per_access = 256;
    std::uint64_t write_ns_per_block = 20000;

    static FlushPolicy parse_policy(const std::string& name);
    static std::string policy_name(FlushPolicy p);
};

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t duration_ns = 1'000'000'000;
    double rate_tps = 500.0;
    bool poisson_arrivals = false;  // default fixed rate with +-10% jitter
    std::uint64_t n_records = 1000;
    double zipf_s = 0.0;
    int accesses_min = 1;
    int accesses_max = 1;
    double write_ratio = 0.5;
    ServiceModel service;
    SchedulerPolicy scheduler;
    bool bufpool_enabled = false;
    BufPoolConfig bufpool;
    ServiceModel bufpool_cs{ServiceModel::Kind::Lognormal, 9.2, 0.5, 10000};
    LogDeviceConfig log;
    std::size_t saturation_bound = 100000;
};

struct SimResult {
    std::vector<std::uint64_t> latencies_ns;  // one per committed txn
    std::vector<std::uint64_t> lock_wait_ns;
    std::vector<std::uint64_t> buf_wait_ns;
    std::vector<std::uint64_t> flush_wait_ns;
    std::vector<std::uint64_t> service_ns;
    std::uint64_t committed = 0;
    std::uint64_t first_birth_ns = 0;
    std::uint64_t last_commit_ns = 0;
    PoolStats pool;

    LatencySummary summary(double p = 2.0) const;
    std::string to_json() const;  // deterministic byte-for-byte under a fixed seed
};

struct SaturationError : std::runtime_error {
    explicit SaturationError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic single-threaded discrete-event run. Throws SaturationError
// when any lock queue exceeds config.saturation_bound.
SimResult run_sim(const SimConfig& config);

// --- single-queue menus (the scheduling-theory harness) -------------------

struct MenuEntry {
    double age = 0.0;      // age at queue arrival
    double arrival = 0.0;  // arrival time at the queue
};

struct RemainingTimeModel {
    enum class Kind { Exponential, Lognormal, Constant };
    Kind kind = Kind::Exponential;
    double a = 1.0;  // mean (exponential) / mu (lognormal) / value (constant)
    double b = 0.0;  // sigma (lognormal)

    double sample(std::mt19937_64& rng) const;
};

struct MenuResult {
    double p_performance = 0.0;  // Monte Carlo mean of the L_p norm
    double std_error = 0.0;
};

// Exclusive-mode single-queue schedule: each completed latency is
// age + wait + remaining. VATS/ETF pick the eldest at each grant; FCFS the
// earliest arrival; Random a uniformly random waiter.
MenuResult run_menu(const std::vector<MenuEntry>& menu, const RemainingTimeModel& model,
                    const SchedulerPolicy& policy, int trials, double p = 2.0,
                    std::uint64_t seed = 1);

// --- bufpool contention driver -------------------------------------------

struct BufPoolSimConfig {
    std::uint64_t seed = 1;
    int threads = 32;
    std::uint64_t accesses_per_thread = 2000;
    std::uint64_t working_set = 4096;
    double zipf_s = 0.6;
    std::uint64_t inter_access_ns = 2000;
    BufPoolConfig pool;
    ServiceModel cs{ServiceModel::Kind::Lognormal, 10.0, 0.6, 20000};
};

struct BufPoolSimResult {
    PoolStats stats;
    LatencySummary wait_summary;
};

BufPoolSimResult run_bufpool_sim(const BufPoolSimConfig& config);

// --- theta auto-tuning ----------------------------------------------------

struct ThetaSweepRow {
    double theta = 0.0;
    LatencySummary summary;
};

struct ThetaSweepResult {
    double best_theta = 0.0;
    std::vector<ThetaSweepRow> table;
};

// Runs the simulation per candidate theta and returns the variance
// minimizer; exact ties keep the larger (cheaper) theta. Throws on an
// empty grid.
ThetaSweepResult tune_theta(const SimConfig& base, const std::vector<double>& grid);

}  // namespace varlat
