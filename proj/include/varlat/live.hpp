#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varlat/collector.hpp"
#include "varlat/refine.hpp"
#include "varlat/workload.hpp"

namespace varlat {

// Well-known function ids of the live testbed. dispatch is the root; the
// phases are its children; make_young nests under buf_access. aux probes
// (ids kAuxBase..) are no-op children of service used for overhead runs.
struct LiveFuncs {
    static constexpr FuncId kDispatch = 1;
    static constexpr FuncId kLockWait = 2;
    static constexpr FuncId kBufAccess = 3;
    static constexpr FuncId kMakeYoung = 4;
    static constexpr FuncId kService = 5;
    static constexpr FuncId kLogFlush = 6;
    static constexpr FuncId kAuxBase = 100;
};

struct LiveConfig {
    std::uint64_t seed = 1;
    int threads = 16;
    std::uint64_t txns_per_thread = 200;
    std::uint64_t n_records = 100;
    double zipf_s = 1.0;
    int accesses_min = 2;
    int accesses_max = 6;
    double write_ratio = 1.0;
    ServiceModel service{ServiceModel::Kind::Lognormal, 10.8, 0.25, 50000};
    ServiceModel flush{ServiceModel::Kind::Lognormal, 9.9, 0.15, 20000};
    SchedulerPolicy scheduler;  // FCFS by default
    int aux_probes = 0;         // extra per-txn probe pairs inside service
    std::size_t buffer_capacity = Collector::kDefaultBufferCapacity;
};

struct LiveResult {
    std::uint64_t committed = 0;
    std::uint64_t wall_ns = 0;
    std::size_t events_flushed = 0;
    std::string trace;     // varlat-trace v1 text
    std::string registry;  // varlat-registry v1 text

    double throughput_tps() const {
        return wall_ns == 0 ? 0.0
                            : static_cast<double>(committed) * 1e9 /
                                  static_cast<double>(wall_ns);
    }
};

FunctionRegistry make_live_registry(int aux_probes);
std::vector<FuncId> live_children_of(FuncId func, int aux_probes);

// Executes the transaction loop on real worker threads with probes around
// the named phases, then flushes the collector.
LiveResult run_live(const LiveConfig& config, const ProfileSet& profile_set);

// WorkloadRunner over the live testbed, for iterative refinement.
class LiveRunner : public WorkloadRunner {
public:
    explicit LiveRunner(LiveConfig config) : config_(config) {}

    std::vector<const Invocation*> run(const ProfileSet& profile_set) override;
    std::vector<FuncId> children_of(FuncId func) const override {
        return live_children_of(func, config_.aux_probes);
    }

private:
    LiveConfig config_;
    std::vector<ThreadForest> forests_;
    FunctionRegistry registry_ = make_live_registry(0);
};

}  // namespace varlat
