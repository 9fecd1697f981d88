#include "varlat/live.hpp"

#include <condition_variable>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace varlat {

FunctionRegistry make_live_registry(int aux_probes) {
    FunctionRegistry reg;
    reg.add(LiveFuncs::kDispatch, "dispatch", true);
    reg.add(LiveFuncs::kLockWait, "lock_wait");
    reg.add(LiveFuncs::kBufAccess, "buf_access");
    reg.add(LiveFuncs::kMakeYoung, "make_young");
    reg.add(LiveFuncs::kService, "service");
    reg.add(LiveFuncs::kLogFlush, "log_flush");
    for (int i = 0; i < aux_probes; ++i)
        reg.add(LiveFuncs::kAuxBase + static_cast<FuncId>(i), "aux_" + std::to_string(i));
    return reg;
}

std::vector<FuncId> live_children_of(FuncId func, int aux_probes) {
    if (func == LiveFuncs::kDispatch)
        return {LiveFuncs::kLockWait, LiveFuncs::kBufAccess, LiveFuncs::kService,
                LiveFuncs::kLogFlush};
    if (func == LiveFuncs::kBufAccess) return {LiveFuncs::kMakeYoung};
    if (func == LiveFuncs::kService) {
        std::vector<FuncId> kids;
        for (int i = 0; i < aux_probes; ++i)
            kids.push_back(LiveFuncs::kAuxBase + static_cast<FuncId>(i));
        return kids;
    }
    return {};
}

namespace {

void spin_for(std::uint64_t ns) {
    std::uint64_t start = Collector::now_ns();
    while (Collector::now_ns() - start < ns) {
    }
}

// Coarse-lock live lock table: the real threads block on a condition
// variable until the simulated lock manager grants them.
class LiveLockTable {
public:
    explicit LiveLockTable(SchedulerPolicy policy) : lm_(policy) {}

    void acquire(std::uint64_t txn_id, std::uint64_t record, LockMode mode,
                 std::uint64_t birth_ns) {
        std::unique_lock<std::mutex> g(mu_);
        LockRequest req;
        req.txn_id = txn_id;
        req.mode = mode;
        req.txn_birth_ns = birth_ns;
        if (lm_.request(record, req, Collector::now_ns()) == LockManager::Outcome::Granted)
            return;
        granted_[txn_id] = false;
        cv_.wait(g, [&] { return granted_[txn_id]; });
        granted_.erase(txn_id);
    }

    void release_all(std::uint64_t txn_id, const std::vector<std::uint64_t>& records) {
        std::lock_guard<std::mutex> g(mu_);
        std::uint64_t now = Collector::now_ns();
        for (std::uint64_t rec : records)
            for (const LockRequest& w : lm_.release(rec, txn_id, now))
                granted_[w.txn_id] = true;
        cv_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    LockManager lm_;
    std::map<std::uint64_t, bool> granted_;
};

struct LiveTxn {
    std::vector<std::pair<std::uint64_t, LockMode>> accesses;  // ascending record
    std::vector<std::uint64_t> service_ns;
    std::uint64_t flush_ns = 0;
};

LiveTxn plan_txn(const LiveConfig& cfg, const ZipfSampler& zipf, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int n_acc = cfg.accesses_min +
                (cfg.accesses_max > cfg.accesses_min
                     ? static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                    cfg.accesses_max - cfg.accesses_min + 1))
                     : 0);
    std::map<std::uint64_t, LockMode> wanted;
    for (int i = 0; i < n_acc; ++i) {
        std::uint64_t rec = zipf(rng);
        LockMode m = unit(rng) < cfg.write_ratio ? LockMode::Exclusive : LockMode::Shared;
        auto [it, fresh] = wanted.emplace(rec, m);
        if (!fresh && m == LockMode::Exclusive) it->second = LockMode::Exclusive;
    }
    LiveTxn txn;
    for (const auto& [rec, mode] : wanted) {
        txn.accesses.emplace_back(rec, mode);
        txn.service_ns.push_back(cfg.service.sample(rng));
    }
    txn.flush_ns = cfg.flush.sample(rng);
    return txn;
}

}  // namespace

LiveResult run_live(const LiveConfig& cfg, const ProfileSet& profile_set) {
    FunctionRegistry registry = make_live_registry(cfg.aux_probes);
    Collector collector(registry, profile_set, cfg.buffer_capacity);
    LiveLockTable locks(cfg.scheduler);
    ZipfSampler zipf(cfg.n_records, cfg.zipf_s);

    // A small shared region stands in for the buffer pool's list lock; the
    // holder spins while everyone else queues.
    std::mutex pool_mu;

    std::vector<std::thread> workers;
    std::uint64_t t0 = Collector::now_ns();
    for (int th = 0; th < cfg.threads; ++th) {
        ThreadBuffer& buf = collector.attach_thread();
        workers.emplace_back([&, th, &buf = buf] {
            std::mt19937_64 rng(cfg.seed * 1000003ull + static_cast<std::uint64_t>(th));
            for (std::uint64_t n = 0; n < cfg.txns_per_thread; ++n) {
                std::uint64_t txn_id =
                    static_cast<std::uint64_t>(th) * cfg.txns_per_thread + n;
                LiveTxn txn = plan_txn(cfg, zipf, rng);
                std::uint64_t birth = Collector::now_ns();
                ScopedProbe dispatch(buf, LiveFuncs::kDispatch);
                std::vector<std::uint64_t> held;
                for (std::size_t i = 0; i < txn.accesses.size(); ++i) {
                    auto [rec, mode] = txn.accesses[i];
                    {
                        ScopedProbe p(buf, LiveFuncs::kLockWait);
                        locks.acquire(txn_id, rec, mode, birth);
                        held.push_back(rec);
                    }
                    {
                        ScopedProbe p(buf, LiveFuncs::kBufAccess);
                        std::lock_guard<std::mutex> g(pool_mu);
                        ScopedProbe young(buf, LiveFuncs::kMakeYoung);
                        spin_for(2000);
                    }
                    {
                        ScopedProbe p(buf, LiveFuncs::kService);
                        // Aux probes fire once per txn so their fixed cost stays
                        // small next to the spin itself.
                        if (i == 0)
                            for (int a = 0; a < cfg.aux_probes; ++a) {
                                ScopedProbe aux(buf,
                                                LiveFuncs::kAuxBase + static_cast<FuncId>(a));
                            }
                        spin_for(txn.service_ns[i]);
                    }
                }
                {
                    ScopedProbe p(buf, LiveFuncs::kLogFlush);
                    spin_for(txn.flush_ns);
                }
                locks.release_all(txn_id, held);
            }
        });
    }
    for (auto& w : workers) w.join();

    LiveResult res;
    res.wall_ns = Collector::now_ns() - t0;
    res.committed = static_cast<std::uint64_t>(cfg.threads) * cfg.txns_per_thread;
    std::ostringstream trace;
    res.events_flushed = collector.flush_traces(trace);
    res.trace = trace.str();
    std::ostringstream regs;
    registry.save(regs);
    res.registry = regs.str();
    return res;
}

std::vector<const Invocation*> LiveRunner::run(const ProfileSet& profile_set) {
    registry_ = make_live_registry(config_.aux_probes);
    LiveResult res = run_live(config_, profile_set);
    std::istringstream in(res.trace);
    auto events = decode_events(in);
    forests_ = build_invocations(events, registry_);
    return root_samples(forests_, registry_);
}

}  // namespace varlat
