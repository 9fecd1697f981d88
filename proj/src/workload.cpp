#include "varlat/workload.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace varlat {

ZipfSampler::ZipfSampler(std::size_t n, double s) {
    if (n < 1) throw std::invalid_argument("zipf: n must be >= 1");
    if (s < 0.0) throw std::invalid_argument("zipf: s must be >= 0");
    cdf_.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += 1.0 / std::pow(static_cast<double>(i + 1), s);
        cdf_[i] = acc;
    }
    for (double& c : cdf_) c /= acc;
}

std::size_t ZipfSampler::operator()(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
}

std::uint64_t ServiceModel::sample(std::mt19937_64& rng) const {
    switch (kind) {
        case Kind::Constant:
            return static_cast<std::uint64_t>(constant_ns);
        case Kind::Lognormal: {
            double v = std::lognormal_distribution<double>(mu, sigma)(rng);
            return static_cast<std::uint64_t>(v);
        }
    }
    return 0;
}

LogDeviceConfig::FlushPolicy LogDeviceConfig::parse_policy(const std::string& name) {
    if (name == "eager") return FlushPolicy::Eager;
    if (name == "lazy_flush") return FlushPolicy::LazyFlush;
    if (name == "lazy_write") return FlushPolicy::LazyWrite;
    throw std::invalid_argument("unknown flush policy '" + name + "'");
}

std::string LogDeviceConfig::policy_name(FlushPolicy p) {
    switch (p) {
        case FlushPolicy::Eager: return "eager";
        case FlushPolicy::LazyFlush: return "lazy_flush";
        case FlushPolicy::LazyWrite: return "lazy_write";
    }
    return "?";
}

LatencySummary SimResult::summary(double p) const {
    std::vector<double> xs(latencies_ns.begin(), latencies_ns.end());
    return summarize(xs, p);
}

namespace {

struct AccessPlan {
    std::uint64_t record = 0;
    LockMode mode = LockMode::Exclusive;
    std::uint64_t service_ns = 0;
    std::uint64_t buf_cs_ns = 0;
};

struct TxnPlan {
    std::uint64_t birth_ns = 0;
    std::vector<AccessPlan> accesses;  // ascending record order, deduped
    std::uint64_t write_ns = 0;
    std::uint64_t flush_ns = 0;
};

std::vector<TxnPlan> generate_txns(const SimConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::mt19937_64 perm_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    // Fixed rank -> record permutation so hot records land at arbitrary
    // positions in the ordered acquisition sequence.
    std::vector<std::uint64_t> rank_to_record(cfg.n_records);
    for (std::uint64_t i = 0; i < cfg.n_records; ++i) rank_to_record[i] = i;
    std::shuffle(rank_to_record.begin(), rank_to_record.end(), perm_rng);

    ZipfSampler zipf(cfg.n_records, cfg.zipf_s);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double base_gap = 1e9 / cfg.rate_tps;

    std::vector<TxnPlan> txns;
    double t = 0.0;
    while (true) {
        double gap = cfg.poisson_arrivals
                         ? -base_gap * std::log(1.0 - unit(rng))
                         : base_gap * (0.9 + 0.2 * unit(rng));
        t += gap;
        if (t >= static_cast<double>(cfg.duration_ns)) break;

        TxnPlan txn;
        txn.birth_ns = static_cast<std::uint64_t>(t);
        int n_acc = cfg.accesses_min +
                    (cfg.accesses_max > cfg.accesses_min
                         ? static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                        cfg.accesses_max - cfg.accesses_min + 1))
                         : 0);
        std::map<std::uint64_t, LockMode> wanted;
        for (int i = 0; i < n_acc; ++i) {
            std::uint64_t rec = rank_to_record[zipf(rng)];
            LockMode m = unit(rng) < cfg.write_ratio ? LockMode::Exclusive : LockMode::Shared;
            auto [it, fresh] = wanted.emplace(rec, m);
            if (!fresh && m == LockMode::Exclusive) it->second = LockMode::Exclusive;
        }
        for (const auto& [rec, mode] : wanted) {
            AccessPlan a;
            a.record = rec;
            a.mode = mode;
            a.service_ns = cfg.service.sample(rng);
            a.buf_cs_ns = cfg.bufpool_cs.sample(rng);
            txn.accesses.push_back(a);
        }
        std::uint64_t log_bytes =
            cfg.log.bytes_per_access * static_cast<std::uint64_t>(n_acc);
        std::uint64_t blocks =
            std::max<std::uint64_t>(1, (log_bytes + cfg.log.block_size - 1) / cfg.log.block_size);
        txn.write_ns = blocks * cfg.log.write_ns_per_block;
        txn.flush_ns = cfg.log.flush_latency.sample(rng);
        txns.push_back(std::move(txn));
    }
    return txns;
}

struct LogDevice {
    std::uint64_t busy_until = 0;
    std::deque<std::uint64_t> completions;

    std::size_t waiters(std::uint64_t now) {
        while (!completions.empty() && completions.front() <= now) completions.pop_front();
        return completions.size();
    }
};

class LogSubsystem {
public:
    explicit LogSubsystem(const LogDeviceConfig& cfg)
        : cfg_(cfg), devices_(static_cast<std::size_t>(cfg.devices)) {
        if (cfg.devices != 1 && cfg.devices != 2)
            throw std::invalid_argument("log devices must be 1 or 2");
    }

    // Wait on the commit path for this txn's log work.
    std::uint64_t commit_wait(std::uint64_t now, std::uint64_t write_ns,
                              std::uint64_t flush_ns) {
        switch (cfg_.flush_policy) {
            case LogDeviceConfig::FlushPolicy::LazyWrite:
                return 0;
            case LogDeviceConfig::FlushPolicy::LazyFlush:
                return write_ns;
            case LogDeviceConfig::FlushPolicy::Eager:
                break;
        }
        // Pick a free device; when none is free, join the one with fewer
        // waiters.
        std::size_t pick = 0;
        bool any_free = false;
        for (std::size_t i = 0; i < devices_.size(); ++i) {
            if (devices_[i].busy_until <= now) {
                if (!any_free || devices_[i].busy_until < devices_[pick].busy_until) pick = i;
                any_free = true;
            }
        }
        if (!any_free) {
            pick = 0;
            for (std::size_t i = 1; i < devices_.size(); ++i)
                if (devices_[i].waiters(now) < devices_[pick].waiters(now)) pick = i;
        }
        LogDevice& dev = devices_[pick];
        std::uint64_t start = std::max(now, dev.busy_until);
        std::uint64_t completion = start + write_ns + flush_ns;
        dev.busy_until = completion;
        dev.completions.push_back(completion);
        return completion - now;
    }

private:
    LogDeviceConfig cfg_;
    std::vector<LogDevice> devices_;
};

struct TxnState {
    std::size_t next_access = 0;
    bool holding_current = false;  // lock for accesses[next_access] already granted
    std::uint64_t wait_start = 0;
    std::uint64_t lock_wait = 0;
    std::uint64_t buf_wait = 0;
    std::uint64_t flush_wait = 0;
    std::uint64_t service = 0;
    bool committed = false;
};

struct Event {
    std::uint64_t time;
    std::uint64_t seq;
    std::size_t txn;
    bool operator>(const Event& o) const {
        return time != o.time ? time > o.time : seq > o.seq;
    }
};

}  // namespace

SimResult run_sim(const SimConfig& cfg) {
    if (cfg.rate_tps <= 0) throw std::invalid_argument("rate must be > 0");
    auto txns = generate_txns(cfg);
    std::vector<TxnState> states(txns.size());

    LockManager lm(cfg.scheduler);
    BufferPool pool(cfg.bufpool);
    LogSubsystem log(cfg.log);

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> heap;
    std::uint64_t seq = 0;
    for (std::size_t i = 0; i < txns.size(); ++i)
        heap.push(Event{txns[i].birth_ns, seq++, i});

    SimResult res;
    res.latencies_ns.resize(txns.size());
    res.lock_wait_ns.resize(txns.size());
    res.buf_wait_ns.resize(txns.size());
    res.flush_wait_ns.resize(txns.size());
    res.service_ns.resize(txns.size());
    if (!txns.empty()) res.first_birth_ns = txns.front().birth_ns;

    while (!heap.empty()) {
        Event ev = heap.top();
        heap.pop();
        std::size_t i = ev.txn;
        TxnPlan& plan = txns[i];
        TxnState& st = states[i];
        std::uint64_t t = ev.time;

        if (st.next_access < plan.accesses.size()) {
            const AccessPlan& a = plan.accesses[st.next_access];
            if (!st.holding_current) {
                LockRequest req;
                req.txn_id = i;
                req.mode = a.mode;
                req.txn_birth_ns = plan.birth_ns;
                auto outcome = lm.request(a.record, req, t);
                if (lm.max_queue_depth() > cfg.saturation_bound)
                    throw SaturationError("lock queue exceeded " +
                                          std::to_string(cfg.saturation_bound) + " waiters");
                if (outcome == LockManager::Outcome::Enqueued) {
                    st.wait_start = t;
                    continue;  // resumed by the grant at release time
                }
            }
            st.holding_current = false;
            if (cfg.bufpool_enabled) {
                auto pr = pool.access(a.record, t, i, a.buf_cs_ns);
                st.buf_wait += pr.wait_ns;
                t += pr.wait_ns;
            }
            st.service += a.service_ns;
            t += a.service_ns;
            ++st.next_access;
            heap.push(Event{t, seq++, i});
            continue;
        }

        // All accesses done: log work, then commit and release (2PL).
        std::uint64_t fw = log.commit_wait(t, plan.write_ns, plan.flush_ns);
        st.flush_wait += fw;
        t += fw;
        for (const AccessPlan& a : plan.accesses) {
            for (const LockRequest& g : lm.release(a.record, i, t)) {
                TxnState& w = states[g.txn_id];
                w.lock_wait += t - w.wait_start;
                w.holding_current = true;
                heap.push(Event{t, seq++, g.txn_id});
            }
        }
        st.committed = true;
        res.latencies_ns[i] = t - plan.birth_ns;
        res.lock_wait_ns[i] = st.lock_wait;
        res.buf_wait_ns[i] = st.buf_wait;
        res.flush_wait_ns[i] = st.flush_wait;
        res.service_ns[i] = st.service;
        ++res.committed;
        res.last_commit_ns = std::max(res.last_commit_ns, t);
    }

    res.pool = pool.stats();
    return res;
}

std::string SimResult::to_json() const {
    nlohmann::json j;
    j["committed"] = committed;
    j["first_birth_ns"] = first_birth_ns;
    j["last_commit_ns"] = last_commit_ns;
    j["latencies_ns"] = latencies_ns;
    j["phase_breakdown"] = {
        {"lock_wait_ns", lock_wait_ns},
        {"buf_wait_ns", buf_wait_ns},
        {"flush_wait_ns", flush_wait_ns},
        {"service_ns", service_ns},
    };
    LatencySummary s = summary();
    j["summary"] = {
        {"n", s.n},
        {"mean_ns", s.mean_ns},
        {"variance_ns2", s.variance_ns2},
        {"p99_ns", s.p99_ns},
        {"l2_norm", s.lp_value},
    };
    j["pool"] = {
        {"hits", pool.hits},
        {"misses", pool.misses},
        {"make_young", pool.make_young},
        {"deferred", pool.deferred},
        {"drained", pool.drained},
    };
    return j.dump(2);
}

double RemainingTimeModel::sample(std::mt19937_64& rng) const {
    switch (kind) {
        case Kind::Exponential:
            return std::exponential_distribution<double>(1.0 / a)(rng);
        case Kind::Lognormal:
            return std::lognormal_distribution<double>(a, b)(rng);
        case Kind::Constant:
            return a;
    }
    return 0.0;
}

MenuResult run_menu(const std::vector<MenuEntry>& menu, const RemainingTimeModel& model,
                    const SchedulerPolicy& policy, int trials, double p,
                    std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("run_menu: trials must be >= 1");
    std::mt19937_64 rng(seed);

    std::vector<std::size_t> by_arrival(menu.size());
    for (std::size_t i = 0; i < menu.size(); ++i) by_arrival[i] = i;
    std::stable_sort(by_arrival.begin(), by_arrival.end(), [&](std::size_t a, std::size_t b) {
        return menu[a].arrival < menu[b].arrival;
    });

    std::vector<double> lp_values;
    lp_values.reserve(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> remaining(menu.size());
        for (std::size_t i = 0; i < menu.size(); ++i) remaining[i] = model.sample(rng);

        std::vector<double> latencies;
        std::vector<std::size_t> queue;
        std::size_t next_arrival = 0;
        double t = 0.0;
        if (!by_arrival.empty()) t = menu[by_arrival[0]].arrival;
        while (latencies.size() < menu.size()) {
            while (next_arrival < by_arrival.size() &&
                   menu[by_arrival[next_arrival]].arrival <= t)
                queue.push_back(by_arrival[next_arrival++]);
            if (queue.empty()) {
                t = menu[by_arrival[next_arrival]].arrival;
                continue;
            }
            std::size_t pick_pos = 0;
            switch (policy.kind) {
                case SchedulerPolicy::Kind::Fcfs:
                    for (std::size_t q = 1; q < queue.size(); ++q)
                        if (menu[queue[q]].arrival < menu[queue[pick_pos]].arrival) pick_pos = q;
                    break;
                case SchedulerPolicy::Kind::Vats:
                case SchedulerPolicy::Kind::Etf:
                    // Ages grow uniformly while waiting, so the eldest is
                    // the max of age - arrival.
                    for (std::size_t q = 1; q < queue.size(); ++q) {
                        double cur = menu[queue[q]].age - menu[queue[q]].arrival;
                        double best = menu[queue[pick_pos]].age - menu[queue[pick_pos]].arrival;
                        if (cur > best) pick_pos = q;
                    }
                    break;
                case SchedulerPolicy::Kind::Random:
                    pick_pos = std::uniform_int_distribution<std::size_t>(0, queue.size() - 1)(rng);
                    break;
            }
            std::size_t i = queue[pick_pos];
            queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(pick_pos));
            latencies.push_back(menu[i].age + (t - menu[i].arrival) + remaining[i]);
            t += remaining[i];
        }
        lp_values.push_back(lp_norm(latencies, p));
    }

    MenuResult out;
    CoMoment acc(1);
    for (double v : lp_values) acc.add({v});
    out.p_performance = acc.mean(0);
    out.std_error = trials > 1 ? std::sqrt(acc.variance(0) / static_cast<double>(trials)) : 0.0;
    return out;
}

BufPoolSimResult run_bufpool_sim(const BufPoolSimConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    ZipfSampler zipf(cfg.working_set, cfg.zipf_s);

    // Pre-generated per-thread schedules so baseline and LLU replay the
    // same accesses.
    struct Access {
        std::uint64_t gap;
        std::uint64_t page;
        std::uint64_t cs;
    };
    std::vector<std::vector<Access>> schedule(static_cast<std::size_t>(cfg.threads));
    for (auto& th : schedule) {
        th.reserve(cfg.accesses_per_thread);
        for (std::uint64_t i = 0; i < cfg.accesses_per_thread; ++i) {
            Access a;
            a.gap = 1 + rng() % (2 * cfg.inter_access_ns);
            a.page = zipf(rng);
            a.cs = cfg.cs.sample(rng);
            th.push_back(a);
        }
    }

    BufferPool pool(cfg.pool);
    struct Cursor {
        std::uint64_t time;
        std::size_t thread;
        std::size_t idx;
        bool operator>(const Cursor& o) const {
            if (time != o.time) return time > o.time;
            return thread > o.thread;
        }
    };
    std::priority_queue<Cursor, std::vector<Cursor>, std::greater<Cursor>> heap;
    for (std::size_t th = 0; th < schedule.size(); ++th)
        if (!schedule[th].empty()) heap.push(Cursor{schedule[th][0].gap, th, 0});

    while (!heap.empty()) {
        Cursor c = heap.top();
        heap.pop();
        const Access& a = schedule[c.thread][c.idx];
        auto r = pool.access(a.page, c.time, c.thread, a.cs);
        std::size_t next = c.idx + 1;
        if (next < schedule[c.thread].size())
            heap.push(Cursor{c.time + r.wait_ns + schedule[c.thread][next].gap, c.thread, next});
    }

    BufPoolSimResult out;
    out.stats = pool.stats();
    std::vector<double> waits(out.stats.wait_ns_samples.begin(),
                              out.stats.wait_ns_samples.end());
    out.wait_summary = waits.empty() ? LatencySummary{} : summarize(waits);
    return out;
}

ThetaSweepResult tune_theta(const SimConfig& base, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("tune_theta: empty grid");
    std::vector<double> sorted(grid);
    std::sort(sorted.begin(), sorted.end());

    ThetaSweepResult out;
    bool first = true;
    double best_var = 0.0;
    for (double theta : sorted) {
        SimConfig cfg = base;
        cfg.scheduler.kind = SchedulerPolicy::Kind::Vats;
        cfg.scheduler.theta = theta;
        LatencySummary s = run_sim(cfg).summary();
        out.table.push_back(ThetaSweepRow{theta, s});
        // <= keeps the larger theta on exact ties (cheaper activation).
        if (first || s.variance_ns2 <= best_var) {
            best_var = s.variance_ns2;
            out.best_theta = theta;
            first = false;
        }
    }
    return out;
}

}  // namespace varlat
