#include "varlat/lockmgr.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace varlat {

SchedulerPolicy SchedulerPolicy::parse(const std::string& name) {
    SchedulerPolicy p;
    if (name == "fcfs")
        p.kind = Kind::Fcfs;
    else if (name == "vats")
        p.kind = Kind::Vats;
    else if (name == "etf")
        p.kind = Kind::Etf;
    else if (name == "random")
        p.kind = Kind::Random;
    else
        throw std::invalid_argument("unknown scheduler '" + name + "'");
    return p;
}

std::string SchedulerPolicy::name() const {
    switch (kind) {
        case Kind::Fcfs: return "fcfs";
        case Kind::Vats: return "vats";
        case Kind::Etf: return "etf";
        case Kind::Random: return "random";
    }
    return "?";
}

LockManager::LockManager(SchedulerPolicy policy)
    : policy_(policy), rng_(policy.seed) {
    if (policy_.theta < 0.0 || policy_.theta > 1.0)
        throw std::invalid_argument("vats theta must be in [0,1]");
}

LockManager::Outcome LockManager::request(std::uint64_t record_id, const LockRequest& req,
                                          std::uint64_t now_ns) {
    Queue& q = queues_[record_id];
    auto same_txn = [&](const LockRequest& r) { return r.txn_id == req.txn_id; };
    if (std::any_of(q.holders.begin(), q.holders.end(), same_txn) ||
        std::any_of(q.waiters.begin(), q.waiters.end(), same_txn))
        throw std::invalid_argument("duplicate lock request by txn " +
                                    std::to_string(req.txn_id));

    LockRequest r = req;
    r.queue_arrival_ns = now_ns;
    bool compatible_with_holders = std::all_of(
        q.holders.begin(), q.holders.end(),
        [&](const LockRequest& h) { return lock_compatible(h.mode, r.mode); });
    if (q.holders.empty() || (compatible_with_holders && q.waiters.empty())) {
        q.holders.push_back(r);
        ++granted_;
        return Outcome::Granted;
    }
    q.waiters.push_back(r);
    ++waiting_;
    max_queue_depth_ = std::max(max_queue_depth_, q.waiters.size());
    return Outcome::Enqueued;
}

std::vector<LockRequest> LockManager::release(std::uint64_t record_id, std::uint64_t txn_id,
                                              std::uint64_t now_ns) {
    auto qit = queues_.find(record_id);
    if (qit == queues_.end())
        throw std::invalid_argument("release of unheld lock on record " +
                                    std::to_string(record_id));
    Queue& q = qit->second;
    auto hit = std::find_if(q.holders.begin(), q.holders.end(),
                            [&](const LockRequest& h) { return h.txn_id == txn_id; });
    if (hit == q.holders.end())
        throw std::invalid_argument("release of unheld lock on record " +
                                    std::to_string(record_id));
    q.holders.erase(hit);
    --granted_;

    auto granted = grant_from_queue(q, now_ns);
    if (q.holders.empty() && q.waiters.empty()) queues_.erase(qit);
    return granted;
}

std::vector<LockRequest> LockManager::grant_from_queue(Queue& q, std::uint64_t now_ns) {
    std::vector<LockRequest> granted;
    if (q.waiters.empty()) return granted;

    bool eldest_first;
    switch (policy_.kind) {
        case SchedulerPolicy::Kind::Fcfs:
            eldest_first = false;
            break;
        case SchedulerPolicy::Kind::Etf:
        case SchedulerPolicy::Kind::Random:
            eldest_first = true;
            break;
        case SchedulerPolicy::Kind::Vats:
            eldest_first = wait_lock_ratio() > policy_.theta;
            break;
    }

    auto grantable = [&](const LockRequest& w) {
        return std::all_of(q.holders.begin(), q.holders.end(), [&](const LockRequest& h) {
            return lock_compatible(h.mode, w.mode);
        });
    };
    auto take = [&](std::size_t idx) {
        granted.push_back(q.waiters[idx]);
        q.holders.push_back(q.waiters[idx]);
        ++granted_;
        --waiting_;
    };

    std::vector<std::size_t> taken;
    if (!eldest_first && policy_.kind != SchedulerPolicy::Kind::Random) {
        // FCFS: queue order is arrival order; grant the front, then
        // consecutive compatible waiters, stopping at the first blocked one.
        std::size_t i = 0;
        while (i < q.waiters.size() && grantable(q.waiters[i])) {
            take(i);
            taken.push_back(i);
            ++i;
        }
    } else {
        std::vector<std::size_t> order(q.waiters.size());
        std::iota(order.begin(), order.end(), 0);
        if (policy_.kind == SchedulerPolicy::Kind::Random) {
            std::shuffle(order.begin(), order.end(), rng_);
        } else {
            // Decreasing age since birth; ties by earlier queue arrival,
            // then txn id.
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const LockRequest& x = q.waiters[a];
                const LockRequest& y = q.waiters[b];
                std::uint64_t age_x = now_ns - x.txn_birth_ns;
                std::uint64_t age_y = now_ns - y.txn_birth_ns;
                if (age_x != age_y) return age_x > age_y;
                if (x.queue_arrival_ns != y.queue_arrival_ns)
                    return x.queue_arrival_ns < y.queue_arrival_ns;
                return x.txn_id < y.txn_id;
            });
        }
        // Grant the first candidate, then every other compatible waiter in
        // order, skipping incompatible ones.
        for (std::size_t idx : order) {
            if (grantable(q.waiters[idx])) {
                take(idx);
                taken.push_back(idx);
            }
        }
    }

    std::sort(taken.begin(), taken.end());
    for (auto it = taken.rbegin(); it != taken.rend(); ++it)
        q.waiters.erase(q.waiters.begin() + static_cast<std::ptrdiff_t>(*it));
    return granted;
}

double LockManager::wait_lock_ratio() const {
    std::size_t total = waiting_ + granted_;
    return total == 0 ? 0.0 : static_cast<double>(waiting_) / static_cast<double>(total);
}

const std::vector<LockRequest>& LockManager::holders(std::uint64_t record_id) const {
    static const std::vector<LockRequest> empty;
    auto it = queues_.find(record_id);
    return it == queues_.end() ? empty : it->second.holders;
}

const std::vector<LockRequest>& LockManager::waiters(std::uint64_t record_id) const {
    static const std::vector<LockRequest> empty;
    auto it = queues_.find(record_id);
    return it == queues_.end() ? empty : it->second.waiters;
}

}  // namespace varlat
