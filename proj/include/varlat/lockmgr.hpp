#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace varlat {

enum class LockMode : std::uint8_t { Shared, Exclusive };

// S+S is the only compatible pair.
inline bool lock_compatible(LockMode a, LockMode b) {
    return a == LockMode::Shared && b == LockMode::Shared;
}

struct LockRequest {
    std::uint64_t txn_id = 0;
    LockMode mode = LockMode::Exclusive;
    std::uint64_t queue_arrival_ns = 0;  // arrival at this queue
    std::uint64_t txn_birth_ns = 0;      // age basis
};

struct SchedulerPolicy {
    enum class Kind { Fcfs, Vats, Etf, Random };
    Kind kind = Kind::Fcfs;
    double theta = 0.5;        // VATS wait-lock-ratio activation threshold
    std::uint64_t seed = 0;    // Random order seed

    static SchedulerPolicy parse(const std::string& name);  // throws on unknown
    std::string name() const;
};

class LockManager {
public:
    explicit LockManager(SchedulerPolicy policy);

    enum class Outcome { Granted, Enqueued };

    // Grants immediately iff the queue has no holders, or the request is
    // compatible with every holder and no one is waiting. An arriving
    // request never jumps a non-empty wait queue, under every policy.
    // Throws on a duplicate request by the same txn on the same record.
    Outcome request(std::uint64_t record_id, const LockRequest& req, std::uint64_t now_ns);

    // Removes the txn's granted lock and applies the policy's grant rule.
    // Returns the newly granted requests in grant order. Throws if the txn
    // holds no lock on the record.
    std::vector<LockRequest> release(std::uint64_t record_id, std::uint64_t txn_id,
                                     std::uint64_t now_ns);

    // waiting / (waiting + granted) over the whole manager; 0 when empty.
    double wait_lock_ratio() const;

    std::size_t waiting_count() const { return waiting_; }
    std::size_t granted_count() const { return granted_; }
    std::size_t max_queue_depth() const { return max_queue_depth_; }

    const std::vector<LockRequest>& holders(std::uint64_t record_id) const;
    const std::vector<LockRequest>& waiters(std::uint64_t record_id) const;

    const SchedulerPolicy& policy() const { return policy_; }

private:
    struct Queue {
        std::vector<LockRequest> holders;
        std::vector<LockRequest> waiters;
    };

    std::vector<LockRequest> grant_from_queue(Queue& q, std::uint64_t now_ns);

    SchedulerPolicy policy_;
    std::unordered_map<std::uint64_t, Queue> queues_;
    std::size_t waiting_ = 0;
    std::size_t granted_ = 0;
    std::size_t max_queue_depth_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace varlat
