#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>
#include <vector>

namespace varlat {

struct BufPoolConfig {
    std::size_t capacity = 64;
    double old_fraction = 3.0 / 8.0;
    enum class Mode { Baseline, Llu };
    Mode mode = Mode::Baseline;
    std::uint64_t spin_timeout_ns = 10000;  // 0.01 ms
};

struct PageAccessResult {
    bool hit = false;
    bool deferred = false;        // LLU: make-young pushed to the backlog
    std::uint64_t wait_ns = 0;    // list-lock wait charged to this access
};

struct PoolStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t make_young = 0;      // completed young-head moves (incl. drained)
    std::uint64_t deferred = 0;        // LLU timeouts
    std::uint64_t drained = 0;         // backlog pages moved on later acquisitions
    std::vector<std::uint64_t> wait_ns_samples;  // one per list-lock attempt
    std::uint64_t max_cs_ns = 0;

    double hit_rate() const {
        std::uint64_t n = hits + misses;
        return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
    }
};

// Young/old split LRU pool for the discrete-event simulation. The list
// lock is modeled as a busy-until horizon; the caller supplies the
// critical-section duration it would hold the lock for, so the pool itself
// draws no randomness.
class BufferPool {
public:
    explicit BufferPool(BufPoolConfig config);

    // A hit in young touches no list state. A hit in old requires a
    // make-young under the list lock: baseline waits out the lock, LLU
    // spins for at most spin_timeout_ns and defers to the caller thread's
    // backlog on timeout. A miss evicts the old tail when full and inserts
    // at the old head.
    PageAccessResult access(std::uint64_t page_id, std::uint64_t now_ns,
                            std::uint64_t thread_id, std::uint64_t cs_ns);

    bool resident(std::uint64_t page_id) const { return frames_.count(page_id) != 0; }
    std::size_t resident_count() const { return frames_.size(); }
    std::size_t young_size() const { return young_.size(); }
    std::size_t old_size() const { return old_.size(); }
    std::size_t backlog_size(std::uint64_t thread_id) const;

    const PoolStats& stats() const { return stats_; }
    const BufPoolConfig& config() const { return config_; }

    // Exposed for direct-drive tests; normally invoked internally on a
    // successful lock acquisition. Returns pages moved.
    std::size_t drain_backlog(std::uint64_t thread_id);

private:
    enum class ListId { Young, Old };
    struct Frame {
        std::list<std::uint64_t>::iterator pos;
        ListId list;
    };

    void make_young_locked(std::uint64_t page_id);
    void rebalance();
    std::size_t old_target() const;

    BufPoolConfig config_;
    std::list<std::uint64_t> young_;  // head = most recent
    std::list<std::uint64_t> old_;
    std::unordered_map<std::uint64_t, Frame> frames_;
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> backlogs_;
    std::uint64_t lock_free_at_ns_ = 0;
    PoolStats stats_;
};

}  // namespace varlat
