#include "varlat/bufpool.hpp"

#include <algorithm>
#include <cmath>

namespace varlat {

BufferPool::BufferPool(BufPoolConfig config) : config_(config) {}

std::size_t BufferPool::old_target() const {
    return static_cast<std::size_t>(
        std::floor(config_.old_fraction * static_cast<double>(frames_.size())));
}

void BufferPool::rebalance() {
    std::size_t target = old_target();
    while (old_.size() > target) {
        // Old head is the most recently demoted or inserted page.
        std::uint64_t p = old_.front();
        old_.pop_front();
        young_.push_back(p);
        frames_[p] = {std::prev(young_.end()), ListId::Young};
    }
    while (old_.size() < target && !young_.empty()) {
        std::uint64_t p = young_.back();
        young_.pop_back();
        old_.push_front(p);
        frames_[p] = {old_.begin(), ListId::Old};
    }
}

void BufferPool::make_young_locked(std::uint64_t page_id) {
    auto it = frames_.find(page_id);
    if (it == frames_.end()) return;  // evicted since deferral
    if (it->second.list == ListId::Young)
        young_.erase(it->second.pos);
    else
        old_.erase(it->second.pos);
    young_.push_front(page_id);
    it->second = {young_.begin(), ListId::Young};
    rebalance();
    ++stats_.make_young;
}

std::size_t BufferPool::drain_backlog(std::uint64_t thread_id) {
    auto it = backlogs_.find(thread_id);
    if (it == backlogs_.end()) return 0;
    std::size_t moved = 0;
    for (std::uint64_t p : it->second) {
        if (frames_.count(p)) {
            make_young_locked(p);
            ++moved;
        }
    }
    stats_.drained += moved;
    it->second.clear();
    return moved;
}

PageAccessResult BufferPool::access(std::uint64_t page_id, std::uint64_t now_ns,
                                    std::uint64_t thread_id, std::uint64_t cs_ns) {
    PageAccessResult res;
    auto it = frames_.find(page_id);

    if (it == frames_.end()) {
        ++stats_.misses;
        if (frames_.size() >= config_.capacity) {
            // Victims come from the old tail; tiny pools whose old target
            // is zero fall back to the young tail.
            std::uint64_t victim;
            if (!old_.empty()) {
                victim = old_.back();
                old_.pop_back();
            } else {
                victim = young_.back();
                young_.pop_back();
            }
            frames_.erase(victim);
        }
        old_.push_front(page_id);
        frames_[page_id] = {old_.begin(), ListId::Old};
        rebalance();
        return res;
    }

    res.hit = true;
    ++stats_.hits;
    if (it->second.list == ListId::Young) return res;  // no list mutation

    // Hit in old: make-young under the list lock.
    std::uint64_t wait_needed = lock_free_at_ns_ > now_ns ? lock_free_at_ns_ - now_ns : 0;
    if (config_.mode == BufPoolConfig::Mode::Llu &&
        wait_needed > config_.spin_timeout_ns) {
        res.wait_ns = config_.spin_timeout_ns;
        res.deferred = true;
        ++stats_.deferred;
        auto& backlog = backlogs_[thread_id];
        auto pos = std::find(backlog.begin(), backlog.end(), page_id);
        if (pos != backlog.end()) backlog.erase(pos);  // re-deferral moves to back
        backlog.push_back(page_id);
    } else {
        res.wait_ns = wait_needed;
        std::uint64_t acquired_at = now_ns + wait_needed;
        if (config_.mode == BufPoolConfig::Mode::Llu) drain_backlog(thread_id);
        make_young_locked(page_id);
        lock_free_at_ns_ = acquired_at + cs_ns;
        stats_.max_cs_ns = std::max(stats_.max_cs_ns, cs_ns);
    }
    stats_.wait_ns_samples.push_back(res.wait_ns);
    return res;
}

std::size_t BufferPool::backlog_size(std::uint64_t thread_id) const {
    auto it = backlogs_.find(thread_id);
    return it == backlogs_.end() ? 0 : it->second.size();
}

}  // namespace varlat
