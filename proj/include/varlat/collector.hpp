#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "varlat/tracefmt.hpp"

namespace varlat {

// Set of functions whose probes are live. Fixed-size membership bitmap so
// the hot-path test is a single indexed load. Must not change while any
// probe is open (quiesced single-writer contract).
class ProfileSet {
public:
    ProfileSet() = default;
    explicit ProfileSet(const std::vector<FuncId>& ids) {
        for (FuncId id : ids) enable(id);
    }

    void enable(FuncId id) {
        if (id >= enabled_.size()) enabled_.resize(id + 1, 0);
        enabled_[id] = 1;
    }
    bool contains(FuncId id) const { return id < enabled_.size() && enabled_[id]; }
    std::size_t size() const {
        std::size_t n = 0;
        for (auto b : enabled_) n += b;
        return n;
    }

private:
    std::vector<std::uint8_t> enabled_;
};

class Collector;

// Handle returned by open_probe. Inert handles (func not in the profile
// set) carry no timestamp and cost nothing to close.
struct ScopeProbe {
    FuncId func_id = 0;
    SiteTag site_tag = 0;
    std::uint32_t depth = 0;  // position in the per-thread open stack
    bool inert = true;
};

// Per-thread append buffer. One instance per worker thread; only that
// thread touches it between flushes.
class ThreadBuffer {
public:
    ScopeProbe open_probe(FuncId func_id, SiteTag site_tag = 0);
    void close_probe(const ScopeProbe& probe);

    std::size_t pending_events() const { return events_.size(); }

private:
    friend class Collector;
    ThreadBuffer(Collector* owner, std::uint64_t thread_id, std::size_t capacity)
        : owner_(owner), thread_id_(thread_id), capacity_(capacity) {
        events_.reserve(capacity);
    }

    Collector* owner_;
    std::uint64_t thread_id_;
    std::size_t capacity_;
    std::vector<TraceEvent> events_;
    std::vector<ScopeProbe> open_stack_;
    bool spilled_ = false;
};

// RAII wrapper pairing open/close around a scope.
class ScopedProbe {
public:
    ScopedProbe(ThreadBuffer& buf, FuncId func_id, SiteTag site_tag = 0)
        : buf_(buf), probe_(buf.open_probe(func_id, site_tag)) {}
    ~ScopedProbe() { buf_.close_probe(probe_); }
    ScopedProbe(const ScopedProbe&) = delete;
    ScopedProbe& operator=(const ScopedProbe&) = delete;

private:
    ThreadBuffer& buf_;
    ScopeProbe probe_;
};

class Collector {
public:
    static constexpr std::size_t kDefaultBufferCapacity = 1u << 20;

    explicit Collector(FunctionRegistry registry, ProfileSet profile_set,
                       std::size_t buffer_capacity = kDefaultBufferCapacity);

    // Each worker thread attaches once and keeps the returned buffer for
    // its lifetime. Buffers are owned by the collector.
    ThreadBuffer& attach_thread();

    // Swap the enabled set between runs. Caller guarantees no probe is open.
    void set_profile_set(ProfileSet ps) { profile_set_ = std::move(ps); }
    const ProfileSet& profile_set() const { return profile_set_; }
    const FunctionRegistry& registry() const { return registry_; }

    // Serializes all buffered events (spilled first, then per-thread
    // buffers in attach order) and empties the buffers. Returns the number
    // of events written. All probes must be closed.
    std::size_t flush_traces(std::ostream& sink);

    // func_ids seen by probes but missing from the registry; populated at
    // spill/flush time.
    const std::vector<FuncId>& unknown_funcs() const { return unknown_funcs_; }

    static std::uint64_t now_ns() {
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(
                std::chrono::steady_clock::now().time_since_epoch())
                .count());
    }

private:
    friend class ThreadBuffer;
    void spill(ThreadBuffer& buf);
    void note_unknown(const std::vector<TraceEvent>& events);

    FunctionRegistry registry_;
    ProfileSet profile_set_;
    std::size_t buffer_capacity_;

    std::mutex mu_;  // guards buffers_ registration, spill_, unknown_funcs_
    std::vector<std::unique_ptr<ThreadBuffer>> buffers_;
    std::vector<TraceEvent> spill_;
    std::vector<FuncId> unknown_funcs_;
    std::atomic<std::uint64_t> next_thread_id_{0};
};

}  // namespace varlat
