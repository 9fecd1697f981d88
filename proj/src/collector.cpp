#include "varlat/collector.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace varlat {

ScopeProbe ThreadBuffer::open_probe(FuncId func_id, SiteTag site_tag) {
    ScopeProbe p;
    p.func_id = func_id;
    p.site_tag = site_tag;
    p.depth = static_cast<std::uint32_t>(open_stack_.size());
    p.inert = !owner_->profile_set().contains(func_id);
    if (p.inert) return p;

    if (events_.size() >= capacity_) owner_->spill(*this);
    events_.push_back(TraceEvent{thread_id_, func_id, site_tag, EventKind::Enter,
                                 Collector::now_ns()});
    open_stack_.push_back(p);
    return p;
}

void ThreadBuffer::close_probe(const ScopeProbe& probe) {
    if (probe.inert) return;
    if (open_stack_.empty() || open_stack_.back().func_id != probe.func_id ||
        open_stack_.back().site_tag != probe.site_tag ||
        open_stack_.back().depth != probe.depth)
        throw std::logic_error("close_probe: out-of-order close (LIFO violation)");
    open_stack_.pop_back();
    if (events_.size() >= capacity_) owner_->spill(*this);
    events_.push_back(TraceEvent{thread_id_, probe.func_id, probe.site_tag,
                                 EventKind::Exit, Collector::now_ns()});
}

Collector::Collector(FunctionRegistry registry, ProfileSet profile_set,
                     std::size_t buffer_capacity)
    : registry_(std::move(registry)),
      profile_set_(std::move(profile_set)),
      buffer_capacity_(buffer_capacity) {}

ThreadBuffer& Collector::attach_thread() {
    std::lock_guard<std::mutex> g(mu_);
    std::uint64_t tid = next_thread_id_++;
    buffers_.emplace_back(new ThreadBuffer(this, tid, buffer_capacity_));
    return *buffers_.back();
}

void Collector::spill(ThreadBuffer& buf) {
    std::lock_guard<std::mutex> g(mu_);
    note_unknown(buf.events_);
    spill_.insert(spill_.end(), buf.events_.begin(), buf.events_.end());
    buf.events_.clear();
    buf.spilled_ = true;
}

void Collector::note_unknown(const std::vector<TraceEvent>& events) {
    for (const auto& ev : events) {
        if (!registry_.contains(ev.func_id) &&
            std::find(unknown_funcs_.begin(), unknown_funcs_.end(), ev.func_id) ==
                unknown_funcs_.end())
            unknown_funcs_.push_back(ev.func_id);
    }
}

std::size_t Collector::flush_traces(std::ostream& sink) {
    std::lock_guard<std::mutex> g(mu_);
    for (const auto& buf : buffers_) {
        if (!buf->open_stack_.empty())
            throw std::logic_error("flush_traces: probe still open on thread " +
                                   std::to_string(buf->thread_id_));
    }
    std::vector<TraceEvent> all = std::move(spill_);
    spill_.clear();
    for (const auto& buf : buffers_) {
        note_unknown(buf->events_);
        all.insert(all.end(), buf->events_.begin(), buf->events_.end());
        buf->events_.clear();
    }
    // Keep per-thread order; interleave threads by grouping, which the
    // format permits (reconstruction is keyed by thread_id).
    std::stable_sort(all.begin(), all.end(),
                     [](const TraceEvent& a, const TraceEvent& b) {
                         return a.thread_id < b.thread_id;
                     });
    encode_events(all, sink);
    if (!sink) throw std::runtime_error("flush_traces: sink write failure");
    return all.size();
}

}  // namespace varlat
