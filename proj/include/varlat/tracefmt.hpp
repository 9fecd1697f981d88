#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varlat {

using FuncId = std::uint32_t;
using SiteTag = std::uint32_t;

enum class EventKind : std::uint8_t { Enter, Exit };

struct TraceEvent {
    std::uint64_t thread_id = 0;
    FuncId func_id = 0;
    SiteTag site_tag = 0;
    EventKind kind = EventKind::Enter;
    std::uint64_t ts_ns = 0;

    bool operator==(const TraceEvent&) const = default;
};

struct TraceFormatError : std::runtime_error {
    TraceFormatError(std::size_t line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
          line(line_no) {}
    std::size_t line;
};

struct RegistryEntry {
    std::string name;
    bool is_root = false;
};

class FunctionRegistry {
public:
    void add(FuncId id, std::string name, bool is_root = false);
    bool contains(FuncId id) const;
    bool is_root(FuncId id) const;
    const std::string& name_of(FuncId id) const;
    std::optional<FuncId> id_of(const std::string& name) const;
    const std::map<FuncId, RegistryEntry>& entries() const { return entries_; }

    void save(std::ostream& out) const;
    static FunctionRegistry load(std::istream& in);

private:
    std::map<FuncId, RegistryEntry> entries_;
};

// One reconstructed call interval. Children are in call order; their
// intervals are disjoint and contained in [start_ns, end_ns].
struct Invocation {
    FuncId func_id = 0;
    SiteTag site_tag = 0;
    std::uint64_t start_ns = 0;
    std::uint64_t end_ns = 0;
    std::vector<Invocation> children;

    std::uint64_t duration_ns() const { return end_ns - start_ns; }
    std::uint64_t body_ns() const;
};

struct ThreadForest {
    std::uint64_t thread_id = 0;
    std::vector<Invocation> top_level;  // in stream order, roots and non-roots alike
};

// Text format, versioned by a first-line header "varlat-trace v1".
// Each event is one line: t=<u64> f=<u32> s=<u32> e=<E|X> ts=<u64>
void encode_events(const std::vector<TraceEvent>& events, std::ostream& out);

struct DecodeOptions {
    // When set, a non-monotone timestamp within a thread is tolerated
    // instead of raising TraceFormatError.
    bool allow_nonmonotone = false;
};

std::vector<TraceEvent> decode_events(std::istream& in, DecodeOptions opts = {});

// Per-thread reconstruction of well-nested invocations. Throws
// TraceFormatError on unbalanced streams; the message lists open frames
// when the stream is truncated.
std::vector<ThreadForest> build_invocations(const std::vector<TraceEvent>& events,
                                            const FunctionRegistry& registry);

// Top-level invocations whose function is flagged is_root, ordered by
// (thread_id, stream order). These are the samples of the variance tree.
std::vector<const Invocation*> root_samples(const std::vector<ThreadForest>& forests,
                                            const FunctionRegistry& registry);

}  // namespace varlat
