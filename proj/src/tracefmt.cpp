#include "varlat/tracefmt.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace varlat {

namespace {

constexpr const char* kTraceHeader = "varlat-trace v1";
constexpr const char* kRegistryHeader = "varlat-registry v1";

// Parses "<key>=<number>" into out, advancing p past the field.
template <typename T>
bool parse_field(const char*& p, const char* end, const char* key, T& out) {
    std::size_t klen = std::char_traits<char>::length(key);
    if (static_cast<std::size_t>(end - p) < klen + 1) return false;
    if (std::char_traits<char>::compare(p, key, klen) != 0 || p[klen] != '=') return false;
    p += klen + 1;
    auto res = std::from_chars(p, end, out);
    if (res.ec != std::errc{}) return false;
    p = res.ptr;
    return true;
}

bool skip_space(const char*& p, const char* end) {
    if (p == end || *p != ' ') return false;
    ++p;
    return true;
}

}  // namespace

std::uint64_t Invocation::body_ns() const {
    std::uint64_t child_sum = 0;
    for (const auto& c : children) child_sum += c.duration_ns();
    return duration_ns() - child_sum;
}

void FunctionRegistry::add(FuncId id, std::string name, bool is_root) {
    auto [it, inserted] = entries_.emplace(id, RegistryEntry{std::move(name), is_root});
    if (!inserted) throw std::invalid_argument("duplicate func_id " + std::to_string(id));
    (void)it;
}

bool FunctionRegistry::contains(FuncId id) const { return entries_.count(id) != 0; }

bool FunctionRegistry::is_root(FuncId id) const {
    auto it = entries_.find(id);
    return it != entries_.end() && it->second.is_root;
}

const std::string& FunctionRegistry::name_of(FuncId id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw std::out_of_range("unknown func_id " + std::to_string(id));
    return it->second.name;
}

std::optional<FuncId> FunctionRegistry::id_of(const std::string& name) const {
    for (const auto& [id, e] : entries_)
        if (e.name == name) return id;
    return std::nullopt;
}

void FunctionRegistry::save(std::ostream& out) const {
    out << kRegistryHeader << '\n';
    for (const auto& [id, e] : entries_) {
        out << id << ' ' << e.name;
        if (e.is_root) out << " root";
        out << '\n';
    }
}

FunctionRegistry FunctionRegistry::load(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kRegistryHeader)
        throw TraceFormatError(line_no, "missing registry header");
    FunctionRegistry reg;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        FuncId id;
        std::string name, flag;
        if (!(ls >> id >> name)) throw TraceFormatError(line_no, "malformed registry line");
        bool root = false;
        if (ls >> flag) {
            if (flag != "root") throw TraceFormatError(line_no, "unknown registry flag '" + flag + "'");
            root = true;
        }
        try {
            reg.add(id, std::move(name), root);
        } catch (const std::invalid_argument& e) {
            throw TraceFormatError(line_no, e.what());
        }
    }
    return reg;
}

void encode_events(const std::vector<TraceEvent>& events, std::ostream& out) {
    out << kTraceHeader << '\n';
    for (const auto& ev : events) {
        out << "t=" << ev.thread_id << " f=" << ev.func_id << " s=" << ev.site_tag
            << " e=" << (ev.kind == EventKind::Enter ? 'E' : 'X') << " ts=" << ev.ts_ns
            << '\n';
    }
}

std::vector<TraceEvent> decode_events(std::istream& in, DecodeOptions opts) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw TraceFormatError(line_no, "missing trace header");
    std::vector<TraceEvent> events;
    std::unordered_map<std::uint64_t, std::uint64_t> last_ts;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        TraceEvent ev;
        if (!parse_field(p, end, "t", ev.thread_id) || !skip_space(p, end) ||
            !parse_field(p, end, "f", ev.func_id) || !skip_space(p, end) ||
            !parse_field(p, end, "s", ev.site_tag) || !skip_space(p, end))
            throw TraceFormatError(line_no, "malformed line");
        if (end - p < 3 || p[0] != 'e' || p[1] != '=')
            throw TraceFormatError(line_no, "malformed line");
        char k = p[2];
        if (k == 'E')
            ev.kind = EventKind::Enter;
        else if (k == 'X')
            ev.kind = EventKind::Exit;
        else
            throw TraceFormatError(line_no, std::string("unknown kind token '") + k + "'");
        p += 3;
        if (!skip_space(p, end) || !parse_field(p, end, "ts", ev.ts_ns) || p != end)
            throw TraceFormatError(line_no, "malformed line");

        auto [it, fresh] = last_ts.emplace(ev.thread_id, ev.ts_ns);
        if (!fresh) {
            if (ev.ts_ns < it->second && !opts.allow_nonmonotone)
                throw TraceFormatError(line_no, "non-monotone timestamp in thread " +
                                                    std::to_string(ev.thread_id));
            it->second = std::max(it->second, ev.ts_ns);
        }
        events.push_back(ev);
    }
    return events;
}

std::vector<ThreadForest> build_invocations(const std::vector<TraceEvent>& events,
                                            const FunctionRegistry& registry) {
    struct ThreadState {
        std::vector<Invocation> stack;
        std::vector<Invocation> top_level;
    };
    std::map<std::uint64_t, ThreadState> threads;

    std::size_t idx = 0;
    for (const auto& ev : events) {
        ++idx;
        if (!registry.contains(ev.func_id))
            throw TraceFormatError(idx, "event for unregistered func_id " +
                                            std::to_string(ev.func_id));
        auto& st = threads[ev.thread_id];
        if (ev.kind == EventKind::Enter) {
            Invocation inv;
            inv.func_id = ev.func_id;
            inv.site_tag = ev.site_tag;
            inv.start_ns = ev.ts_ns;
            st.stack.push_back(std::move(inv));
        } else {
            if (st.stack.empty() || st.stack.back().func_id != ev.func_id ||
                st.stack.back().site_tag != ev.site_tag)
                throw TraceFormatError(idx, "exit without matching enter for func " +
                                                std::to_string(ev.func_id));
            Invocation done = std::move(st.stack.back());
            st.stack.pop_back();
            done.end_ns = ev.ts_ns;
            if (st.stack.empty())
                st.top_level.push_back(std::move(done));
            else
                st.stack.back().children.push_back(std::move(done));
        }
    }

    for (const auto& [tid, st] : threads) {
        if (!st.stack.empty()) {
            std::string open;
            for (const auto& f : st.stack) {
                if (!open.empty()) open += ", ";
                open += registry.name_of(f.func_id);
            }
            throw TraceFormatError(events.size(),
                                   "truncated stream: thread " + std::to_string(tid) +
                                       " has open frames [" + open + "]");
        }
    }

    std::vector<ThreadForest> forests;
    for (auto& [tid, st] : threads)
        forests.push_back(ThreadForest{tid, std::move(st.top_level)});
    return forests;
}

std::vector<const Invocation*> root_samples(const std::vector<ThreadForest>& forests,
                                            const FunctionRegistry& registry) {
    std::vector<const Invocation*> out;
    for (const auto& f : forests)
        for (const auto& inv : f.top_level)
            if (registry.is_root(inv.func_id)) out.push_back(&inv);
    return out;
}

}  // namespace varlat
