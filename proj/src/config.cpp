#include "varlat/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace varlat {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (!section.empty()) key = section + "." + key;
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number");
    }
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an integer");
    }
}

SimConfig sim_config_from(const KeyValueConfig& kv) {
    static const std::set<std::string> known = {
        "seed", "duration_ms", "rate_tps", "poisson", "n_records", "zipf",
        "accesses_min", "accesses_max", "write_ratio",
        "service.mu", "service.sigma", "service.constant_ns", "service.kind",
        "scheduler", "vats.theta", "random.seed",
        "bufpool.enabled", "bufpool.capacity", "bufpool.old_fraction",
        "bufpool.mode", "bufpool.spin_timeout_ns",
        "bufpool.cs_mu", "bufpool.cs_sigma",
        "log.devices", "log.flush_policy", "log.flush_mu", "log.flush_sigma",
        "log.block_size", "log.bytes_per_access", "log.write_ns_per_block",
        "saturation_bound",
    };
    for (const auto& [key, value] : kv.values()) {
        (void)value;
        if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
    }

    SimConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    cfg.duration_ns =
        static_cast<std::uint64_t>(kv.get_double("duration_ms", 1000.0) * 1e6);
    cfg.rate_tps = kv.get_double("rate_tps", 500.0);
    cfg.poisson_arrivals = kv.get_int("poisson", 0) != 0;
    cfg.n_records = static_cast<std::uint64_t>(kv.get_int("n_records", 1000));
    cfg.zipf_s = kv.get_double("zipf", 0.0);
    cfg.accesses_min = static_cast<int>(kv.get_int("accesses_min", 1));
    cfg.accesses_max = static_cast<int>(kv.get_int("accesses_max", cfg.accesses_min));
    cfg.write_ratio = kv.get_double("write_ratio", 0.5);

    std::string skind = kv.get_string("service.kind", "lognormal");
    if (skind == "constant")
        cfg.service.kind = ServiceModel::Kind::Constant;
    else if (skind != "lognormal")
        throw std::invalid_argument("service.kind must be lognormal or constant");
    cfg.service.mu = kv.get_double("service.mu", cfg.service.mu);
    cfg.service.sigma = kv.get_double("service.sigma", cfg.service.sigma);
    cfg.service.constant_ns = kv.get_double("service.constant_ns", cfg.service.constant_ns);

    cfg.scheduler = SchedulerPolicy::parse(kv.get_string("scheduler", "fcfs"));
    cfg.scheduler.theta = kv.get_double("vats.theta", cfg.scheduler.theta);
    cfg.scheduler.seed = static_cast<std::uint64_t>(kv.get_int("random.seed", 0));

    cfg.bufpool_enabled = kv.get_int("bufpool.enabled", 0) != 0;
    cfg.bufpool.capacity = static_cast<std::size_t>(kv.get_int("bufpool.capacity", 64));
    cfg.bufpool.old_fraction = kv.get_double("bufpool.old_fraction", 3.0 / 8.0);
    std::string mode = kv.get_string("bufpool.mode", "baseline");
    if (mode == "llu")
        cfg.bufpool.mode = BufPoolConfig::Mode::Llu;
    else if (mode != "baseline")
        throw std::invalid_argument("bufpool.mode must be baseline or llu");
    cfg.bufpool.spin_timeout_ns =
        static_cast<std::uint64_t>(kv.get_int("bufpool.spin_timeout_ns", 10000));
    cfg.bufpool_cs.mu = kv.get_double("bufpool.cs_mu", cfg.bufpool_cs.mu);
    cfg.bufpool_cs.sigma = kv.get_double("bufpool.cs_sigma", cfg.bufpool_cs.sigma);

    cfg.log.devices = static_cast<int>(kv.get_int("log.devices", 1));
    cfg.log.flush_policy =
        LogDeviceConfig::parse_policy(kv.get_string("log.flush_policy", "eager"));
    cfg.log.flush_latency.mu = kv.get_double("log.flush_mu", cfg.log.flush_latency.mu);
    cfg.log.flush_latency.sigma = kv.get_double("log.flush_sigma", cfg.log.flush_latency.sigma);
    cfg.log.block_size = static_cast<std::uint64_t>(kv.get_int("log.block_size", 8192));
    cfg.log.bytes_per_access =
        static_cast<std::uint64_t>(kv.get_int("log.bytes_per_access", 256));
    cfg.log.write_ns_per_block =
        static_cast<std::uint64_t>(kv.get_int("log.write_ns_per_block", 20000));
    cfg.saturation_bound = static_cast<std::size_t>(kv.get_int("saturation_bound", 100000));

    if (cfg.rate_tps <= 0) throw std::invalid_argument("rate_tps must be > 0");
    if (cfg.zipf_s < 0) throw std::invalid_argument("zipf must be >= 0");
    if (cfg.accesses_min < 1 || cfg.accesses_max < cfg.accesses_min)
        throw std::invalid_argument("bad accesses range");
    return cfg;
}

}  // namespace varlat
