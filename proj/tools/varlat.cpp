#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "varlat/config.hpp"
#include "varlat/live.hpp"
#include "varlat/refine.hpp"
#include "varlat/vartree.hpp"
#include "varlat/workload.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

using namespace varlat;

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

nlohmann::json summary_json(const LatencySummary& s) {
    return {{"n", s.n},
            {"mean_ns", s.mean_ns},
            {"variance_ns2", s.variance_ns2},
            {"p99_ns", s.p99_ns},
            {"l2_norm", s.lp_value}};
}

// One row of a comparison table: the four Table-style columns plus the
// relative change vs the baseline row, (baseline - candidate) / baseline.
struct ReportRow {
    std::string label;
    LatencySummary s;
};

nlohmann::json comparison_json(const std::vector<ReportRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    const LatencySummary& base = rows.front().s;
    auto rel = [](double b, double c) { return b == 0.0 ? 0.0 : (b - c) / b; };
    for (const auto& r : rows) {
        nlohmann::json j = summary_json(r.s);
        j["label"] = r.label;
        j["delta_mean"] = rel(base.mean_ns, r.s.mean_ns);
        j["delta_variance"] = rel(base.variance_ns2, r.s.variance_ns2);
        j["delta_p99"] = rel(base.p99_ns, r.s.p99_ns);
        j["delta_l2"] = rel(base.lp_value, r.s.lp_value);
        out.push_back(j);
    }
    return out;
}

std::string comparison_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "label,mean_ns,variance_ns2,p99_ns,l2_norm,delta_mean,delta_variance,"
           "delta_p99,delta_l2\n";
    const LatencySummary& base = rows.front().s;
    auto rel = [](double b, double c) { return b == 0.0 ? 0.0 : (b - c) / b; };
    for (const auto& r : rows)
        out << r.label << ',' << r.s.mean_ns << ',' << r.s.variance_ns2 << ','
            << r.s.p99_ns << ',' << r.s.lp_value << ',' << rel(base.mean_ns, r.s.mean_ns)
            << ',' << rel(base.variance_ns2, r.s.variance_ns2) << ','
            << rel(base.p99_ns, r.s.p99_ns) << ',' << rel(base.lp_value, r.s.lp_value)
            << '\n';
    return out.str();
}

LatencySummary averaged_summary(const SimConfig& base, int seeds) {
    // Mean of per-seed summaries, matching how the comparison tables are
    // reported.
    LatencySummary acc;
    for (int s = 0; s < seeds; ++s) {
        SimConfig cfg = base;
        cfg.seed = base.seed + static_cast<std::uint64_t>(s);
        LatencySummary one = run_sim(cfg).summary();
        acc.n += one.n;
        acc.mean_ns += one.mean_ns;
        acc.variance_ns2 += one.variance_ns2;
        acc.p99_ns += one.p99_ns;
        acc.lp_value += one.lp_value;
    }
    double inv = 1.0 / seeds;
    acc.mean_ns *= inv;
    acc.variance_ns2 *= inv;
    acc.p99_ns *= inv;
    acc.lp_value *= inv;
    return acc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"varlat: latency-variance profiling and scheduling toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_path;
    std::string format = "json";
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    app.add_option("--out", out_path, "output file (default: stdout)")->capture_default_str();
    app.add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });

    // sim
    auto* sim = app.add_subcommand("sim", "run one discrete-event simulation");
    std::string sim_config;
    sim->add_option("--config", sim_config, "config file")->required();

    // compare
    auto* compare = app.add_subcommand("compare", "compare scheduler policies");
    std::string cmp_config;
    std::vector<std::string> cmp_policies;
    int cmp_seeds = 5;
    compare->add_option("--config", cmp_config)->required();
    compare->add_option("--policies", cmp_policies, "two or more of fcfs,vats,etf,random")
        ->required()
        ->delimiter(',');
    compare->add_option("--seeds", cmp_seeds, "seeds per policy");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "variance-tree analysis of a trace");
    std::string trace_path, registry_path;
    std::size_t an_k = 5;
    double an_d = 0.0;
    analyze_cmd->add_option("--trace", trace_path)->required();
    analyze_cmd->add_option("--registry", registry_path)->required();
    analyze_cmd->add_option("--k", an_k);
    analyze_cmd->add_option("--d", an_d);

    // refine
    auto* refine_cmd = app.add_subcommand("refine", "iterative factor localization");
    std::string refine_root = "dispatch";
    std::size_t rf_k = 5;
    double rf_d = 0.05;
    int rf_max_iter = 16;
    std::string rf_workload;
    std::string rf_out_dir = ".";
    refine_cmd->add_option("--root", refine_root);
    refine_cmd->add_option("--k", rf_k);
    refine_cmd->add_option("--d", rf_d);
    refine_cmd->add_option("--max-iterations", rf_max_iter);
    refine_cmd->add_option("--workload", rf_workload, "live workload config");
    refine_cmd->add_option("--out-dir", rf_out_dir, "directory for iter-<n>.json");

    // live
    auto* live_cmd = app.add_subcommand("live", "trace the live testbed once");
    std::string live_out_dir;
    int live_threads = 16;
    std::uint64_t live_txns = 200;
    live_cmd->add_option("--threads", live_threads);
    live_cmd->add_option("--txns-per-thread", live_txns);
    live_cmd->add_option("--trace-dir", live_out_dir,
                         "output directory (default $VARLAT_TRACE_DIR or .)");

    // tune-theta
    auto* tune = app.add_subcommand("tune-theta", "sweep the VATS activation threshold");
    std::string tune_config;
    std::vector<double> tune_grid = {0.0, 0.1, 0.2, 0.5, 1.0};
    tune->add_option("--config", tune_config)->required();
    tune->add_option("--grid", tune_grid)->delimiter(',');

    // menu
    auto* menu_cmd = app.add_subcommand("menu", "single-queue menu Monte Carlo");
    int menu_n = 5, menu_trials = 10000;
    double menu_p = 2.0, menu_mean_r = 1.0;
    std::vector<std::string> menu_policies = {"fcfs", "vats", "random"};
    menu_cmd->add_option("--txns", menu_n);
    menu_cmd->add_option("--trials", menu_trials);
    menu_cmd->add_option("--p", menu_p);
    menu_cmd->add_option("--mean-remaining", menu_mean_r);
    menu_cmd->add_option("--policies", menu_policies)->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    auto emit = [&](const std::string& content) {
        if (out_path.empty())
            std::cout << content << '\n';
        else
            write_file(out_path, content);
    };

    try {
        if (*sim) {
            SimConfig cfg = sim_config_from(KeyValueConfig::load_file(sim_config));
            if (seed_set) cfg.seed = seed_override;
            SimResult res = run_sim(cfg);
            emit(res.to_json());
            return kExitOk;
        }

        if (*compare) {
            if (cmp_policies.size() < 2)
                throw std::invalid_argument("compare needs at least 2 policies");
            SimConfig base = sim_config_from(KeyValueConfig::load_file(cmp_config));
            if (seed_set) base.seed = seed_override;
            std::vector<ReportRow> rows;
            for (const std::string& pol : cmp_policies) {
                SimConfig cfg = base;
                cfg.scheduler.kind = SchedulerPolicy::parse(pol).kind;
                rows.push_back(ReportRow{pol, averaged_summary(cfg, cmp_seeds)});
            }
            emit(format == "csv" ? comparison_csv(rows) : comparison_json(rows).dump(2));
            return kExitOk;
        }

        if (*analyze_cmd) {
            std::ifstream rin(registry_path);
            if (!rin) throw std::invalid_argument("cannot open registry '" + registry_path + "'");
            FunctionRegistry reg = FunctionRegistry::load(rin);
            std::ifstream tin(trace_path);
            if (!tin) throw std::invalid_argument("cannot open trace '" + trace_path + "'");
            auto events = decode_events(tin);
            auto forests = build_invocations(events, reg);
            auto roots = root_samples(forests, reg);
            if (roots.size() < 2) throw std::invalid_argument("insufficient samples");
            AnalysisReport rep = analyze(roots, SelectionParams{an_k, an_d});
            emit(format == "csv" ? report_to_csv(rep, reg) : report_to_json(rep, reg));
            return kExitOk;
        }

        if (*refine_cmd) {
            LiveConfig lcfg;
            if (!rf_workload.empty()) {
                KeyValueConfig kv = KeyValueConfig::load_file(rf_workload);
                lcfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
                lcfg.threads = static_cast<int>(kv.get_int("threads", lcfg.threads));
                lcfg.txns_per_thread =
                    static_cast<std::uint64_t>(kv.get_int("txns_per_thread", 200));
                lcfg.n_records = static_cast<std::uint64_t>(kv.get_int("n_records", 100));
                lcfg.zipf_s = kv.get_double("zipf", 1.0);
                lcfg.accesses_min = static_cast<int>(kv.get_int("accesses_min", 2));
                lcfg.accesses_max = static_cast<int>(kv.get_int("accesses_max", 6));
                lcfg.write_ratio = kv.get_double("write_ratio", 1.0);
            }
            if (seed_set) lcfg.seed = seed_override;
            FunctionRegistry reg = make_live_registry(lcfg.aux_probes);
            auto root_id = reg.id_of(refine_root);
            if (!root_id) throw std::invalid_argument("unknown root '" + refine_root + "'");
            LiveRunner runner(lcfg);
            Refiner refiner(*root_id, reg);
            RefineParams params;
            params.selection = SelectionParams{rf_k, rf_d};
            params.max_iterations = rf_max_iter;
            std::vector<IterationReport> reports = refiner.run(runner, params);
            for (const auto& rep : reports)
                write_file(rf_out_dir + "/iter-" + std::to_string(rep.iteration) + ".json",
                           report_to_json(rep.analysis, reg));
            if (!reports.empty())
                write_file(rf_out_dir + "/final.json",
                           report_to_json(reports.back().analysis, reg));
            for (const auto& rep : reports) {
                std::cout << "iteration " << rep.iteration << ": " << rep.selected.size()
                          << " factor(s)\n";
                for (const Factor& f : rep.selected)
                    std::cout << "  " << factor_to_string(f.id, reg)
                              << " score=" << f.score << " contribution=" << f.contribution
                              << '\n';
            }
            return kExitOk;
        }

        if (*live_cmd) {
            LiveConfig cfg;
            cfg.threads = live_threads;
            cfg.txns_per_thread = live_txns;
            if (seed_set) cfg.seed = seed_override;
            FunctionRegistry reg = make_live_registry(cfg.aux_probes);
            ProfileSet all;
            for (const auto& [id, e] : reg.entries()) {
                (void)e;
                all.enable(id);
            }
            LiveResult res = run_live(cfg, all);
            std::string dir = live_out_dir;
            if (dir.empty()) {
                const char* env = std::getenv("VARLAT_TRACE_DIR");
                dir = env ? env : ".";
            }
            std::string stamp = std::to_string(Collector::now_ns());
            std::string trace_file = dir + "/run-0-" + stamp + ".vtrace";
            write_file(trace_file, res.trace);
            write_file(dir + "/registry.vreg", res.registry);
            std::cout << "committed " << res.committed << " txns, " << res.events_flushed
                      << " events -> " << trace_file << '\n';
            return kExitOk;
        }

        if (*tune) {
            SimConfig base = sim_config_from(KeyValueConfig::load_file(tune_config));
            if (seed_set) base.seed = seed_override;
            ThetaSweepResult sweep = tune_theta(base, tune_grid);
            nlohmann::json j;
            j["best_theta"] = sweep.best_theta;
            nlohmann::json table = nlohmann::json::array();
            for (const auto& row : sweep.table) {
                nlohmann::json r = summary_json(row.summary);
                r["theta"] = row.theta;
                table.push_back(r);
            }
            j["sweep"] = table;
            emit(j.dump(2));
            return kExitOk;
        }

        if (*menu_cmd) {
            std::mt19937_64 rng(seed_set ? seed_override : 7);
            std::vector<MenuEntry> menu;
            std::uniform_real_distribution<double> age(0.0, 5.0), gap(0.0, 1.0);
            double t = 0.0;
            for (int i = 0; i < menu_n; ++i) {
                t += gap(rng);
                menu.push_back(MenuEntry{age(rng), t});
            }
            RemainingTimeModel model{RemainingTimeModel::Kind::Exponential, menu_mean_r, 0.0};
            nlohmann::json j = nlohmann::json::array();
            for (const std::string& pol : menu_policies) {
                MenuResult r = run_menu(menu, model, SchedulerPolicy::parse(pol),
                                        menu_trials, menu_p, rng());
                j.push_back({{"policy", pol},
                             {"p_performance", r.p_performance},
                             {"std_error", r.std_error}});
            }
            emit(j.dump(2));
            return kExitOk;
        }
    } catch (const SaturationError& e) {
        std::cerr << "runtime abort: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
