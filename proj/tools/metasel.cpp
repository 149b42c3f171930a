// metasel: test-time dynamic selection between two expert models, driven by
// aligned prediction traces. Subcommands: simulate, run, fit, report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metasel/config.hpp"
#include "metasel/engine.hpp"
#include "metasel/metad.hpp"
#include "metasel/scenario.hpp"
#include "metasel/trace.hpp"

namespace fs = std::filesystem;
using namespace metasel;

namespace {

TraceFormat format_from_name(const std::string& format, const std::string& path) {
    if (format == "jsonl") return TraceFormat::Jsonl;
    if (format == "csv") return TraceFormat::Csv;
    if (!format.empty()) throw std::invalid_argument("unknown format '" + format + "'");
    if (path.ends_with(".csv")) return TraceFormat::Csv;
    return TraceFormat::Jsonl;
}

std::optional<std::uint64_t> env_seed() {
    const char* value = std::getenv("METASEL_SEED");
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::strtoull(value, nullptr, 10);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed, std::uint64_t fallback) {
    if (flag_seed) return *flag_seed;
    if (auto seed = env_seed()) return *seed;
    return fallback;
}

ScenarioSpec load_scenario(const std::string& ref) {
    if (!fs::exists(ref)) return bundled_scenario(ref);
    std::ifstream in(ref);
    if (!in) throw std::runtime_error("cannot open scenario file '" + ref + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("scenario file '" + ref + "': " + e.what());
    }
    return scenario_from_json(j);
}

AlignedTrace load_trace(const std::string& path, const std::string& format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
    return parse_trace(in, format_from_name(format, path));
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out.good()) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void print_segment_summary(const ScenarioSpec& spec, const AlignedTrace& trace) {
    for (int k = 0; k < 2; ++k) {
        const auto& model = spec.models[k];
        std::cout << trace.model_names[k] << ":\n";
        long long start = 1;
        for (std::size_t i = 0; i < model.segments.size(); ++i) {
            const auto& seg = model.segments[i];
            const long long end = start + seg.length - 1;
            long long correct = 0;
            for (long long t = start; t <= end; ++t) {
                const auto& row = trace.rows[static_cast<std::size_t>(t - 1)];
                correct += (k == 0 ? row.correct_a() : row.correct_b()) ? 1 : 0;
            }
            std::cout << "  segment " << i + 1 << " (trials " << start << ".." << end
                      << "): accuracy " << detail::fixed(static_cast<double>(correct) / seg.length, 4)
                      << " (d'=" << seg.dprime << ", metad_ratio=" << seg.metad_ratio << ")\n";
            start = end + 1;
        }
    }
}

struct RunFlags {
    std::string trace_path;
    std::string scenario_ref;
    std::string config_path;
    std::string format;
    std::string out;
    std::string policy;
    std::optional<double> alpha;
    std::optional<double> sigma;
    std::optional<int> burn_in;
    std::optional<int> window;
    std::optional<int> update_freq;
    std::optional<int> bins;
    std::string checkpoints;
    std::optional<std::uint64_t> seed;
};

EngineConfig build_config(const RunFlags& flags) {
    EngineConfig cfg;
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) throw std::runtime_error("cannot open config file '" + flags.config_path + "'");
        cfg = parse_config(in);
    }
    if (!flags.policy.empty()) cfg.bandit.policy = policy_from_string(flags.policy);
    if (flags.alpha) cfg.bandit.alpha = *flags.alpha;
    if (flags.sigma) cfg.bandit.sigma = *flags.sigma;
    if (flags.burn_in) cfg.burn_in = *flags.burn_in;
    if (flags.window) cfg.window = *flags.window;
    if (flags.update_freq) cfg.update_freq = *flags.update_freq;
    if (flags.bins) cfg.bins = *flags.bins;
    if (!flags.checkpoints.empty()) {
        cfg.checkpoints = detail::to_int_list(flags.checkpoints, "checkpoints");
    }
    cfg.bandit.rng_seed = resolve_seed(flags.seed, cfg.bandit.rng_seed);
    cfg.validate();
    return cfg;
}

int cmd_simulate(const std::string& scenario_ref, const std::string& out_path,
                 const std::string& format, const std::optional<std::uint64_t>& seed) {
    ScenarioSpec spec = load_scenario(scenario_ref);
    spec.seed = resolve_seed(seed, spec.seed);
    const AlignedTrace trace = generate(spec);

    std::ostringstream buffer;
    const TraceFormat fmt = format_from_name(format, out_path);
    write_trace(buffer, trace, fmt);
    write_file(out_path, buffer.str());

    std::cout << "wrote " << trace.size() << " trials to " << out_path << " (seed " << spec.seed
              << ")\n";
    print_segment_summary(spec, trace);
    return 0;
}

int cmd_run(const RunFlags& flags) {
    if (flags.trace_path.empty() == flags.scenario_ref.empty()) {
        throw std::invalid_argument("run needs exactly one of --trace or --scenario");
    }
    const EngineConfig cfg = build_config(flags);

    AlignedTrace trace;
    if (!flags.trace_path.empty()) {
        trace = load_trace(flags.trace_path, flags.format);
    } else {
        ScenarioSpec spec = load_scenario(flags.scenario_ref);
        spec.seed = resolve_seed(flags.seed, spec.seed);
        trace = generate(spec);
    }

    const RunReport result = run(trace, cfg);

    const fs::path out_dir(flags.out);
    fs::create_directories(out_dir);
    write_file(out_dir / "report.txt", render_table(result));
    write_file(out_dir / "report.csv", report_csv(result));
    write_file(out_dir / "events.jsonl", events_jsonl(result.events));
    write_file(out_dir / "dynamics.csv", dynamics_csv(result.events));

    std::cout << render_table(result);
    std::cout << "outputs written to " << out_dir.string() << "\n";
    return 0;
}

int cmd_fit(const std::string& trace_path, const std::string& format, const std::string& model_name,
            long long from, long long to, int bins, bool as_json) {
    const AlignedTrace trace = load_trace(trace_path, format);

    int model_index = -1;
    for (int k = 0; k < 2; ++k) {
        if (trace.model_names[k] == model_name) model_index = k;
    }
    if (model_index < 0) {
        throw std::invalid_argument("unknown model '" + model_name + "' (available: " +
                                    trace.model_names[0] + ", " + trace.model_names[1] + ")");
    }

    const long long n = static_cast<long long>(trace.size());
    if (to == 0) to = n;
    if (from < 1 || to > n || from > to) {
        throw std::invalid_argument("range " + std::to_string(from) + ".." + std::to_string(to) +
                                    " outside trace of length " + std::to_string(n));
    }

    PerformanceWindow window(static_cast<std::size_t>(to - from + 1));
    for (long long t = from; t <= to; ++t) {
        const auto& row = trace.rows[static_cast<std::size_t>(t - 1)];
        if (model_index == 0) window.push(row.conf_a, row.correct_a() ? 1 : 0);
        else window.push(row.conf_b, row.correct_b() ? 1 : 0);
    }
    const MetaDFit fit = fit_meta_d(window, bins);

    if (as_json) {
        nlohmann::ordered_json j;
        j["model"] = model_name;
        j["from"] = from;
        j["to"] = to;
        j["meta_d"] = fit.meta_d;
        j["type1_dprime"] = fit.type1_dprime;
        j["criteria"] = fit.criteria;
        j["log_likelihood"] = fit.log_likelihood;
        j["converged"] = fit.converged;
        j["degenerate"] = fit.degenerate;
        j["n_correct"] = fit.n_correct;
        j["n_incorrect"] = fit.n_incorrect;
        std::cout << j.dump() << "\n";
        return 0;
    }

    std::cout << "model: " << model_name << "\n";
    std::cout << "trials: " << from << ".." << to << " (n=" << to - from + 1 << ")\n";
    std::cout << "meta_d: " << fit.meta_d << "\n";
    std::cout << "type1_dprime: " << fit.type1_dprime << "\n";
    std::cout << "criteria:";
    for (double t : fit.criteria) std::cout << " " << t;
    std::cout << "\n";
    std::cout << "log_likelihood: " << fit.log_likelihood << "\n";
    std::cout << "converged: " << (fit.converged ? "true" : "false") << "\n";
    std::cout << "degenerate: " << (fit.degenerate ? "true" : "false") << "\n";
    std::cout << "n_correct: " << fit.n_correct << "  n_incorrect: " << fit.n_incorrect << "\n";
    return 0;
}

int cmd_report(const std::string& events_path, const std::string& trace_path,
               const std::string& format, const std::string& out_path, const RunFlags& flags) {
    std::ifstream events_in(events_path);
    if (!events_in) throw std::runtime_error("cannot open events file '" + events_path + "'");
    const std::vector<TrialEvent> events = parse_events_jsonl(events_in);

    const AlignedTrace trace = load_trace(trace_path, format);
    const EngineConfig cfg = build_config(flags);
    const RunReport result = report(events, trace, cfg);

    const fs::path out_dir(out_path);
    fs::create_directories(out_dir);
    write_file(out_dir / "report.txt", render_table(result));
    write_file(out_dir / "report.csv", report_csv(result));
    write_file(out_dir / "dynamics.csv", dynamics_csv(result.events));
    std::cout << render_table(result);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Test-time dynamic model selection between two expert models"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic aligned trace");
    std::string sim_scenario, sim_out, sim_format;
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--scenario", sim_scenario, "Scenario JSON file or bundled name")->required();
    simulate->add_option("--out", sim_out, "Output trace path")->required();
    simulate->add_option("--format", sim_format, "Trace format: jsonl or csv");
    simulate->add_option("--seed", sim_seed, "RNG seed (overrides METASEL_SEED and the scenario)");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run the selection engine over a trace");
    RunFlags run_flags;
    run_cmd->add_option("--trace", run_flags.trace_path, "Aligned trace file");
    run_cmd->add_option("--scenario", run_flags.scenario_ref, "Generate the trace from a scenario");
    run_cmd->add_option("--config", run_flags.config_path, "INI config file");
    run_cmd->add_option("--format", run_flags.format, "Trace format: jsonl or csv");
    run_cmd->add_option("--out", run_flags.out, "Output directory")->required();
    run_cmd->add_option("--policy", run_flags.policy, "Bandit policy: linucb or lints");
    run_cmd->add_option("--alpha", run_flags.alpha, "LinUCB exploration parameter");
    run_cmd->add_option("--sigma", run_flags.sigma, "LinTS prior standard deviation");
    run_cmd->add_option("--burn-in", run_flags.burn_in, "Burn-in trials");
    run_cmd->add_option("--window", run_flags.window, "Sliding window size");
    run_cmd->add_option("--update-freq", run_flags.update_freq, "Meta-d' refit period");
    run_cmd->add_option("--bins", run_flags.bins, "Confidence bins for the estimator");
    run_cmd->add_option("--checkpoints", run_flags.checkpoints, "Comma-separated checkpoint trials");
    run_cmd->add_option("--seed", run_flags.seed, "RNG seed (overrides METASEL_SEED and config)");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit meta-d' for one model over a trial range");
    std::string fit_trace, fit_format, fit_model;
    long long fit_from = 1, fit_to = 0;
    int fit_bins = kDefaultBins;
    bool fit_json = false;
    fit_cmd->add_option("--trace", fit_trace, "Aligned trace file")->required();
    fit_cmd->add_option("--format", fit_format, "Trace format: jsonl or csv");
    fit_cmd->add_option("--model", fit_model, "Model name from the trace")->required();
    fit_cmd->add_option("--from", fit_from, "First trial of the range (1-based)");
    fit_cmd->add_option("--to", fit_to, "Last trial of the range (default: trace end)");
    fit_cmd->add_option("--bins", fit_bins, "Confidence bins");
    fit_cmd->add_flag("--json", fit_json, "Emit machine-readable JSON");

    // report
    auto* report_cmd = app.add_subcommand("report", "Re-render reports from an event log");
    std::string rep_events, rep_trace, rep_format, rep_out;
    RunFlags rep_flags;
    report_cmd->add_option("--events", rep_events, "Event log JSONL from a run")->required();
    report_cmd->add_option("--trace", rep_trace, "Aligned trace file")->required();
    report_cmd->add_option("--format", rep_format, "Trace format: jsonl or csv");
    report_cmd->add_option("--out", rep_out, "Output directory")->required();
    report_cmd->add_option("--config", rep_flags.config_path, "INI config file");
    report_cmd->add_option("--burn-in", rep_flags.burn_in, "Burn-in trials used by the run");
    report_cmd->add_option("--checkpoints", rep_flags.checkpoints, "Comma-separated checkpoint trials");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(sim_scenario, sim_out, sim_format, sim_seed);
        if (run_cmd->parsed()) return cmd_run(run_flags);
        if (fit_cmd->parsed()) {
            return cmd_fit(fit_trace, fit_format, fit_model, fit_from, fit_to, fit_bins, fit_json);
        }
        if (report_cmd->parsed()) {
            return cmd_report(rep_events, rep_trace, rep_format, rep_out, rep_flags);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
