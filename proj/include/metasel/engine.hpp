#pragma once

// Test-time dynamic selection over an aligned trace: burn-in both models'
// performance windows, fit initial meta-d' scores, then per trial build the
// context, let the bandit pick a model, score the reward, and update the
// chosen arm. Meta-d' refits run on a fixed schedule over the sliding
// windows; between refits the scores carry forward unchanged.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metasel/bandit.hpp"
#include "metasel/metad.hpp"
#include "metasel/trace.hpp"
#include "metasel/window.hpp"

namespace metasel {

struct EngineConfig {
    int burn_in = 100;
    int window = 100;
    int update_freq = 50;
    int bins = kDefaultBins;
    BanditConfig bandit;
    std::vector<int> checkpoints{300, 700, 1000};

    void validate() const {
        if (burn_in < 20) throw std::invalid_argument("engine: burn_in must be >= 20");
        if (window < 20) throw std::invalid_argument("engine: window must be >= 20");
        if (update_freq < 1 || update_freq > window) {
            throw std::invalid_argument("engine: update_freq must be in [1, window]");
        }
        if (bins < 2) throw std::invalid_argument("engine: bins must be >= 2");
        for (std::size_t i = 1; i < checkpoints.size(); ++i) {
            if (checkpoints[i] <= checkpoints[i - 1]) {
                throw std::invalid_argument("engine: checkpoints must be strictly increasing");
            }
        }
        bandit.validate();
    }
};

struct TrialEvent {
    long long t = 0;
    ContextVector context;
    Arm chosen = Arm::A;
    int reward = 0;
    double mu_a = 0.0;
    double mu_b = 0.0;
    bool refit = false;
};

struct CheckpointRow {
    int checkpoint = 0;
    double acc_model_a = 0.0;
    double acc_model_b = 0.0;
    double acc_combined = 0.0;
    double delta_vs_best = 0.0; // combined minus the better individual model
};

struct RunReport {
    std::array<std::string, 2> model_names;
    int burn_in = 0;
    long long n_trials = 0;
    double acc_model_a = 0.0;
    double acc_model_b = 0.0;
    double acc_combined = 0.0;
    std::vector<CheckpointRow> rows;
    std::vector<TrialEvent> events;
    std::array<ArmState, 2> final_arms;
};

namespace detail {

struct AccuracyTotals {
    long long correct_a = 0;
    long long correct_b = 0;
    long long reward = 0;
    long long trials = 0;
};

} // namespace detail

/// Checkpoint table from an event log and its trace. Checkpoints must lie in
/// (burn_in, N]; accuracies cover trials burn_in+1 .. checkpoint.
inline std::vector<CheckpointRow> checkpoint_rows(const std::vector<TrialEvent>& events,
                                                  const AlignedTrace& trace,
                                                  const EngineConfig& cfg) {
    if (events.empty()) throw std::invalid_argument("report: event log is empty");
    if (events.front().t <= cfg.burn_in) {
        throw std::invalid_argument("report: event log starts at t=" +
                                    std::to_string(events.front().t) +
                                    ", inside the configured burn-in " +
                                    std::to_string(cfg.burn_in));
    }
    const long long n = static_cast<long long>(trace.size());
    for (int c : cfg.checkpoints) {
        if (c <= cfg.burn_in) {
            throw std::invalid_argument("report: checkpoint " + std::to_string(c) +
                                        " does not exceed burn-in " + std::to_string(cfg.burn_in));
        }
        if (c > n) {
            throw std::invalid_argument("report: checkpoint " + std::to_string(c) +
                                        " exceeds trace length " + std::to_string(n));
        }
    }

    std::vector<CheckpointRow> rows;
    detail::AccuracyTotals totals;
    std::size_t next_checkpoint = 0;
    for (const auto& event : events) {
        const TrialRecord& row = trace.rows[static_cast<std::size_t>(event.t - 1)];
        totals.correct_a += row.correct_a() ? 1 : 0;
        totals.correct_b += row.correct_b() ? 1 : 0;
        totals.reward += event.reward;
        ++totals.trials;
        while (next_checkpoint < cfg.checkpoints.size() &&
               event.t == cfg.checkpoints[next_checkpoint]) {
            CheckpointRow out;
            out.checkpoint = cfg.checkpoints[next_checkpoint];
            const double denom = static_cast<double>(totals.trials);
            out.acc_model_a = totals.correct_a / denom;
            out.acc_model_b = totals.correct_b / denom;
            out.acc_combined = totals.reward / denom;
            out.delta_vs_best = out.acc_combined - std::max(out.acc_model_a, out.acc_model_b);
            rows.push_back(out);
            ++next_checkpoint;
        }
    }
    return rows;
}

/// Rebuild a full report (overall + checkpoint accuracies) from a logged run.
inline RunReport report(const std::vector<TrialEvent>& events, const AlignedTrace& trace,
                        const EngineConfig& cfg) {
    cfg.validate();
    RunReport out;
    out.model_names = trace.model_names;
    out.burn_in = cfg.burn_in;
    out.n_trials = static_cast<long long>(trace.size());
    out.rows = checkpoint_rows(events, trace, cfg);

    detail::AccuracyTotals totals;
    for (const auto& event : events) {
        const TrialRecord& row = trace.rows[static_cast<std::size_t>(event.t - 1)];
        totals.correct_a += row.correct_a() ? 1 : 0;
        totals.correct_b += row.correct_b() ? 1 : 0;
        totals.reward += event.reward;
        ++totals.trials;
    }
    const double denom = static_cast<double>(totals.trials);
    out.acc_model_a = totals.correct_a / denom;
    out.acc_model_b = totals.correct_b / denom;
    out.acc_combined = totals.reward / denom;
    out.events = events;
    return out;
}

/// Run the full selection loop over a trace.
inline RunReport run(const AlignedTrace& trace, const EngineConfig& cfg) {
    cfg.validate();
    const long long n = static_cast<long long>(trace.size());
    const long long burn_in = cfg.burn_in;
    if (n <= burn_in) {
        throw std::invalid_argument("engine: trace length " + std::to_string(n) +
                                    " must exceed burn-in " + std::to_string(burn_in));
    }

    Rng rng(cfg.bandit.rng_seed);
    PerformanceWindow window_a(static_cast<std::size_t>(cfg.window));
    PerformanceWindow window_b(static_cast<std::size_t>(cfg.window));

    for (long long t = 1; t <= burn_in; ++t) {
        const TrialRecord& row = trace.rows[static_cast<std::size_t>(t - 1)];
        window_a.push(row.conf_a, row.correct_a() ? 1 : 0);
        window_b.push(row.conf_b, row.correct_b() ? 1 : 0);
    }

    const std::array<PerformanceWindow, 2> burnin{window_a, window_b};
    const std::vector<double> initial = initial_scores(burnin, cfg.bins);
    double mu_a = initial[0];
    double mu_b = initial[1];

    std::array<ArmState, 2> arms;
    std::vector<TrialEvent> events;
    events.reserve(static_cast<std::size_t>(n - burn_in));

    for (long long t = burn_in + 1; t <= n; ++t) {
        const TrialRecord& row = trace.rows[static_cast<std::size_t>(t - 1)];
        const bool refit = ((t - burn_in) % cfg.update_freq) == (1 % cfg.update_freq);
        if (refit) {
            mu_a = fit_meta_d(window_a, cfg.bins).meta_d;
            mu_b = fit_meta_d(window_b, cfg.bins).meta_d;
        }

        const ContextVector context{row.conf_a, mu_a, row.conf_b, mu_b};
        const Arm chosen = select(arms[0], arms[1], context, cfg.bandit, rng);
        const bool chosen_correct = (chosen == Arm::A) ? row.correct_a() : row.correct_b();
        const int reward = chosen_correct ? 1 : 0;

        // both models' outcomes are observable from the trace, so both
        // windows advance every trial
        window_a.push(row.conf_a, row.correct_a() ? 1 : 0);
        window_b.push(row.conf_b, row.correct_b() ? 1 : 0);

        update(arms[chosen == Arm::A ? 0 : 1], context, reward);
        events.push_back({t, context, chosen, reward, mu_a, mu_b, refit});
    }

    RunReport out = report(events, trace, cfg);
    out.final_arms = arms;
    return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

inline std::string signed_percent(double fraction) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", fraction * 100.0);
    return buf;
}

inline std::string percent(double fraction) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

} // namespace detail

/// Checkpoint table: per-model accuracy, best individual model, combined
/// accuracy and the signed delta at each checkpoint.
inline std::string render_table(const RunReport& report) {
    std::ostringstream out;
    out << "Pair: " << report.model_names[0] << " - " << report.model_names[1] << "\n";
    out << "Accuracy over trials " << report.burn_in + 1 << ".." << report.n_trials
        << " (burn-in " << report.burn_in << " excluded)\n\n";

    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %12s %12s %8s %8s %8s\n", "Checkpoint",
                  report.model_names[0].substr(0, 12).c_str(),
                  report.model_names[1].substr(0, 12).c_str(), "Model", "Comb.", "Delta");
    out << line;
    for (const auto& row : report.rows) {
        const double best = std::max(row.acc_model_a, row.acc_model_b);
        std::snprintf(line, sizeof(line), "%-12s %12s %12s %8s %8s %8s\n",
                      (std::to_string(row.checkpoint) + " trials").c_str(),
                      detail::percent(row.acc_model_a).c_str(),
                      detail::percent(row.acc_model_b).c_str(), detail::percent(best).c_str(),
                      detail::percent(row.acc_combined).c_str(),
                      detail::signed_percent(row.delta_vs_best).c_str());
        out << line;
    }
    out << "\nOverall: " << report.model_names[0] << " " << detail::percent(report.acc_model_a)
        << "  " << report.model_names[1] << " " << detail::percent(report.acc_model_b)
        << "  combined " << detail::percent(report.acc_combined) << "  delta "
        << detail::signed_percent(report.acc_combined -
                                  std::max(report.acc_model_a, report.acc_model_b))
        << "\n";
    return out.str();
}

inline std::string report_csv(const RunReport& report) {
    std::ostringstream out;
    out << "checkpoint,acc_model_a,acc_model_b,acc_combined,delta_vs_best\n";
    for (const auto& row : report.rows) {
        out << row.checkpoint << ',' << detail::fixed(row.acc_model_a, 6) << ','
            << detail::fixed(row.acc_model_b, 6) << ',' << detail::fixed(row.acc_combined, 6)
            << ',' << detail::fixed(row.delta_vs_best, 6) << '\n';
    }
    return out.str();
}

inline std::string events_jsonl(const std::vector<TrialEvent>& events) {
    std::ostringstream out;
    for (const auto& event : events) {
        nlohmann::ordered_json j;
        j["t"] = event.t;
        j["ctx"] = {event.context.c_a, event.context.mu_a, event.context.c_b, event.context.mu_b};
        j["arm"] = event.chosen == Arm::A ? "A" : "B";
        j["reward"] = event.reward;
        j["mu_a"] = event.mu_a;
        j["mu_b"] = event.mu_b;
        j["refit"] = event.refit;
        out << j.dump() << '\n';
    }
    return out.str();
}

inline std::vector<TrialEvent> parse_events_jsonl(std::istream& in) {
    std::vector<TrialEvent> events;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw TraceError(line_no, "malformed event log line");
        }
        try {
            TrialEvent event;
            event.t = j.at("t").get<long long>();
            const auto& ctx = j.at("ctx");
            event.context = {ctx.at(0).get<double>(), ctx.at(1).get<double>(),
                             ctx.at(2).get<double>(), ctx.at(3).get<double>()};
            event.chosen = j.at("arm").get<std::string>() == "A" ? Arm::A : Arm::B;
            event.reward = j.at("reward").get<int>();
            event.mu_a = j.at("mu_a").get<double>();
            event.mu_b = j.at("mu_b").get<double>();
            event.refit = j.at("refit").get<bool>();
            events.push_back(event);
        } catch (const nlohmann::json::exception& e) {
            throw TraceError(line_no, std::string("bad event log field: ") + e.what());
        }
    }
    return events;
}

/// Learning-dynamics series: cumulative combined accuracy plus both meta-d'
/// tracks, one row per post-burn-in trial.
inline std::string dynamics_csv(const std::vector<TrialEvent>& events) {
    std::ostringstream out;
    out << "t,cumulative_accuracy,mu_a,mu_b\n";
    long long rewards = 0;
    long long count = 0;
    for (const auto& event : events) {
        rewards += event.reward;
        ++count;
        out << event.t << ',' << detail::fixed(static_cast<double>(rewards) / count, 6) << ','
            << detail::fixed(event.mu_a, 6) << ',' << detail::fixed(event.mu_b, 6) << '\n';
    }
    return out.str();
}

} // namespace metasel
