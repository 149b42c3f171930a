#pragma once

// Seeded synthetic trace generator. Each model follows a segment schedule of
// (length, d', meta-d ratio); correlation modes couple the two models'
// outcomes: independent draws, complementary expertise alternating by
// period, or shared evidence noise.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "metasel/normal.hpp"
#include "metasel/rng.hpp"
#include "metasel/sdt.hpp"
#include "metasel/trace.hpp"

namespace metasel {

struct Segment {
    long long length = 0;
    double dprime = 0.0;
    double metad_ratio = 1.0;
    int bins = 4;
    double criteria_spread = 1.0;
};

struct ModelScenario {
    std::string name;
    std::vector<Segment> segments;

    long long total_length() const {
        long long total = 0;
        for (const auto& s : segments) total += s.length;
        return total;
    }
};

enum class CorrelationMode { Independent, Complementary, SharedNoise };

struct ScenarioSpec {
    std::string name;
    std::uint64_t seed = 0;
    int class_count = 10;
    CorrelationMode mode = CorrelationMode::Independent;
    long long period = 1;     // complementary: phase length in trials
    double low_dprime = 0.0;  // complementary: type-1 d' of the unboosted model
    double rho = 0.0;         // shared-noise: evidence correlation
    std::array<ModelScenario, 2> models;

    void validate() const {
        if (class_count < 2) throw std::invalid_argument("scenario: class_count must be >= 2");
        for (const auto& model : models) {
            if (model.segments.empty()) throw std::invalid_argument("scenario: model needs segments");
            for (const auto& seg : model.segments) {
                if (seg.length < 1) throw std::invalid_argument("scenario: segment length must be >= 1");
                if (seg.metad_ratio < 0.0) throw std::invalid_argument("scenario: metad_ratio must be >= 0");
                if (seg.bins < 2) throw std::invalid_argument("scenario: bins must be >= 2");
                if (seg.criteria_spread <= 0.0) throw std::invalid_argument("scenario: criteria_spread must be > 0");
                if (!std::isfinite(seg.dprime)) throw std::invalid_argument("scenario: dprime must be finite");
            }
        }
        if (models[0].total_length() != models[1].total_length()) {
            throw std::invalid_argument("scenario: model segment lengths must sum to the same trace length");
        }
        if (mode == CorrelationMode::Complementary && period < 1) {
            throw std::invalid_argument("scenario: period must be >= 1");
        }
        if (mode == CorrelationMode::SharedNoise && !(rho >= 0.0 && rho <= 1.0)) {
            throw std::invalid_argument("scenario: rho must be in [0, 1]");
        }
    }
};

namespace detail {

inline const Segment& segment_at(const ModelScenario& model, long long t) {
    long long cum = 0;
    for (const auto& seg : model.segments) {
        cum += seg.length;
        if (t <= cum) return seg;
    }
    return model.segments.back();
}

inline Type2Model type2_from_segment(const Segment& seg, double meta_d) {
    Type2Model model;
    model.meta_d = std::clamp(meta_d, -kMetaDBound, kMetaDBound);
    // criteria sit on the evidence axis scaled by the segment's task
    // sensitivity, so they stay put when only metacognition drifts
    const double scale = seg.criteria_spread * std::max(std::abs(seg.dprime), 1.0);
    for (int j = 2; j <= seg.bins; ++j) {
        model.criteria.push_back((j - 1) * scale / seg.bins);
    }
    return model;
}

/// Bin midpoint mapped onto the admissible confidence range [1/C, 1].
inline double bin_confidence(int bin, int num_bins, int class_count) {
    const double floor_conf = 1.0 / class_count;
    const double fraction = (bin - 0.5) / num_bins;
    return floor_conf + fraction * (1.0 - floor_conf);
}

inline std::string random_class(int class_count, Rng& rng) {
    const int c = static_cast<int>(uniform01(rng) * class_count);
    return std::to_string(std::min(c, class_count - 1));
}

inline std::string wrong_class(const std::string& label, int class_count, Rng& rng) {
    const int truth = std::stoi(label);
    int c = static_cast<int>(uniform01(rng) * (class_count - 1));
    c = std::min(c, class_count - 2);
    if (c >= truth) ++c;
    return std::to_string(c);
}

} // namespace detail

/// Deterministic given the spec's seed. Per trial: ground-truth label, then
/// per model a correctness draw at the phase-effective d' and a confidence
/// bin from the segment's type-2 conditional.
inline AlignedTrace generate(const ScenarioSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const long long n = spec.models[0].total_length();

    AlignedTrace trace;
    trace.class_count = spec.class_count;
    trace.model_names = {spec.models[0].name.empty() ? "model_a" : spec.models[0].name,
                         spec.models[1].name.empty() ? "model_b" : spec.models[1].name};
    trace.rows.reserve(static_cast<std::size_t>(n));

    for (long long t = 1; t <= n; ++t) {
        TrialRecord record;
        record.t = t;
        record.label = detail::random_class(spec.class_count, rng);

        // shared evidence noise is drawn once per trial
        double shared_z = 0.0;
        if (spec.mode == CorrelationMode::SharedNoise) shared_z = normal01(rng);

        for (int k = 0; k < 2; ++k) {
            const Segment& seg = detail::segment_at(spec.models[k], t);
            double effective_dprime = seg.dprime;
            if (spec.mode == CorrelationMode::Complementary) {
                // equal phases of `period` trials; for period 1, model A is
                // the boosted expert on even trials
                const long long phase = ((t - 1) / spec.period) % 2;
                const bool boosted = phase == (k == 0 ? 1 : 0);
                if (!boosted) effective_dprime = spec.low_dprime;
            }

            bool correct = false;
            if (spec.mode == CorrelationMode::SharedNoise) {
                const double z = std::sqrt(spec.rho) * shared_z +
                                 std::sqrt(1.0 - spec.rho) * normal01(rng);
                correct = z < 0.5 * effective_dprime;
            } else {
                correct = uniform01(rng) < std_normal_cdf(0.5 * effective_dprime);
            }

            // confidence stays tied to the segment's nominal sensitivity, so a
            // complementary model is equally self-aware in both phases
            const Type2Model type2 = detail::type2_from_segment(seg, seg.metad_ratio * seg.dprime);
            const int bin = sample_conf_bin(type2, correct, rng);
            const double conf = detail::bin_confidence(bin, seg.bins, spec.class_count);
            const std::string pred =
                correct ? record.label : detail::wrong_class(record.label, spec.class_count, rng);
            if (k == 0) {
                record.pred_a = pred;
                record.conf_a = conf;
            } else {
                record.pred_b = pred;
                record.conf_b = conf;
            }
        }
        trace.rows.push_back(std::move(record));
    }
    return trace;
}

inline CorrelationMode correlation_mode_from_string(std::string_view text) {
    if (text == "independent") return CorrelationMode::Independent;
    if (text == "complementary") return CorrelationMode::Complementary;
    if (text == "shared-noise" || text == "shared_noise") return CorrelationMode::SharedNoise;
    throw std::invalid_argument("scenario: unknown correlation mode '" + std::string(text) + "'");
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec spec;
    spec.name = j.value("name", std::string{});
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.class_count = j.value("class_count", 10);
    if (j.contains("correlation")) {
        const auto& corr = j.at("correlation");
        spec.mode = correlation_mode_from_string(corr.value("mode", "independent"));
        spec.period = corr.value("period", 1LL);
        spec.low_dprime = corr.value("low_dprime", 0.0);
        spec.rho = corr.value("rho", 0.0);
    }
    if (!j.contains("models") || !j.at("models").is_array() || j.at("models").size() != 2) {
        throw std::invalid_argument("scenario: 'models' must be an array of two entries");
    }
    for (int k = 0; k < 2; ++k) {
        const auto& jm = j.at("models")[k];
        ModelScenario model;
        model.name = jm.value("name", k == 0 ? "model_a" : "model_b");
        if (!jm.contains("segments") || !jm.at("segments").is_array()) {
            throw std::invalid_argument("scenario: each model needs a 'segments' array");
        }
        for (const auto& js : jm.at("segments")) {
            Segment seg;
            seg.length = js.value("length", 0LL);
            seg.dprime = js.value("dprime", 0.0);
            seg.metad_ratio = js.value("metad_ratio", 1.0);
            seg.bins = js.value("bins", 4);
            seg.criteria_spread = js.value("criteria_spread", 1.0);
            model.segments.push_back(seg);
        }
        spec.models[k] = std::move(model);
    }
    spec.validate();
    return spec;
}

/// Built-in scenarios used throughout the test suite and docs.
inline ScenarioSpec bundled_scenario(std::string_view name) {
    if (name == "complementary-1000") {
        // Two experts with alternating competence (accuracy 0.95 when boosted,
        // 0.30 otherwise) and near-perfectly diagnostic confidence.
        ScenarioSpec spec;
        spec.name = "complementary-1000";
        spec.class_count = 10;
        spec.mode = CorrelationMode::Complementary;
        spec.period = 1;
        spec.low_dprime = 2.0 * std_normal_quantile(0.30);
        const double high_dprime = 2.0 * std_normal_quantile(0.95);
        // spread chosen so the single criterion lands at 1.0 on the evidence
        // axis, keeping the two confidence levels near-perfectly diagnostic
        const Segment seg{1000, high_dprime, kMetaDBound / high_dprime, 2, 2.0 / high_dprime};
        spec.models[0] = {"model_a", {seg}};
        spec.models[1] = {"model_b", {seg}};
        return spec;
    }
    if (name == "drift-at-700") {
        // Model A's confidence stops tracking correctness at trial 700 while
        // task accuracy stays flat; model B is stationary throughout.
        ScenarioSpec spec;
        spec.name = "drift-at-700";
        spec.class_count = 10;
        spec.mode = CorrelationMode::Independent;
        spec.models[0] = {"model_a", {Segment{700, 2.0, 1.0, 4, 0.9}, Segment{300, 2.0, 0.1, 4, 0.9}}};
        spec.models[1] = {"model_b", {Segment{1000, 2.0, 1.0, 4, 0.9}}};
        return spec;
    }
    throw std::invalid_argument("unknown bundled scenario '" + std::string(name) +
                                "' (available: complementary-1000, drift-at-700)");
}

} // namespace metasel
