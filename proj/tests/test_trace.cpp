#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "metasel/metad.hpp"
#include "metasel/scenario.hpp"
#include "metasel/trace.hpp"

using namespace metasel;

namespace {

const char* kSmallJsonl =
    R"({"t":1,"y":3,"m":{"alex":{"pred":3,"conf":0.91},"vit":{"pred":5,"conf":0.42}}}
{"t":2,"y":"cat","m":{"alex":{"pred":"cat","conf":0.77},"vit":{"pred":"cat","conf":0.8}}}
{"t":3,"y":0,"m":{"alex":{"pred":1,"conf":0.5},"vit":{"pred":0,"conf":0.33}}}
)";

AlignedTrace random_trace(Rng& rng, std::size_t n, bool awkward_labels) {
    AlignedTrace trace;
    for (std::size_t i = 0; i < n; ++i) {
        TrialRecord row;
        row.t = static_cast<long long>(i) + 1;
        const int label = static_cast<int>(uniform01(rng) * 6);
        row.label = awkward_labels && label == 0 ? "a,\"b\" c" : std::to_string(label);
        row.pred_a = uniform01(rng) < 0.7 ? row.label : std::to_string(label + 1);
        row.pred_b = uniform01(rng) < 0.6 ? row.label : std::to_string(label + 2);
        row.conf_a = 0.125 + 0.875 * uniform01(rng);
        row.conf_b = 0.125 + 0.875 * uniform01(rng);
        trace.rows.push_back(std::move(row));
    }
    finalize_class_count(trace);
    return trace;
}

PerformanceWindow window_for_model_a(const AlignedTrace& trace, long long from, long long to) {
    PerformanceWindow window(static_cast<std::size_t>(to - from + 1));
    for (long long t = from; t <= to; ++t) {
        const auto& row = trace.rows[static_cast<std::size_t>(t - 1)];
        window.push(row.conf_a, row.correct_a() ? 1 : 0);
    }
    return window;
}

} // namespace

TEST_CASE("a small jsonl document parses") {
    const AlignedTrace trace = parse_trace(kSmallJsonl, TraceFormat::Jsonl);
    REQUIRE(trace.size() == 3);
    CHECK(trace.model_names[0] == "alex");
    CHECK(trace.model_names[1] == "vit");
    CHECK(trace.rows[0].label == "3");
    CHECK(trace.rows[1].label == "cat");
    CHECK(trace.rows[0].correct_a());
    CHECK_FALSE(trace.rows[0].correct_b());
    CHECK(trace.rows[2].correct_b());
    // conf 0.33 forces at least 4 classes; labels add nothing beyond that
    CHECK(trace.class_count == 4);
}

TEST_CASE("confidence outside (0,1] is rejected with the line number") {
    const std::string bad =
        R"({"t":1,"y":1,"m":{"a":{"pred":1,"conf":1.2},"b":{"pred":1,"conf":0.5}}})";
    try {
        parse_trace(bad, TraceFormat::Jsonl);
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(e.line == 1);
        CHECK(std::string(e.what()).find("out of range") != std::string::npos);
    }
}

TEST_CASE("non-contiguous trial indices are rejected") {
    const std::string bad =
        R"({"t":1,"y":1,"m":{"a":{"pred":1,"conf":0.9},"b":{"pred":1,"conf":0.5}}}
{"t":3,"y":1,"m":{"a":{"pred":1,"conf":0.9},"b":{"pred":1,"conf":0.5}}})";
    try {
        parse_trace(bad, TraceFormat::Jsonl);
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("non-contiguous") != std::string::npos);
    }
}

TEST_CASE("a missing model column is rejected by name") {
    const std::string bad =
        R"({"t":1,"y":1,"m":{"a":{"pred":1,"conf":0.9},"b":{"pred":1,"conf":0.5}}}
{"t":2,"y":1,"m":{"a":{"pred":1,"conf":0.9},"c":{"pred":1,"conf":0.5}}})";
    CHECK_THROWS_WITH(parse_trace(bad, TraceFormat::Jsonl),
                      Catch::Matchers::ContainsSubstring("missing model column 'b'"));
}

TEST_CASE("malformed json reports its line") {
    const std::string bad =
        R"({"t":1,"y":1,"m":{"a":{"pred":1,"conf":0.9},"b":{"pred":1,"conf":0.5}}}
this is not json)";
    try {
        parse_trace(bad, TraceFormat::Jsonl);
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("csv requires the exact header") {
    CHECK_THROWS_WITH(parse_trace("t,y,pred_a,conf_a\n1,1,1,0.5\n", TraceFormat::Csv),
                      Catch::Matchers::ContainsSubstring("header"));
}

TEST_CASE("csv rows parse with rfc-4180 quoting") {
    const std::string text =
        "t,y,pred_a,conf_a,pred_b,conf_b\n"
        "1,\"a,\"\"b\"\"\",x,0.5,y,0.25\n";
    const AlignedTrace trace = parse_trace(text, TraceFormat::Csv);
    REQUIRE(trace.size() == 1);
    CHECK(trace.rows[0].label == "a,\"b\"");
}

TEST_CASE("traces round-trip in both formats") {
    Rng rng(8);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 40);
        const AlignedTrace trace = random_trace(rng, n, rep % 3 == 0);
        const AlignedTrace via_jsonl = parse_trace(write_trace(trace, TraceFormat::Jsonl),
                                                   TraceFormat::Jsonl);
        const AlignedTrace via_csv = parse_trace(write_trace(trace, TraceFormat::Csv),
                                                 TraceFormat::Csv);
        REQUIRE(via_jsonl == trace);
        REQUIRE(via_csv == trace);
    }
}

TEST_CASE("awkward numeric-looking labels survive round trips") {
    AlignedTrace trace;
    int t = 1;
    for (const char* label : {"007", "-0", "0", "-12", "3.5", "1e4"}) {
        TrialRecord row;
        row.t = t++;
        row.label = label;
        row.pred_a = label;
        row.pred_b = "x";
        row.conf_a = 0.5;
        row.conf_b = 0.5;
        trace.rows.push_back(std::move(row));
    }
    finalize_class_count(trace);
    CHECK(parse_trace(write_trace(trace, TraceFormat::Jsonl), TraceFormat::Jsonl) == trace);
    CHECK(parse_trace(write_trace(trace, TraceFormat::Csv), TraceFormat::Csv) == trace);
}

TEST_CASE("custom model names survive a jsonl round trip") {
    Rng rng(9);
    AlignedTrace trace = random_trace(rng, 10, false);
    trace.model_names = {"efficientnet", "vit"};
    const AlignedTrace back = parse_trace(write_trace(trace, TraceFormat::Jsonl), TraceFormat::Jsonl);
    CHECK(back == trace);
}

TEST_CASE("generation is deterministic in the seed") {
    ScenarioSpec spec = bundled_scenario("drift-at-700");
    spec.seed = 99;
    const AlignedTrace a = generate(spec);
    const AlignedTrace b = generate(spec);
    CHECK(a == b);
    spec.seed = 100;
    CHECK_FALSE(generate(spec) == a);
}

TEST_CASE("a chance segment converges to coin-flip accuracy") {
    ScenarioSpec spec;
    spec.seed = 5;
    spec.class_count = 10;
    spec.models[0] = {"a", {Segment{10000, 0.0, 1.0, 4, 1.0}}};
    spec.models[1] = {"b", {Segment{10000, 0.0, 1.0, 4, 1.0}}};
    const AlignedTrace trace = generate(spec);
    long long correct = 0;
    for (const auto& row : trace.rows) correct += row.correct_a() ? 1 : 0;
    CHECK(static_cast<double>(correct) / 10000.0 == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("generated traces satisfy the schema invariants") {
    Rng rng(77);
    for (int rep = 0; rep < 30; ++rep) {
        ScenarioSpec spec;
        spec.seed = 1000 + rep;
        spec.class_count = 2 + static_cast<int>(uniform01(rng) * 10);
        const int mode = static_cast<int>(uniform01(rng) * 3);
        spec.mode = mode == 0 ? CorrelationMode::Independent
                  : mode == 1 ? CorrelationMode::Complementary
                              : CorrelationMode::SharedNoise;
        spec.period = 1 + static_cast<long long>(uniform01(rng) * 50);
        spec.low_dprime = -1.0 + 2.0 * uniform01(rng);
        spec.rho = uniform01(rng);
        long long total = 0;
        for (int k = 0; k < 2; ++k) {
            std::vector<Segment> segments;
            long long length = 0;
            const int n_segments = 1 + static_cast<int>(uniform01(rng) * 3);
            for (int s = 0; s < n_segments; ++s) {
                Segment seg;
                seg.length = 1 + static_cast<long long>(uniform01(rng) * 200);
                seg.dprime = 3.0 * uniform01(rng);
                seg.metad_ratio = 2.0 * uniform01(rng);
                seg.bins = 2 + static_cast<int>(uniform01(rng) * 4);
                seg.criteria_spread = 0.3 + uniform01(rng);
                segments.push_back(seg);
                length += seg.length;
            }
            if (k == 0) {
                total = length;
            } else if (segments.back().length + (total - length) >= 1) {
                segments.back().length += total - length; // equalize totals
            } else {
                segments.assign(1, Segment{total, 1.0, 1.0, 4, 1.0});
            }
            spec.models[k] = {k == 0 ? "a" : "b", segments};
        }
        const AlignedTrace trace = generate(spec);
        REQUIRE(trace.size() == static_cast<std::size_t>(total));
        const double floor_conf = 1.0 / spec.class_count;
        long long expected_t = 1;
        for (const auto& row : trace.rows) {
            REQUIRE(row.t == expected_t++);
            REQUIRE(row.conf_a >= floor_conf - 1e-12);
            REQUIRE(row.conf_a <= 1.0);
            REQUIRE(row.conf_b >= floor_conf - 1e-12);
            REQUIRE(row.conf_b <= 1.0);
            const int label = std::stoi(row.label);
            REQUIRE(label >= 0);
            REQUIRE(label < spec.class_count);
        }
    }
}

TEST_CASE("a stationary segment's meta-d' is recoverable from the trace") {
    ScenarioSpec spec;
    spec.seed = 40;
    spec.class_count = 10;
    spec.models[0] = {"a", {Segment{5000, 2.0, 0.75, 4, 1.0}}}; // meta_d = 1.5
    spec.models[1] = {"b", {Segment{5000, 2.0, 1.0, 4, 1.0}}};
    const AlignedTrace trace = generate(spec);
    const MetaDFit fit = fit_meta_d(window_for_model_a(trace, 1, 5000), 4);
    CHECK(std::fabs(fit.meta_d - 1.5) < 0.2);
}

TEST_CASE("the drift scenario shows the meta-d' drop after trial 700") {
    ScenarioSpec spec = bundled_scenario("drift-at-700");
    spec.seed = 3;
    const AlignedTrace trace = generate(spec);
    const MetaDFit before = fit_meta_d(window_for_model_a(trace, 401, 700), 4);
    const MetaDFit after = fit_meta_d(window_for_model_a(trace, 701, 1000), 4);
    CHECK(before.meta_d > 1.4);
    CHECK(after.meta_d < 0.8);
    CHECK(before.meta_d - after.meta_d > 1.0);
}

TEST_CASE("the complementary scenario alternates expertise by parity") {
    ScenarioSpec spec = bundled_scenario("complementary-1000");
    spec.seed = 12;
    const AlignedTrace trace = generate(spec);
    long long even_correct_a = 0;
    long long odd_correct_a = 0;
    for (const auto& row : trace.rows) {
        if (row.t % 2 == 0) even_correct_a += row.correct_a() ? 1 : 0;
        else odd_correct_a += row.correct_a() ? 1 : 0;
    }
    CHECK(even_correct_a / 500.0 == Catch::Approx(0.95).margin(0.04));
    CHECK(odd_correct_a / 500.0 == Catch::Approx(0.30).margin(0.07));
}

TEST_CASE("scenario json parsing and validation") {
    const nlohmann::json good = nlohmann::json::parse(R"({
        "name": "demo",
        "seed": 4,
        "class_count": 5,
        "correlation": {"mode": "shared-noise", "rho": 0.4},
        "models": [
            {"name": "a", "segments": [{"length": 50, "dprime": 1.0}]},
            {"name": "b", "segments": [{"length": 50, "dprime": 2.0, "metad_ratio": 0.5}]}
        ]
    })");
    const ScenarioSpec spec = scenario_from_json(good);
    CHECK(spec.mode == CorrelationMode::SharedNoise);
    CHECK(spec.models[1].segments[0].metad_ratio == 0.5);
    CHECK(generate(spec).size() == 50);

    nlohmann::json bad = good;
    bad["models"][0]["segments"][0]["length"] = -5;
    CHECK_THROWS_AS(scenario_from_json(bad), std::invalid_argument);

    nlohmann::json mismatched = good;
    mismatched["models"][0]["segments"][0]["length"] = 49;
    CHECK_THROWS_AS(scenario_from_json(mismatched), std::invalid_argument);
}

TEST_CASE("unknown bundled scenarios are rejected") {
    CHECK_THROWS_WITH(bundled_scenario("nope"),
                      Catch::Matchers::ContainsSubstring("complementary-1000"));
}
