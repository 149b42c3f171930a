#pragma once

// Aligned two-model trace: per trial the ground-truth label plus each
// model's prediction and confidence. Parsing validates contiguity and
// confidence ranges; serialization is deterministic and round-trips
// bit-exactly in both JSONL and CSV.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace metasel {

struct TrialRecord {
    long long t = 0;
    std::string label;
    std::string pred_a;
    double conf_a = 0.0;
    std::string pred_b;
    double conf_b = 0.0;

    bool correct_a() const { return pred_a == label; }
    bool correct_b() const { return pred_b == label; }

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct AlignedTrace {
    std::vector<TrialRecord> rows;
    std::array<std::string, 2> model_names{"model_a", "model_b"};
    int class_count = 2;

    std::size_t size() const { return rows.size(); }

    friend bool operator==(const AlignedTrace&, const AlignedTrace&) = default;
};

enum class TraceFormat { Jsonl, Csv };

struct TraceError : std::runtime_error {
    TraceError(long long line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line(line) {}
    long long line;
};

namespace detail {

inline std::string format_double(double value) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, end);
}

// canonical decimal integers only: "007" or "-0" must stay strings so a
// serialize/parse cycle preserves them byte for byte
inline bool is_decimal_integer(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    if (s[i] == '0' && (s.size() > i + 1 || i == 1)) return false;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline nlohmann::ordered_json label_to_json(const std::string& label) {
    if (is_decimal_integer(label)) {
        long long value = 0;
        std::from_chars(label.data(), label.data() + label.size(), value);
        return value;
    }
    return label;
}

inline std::string label_from_json(const nlohmann::ordered_json& j, long long line, const char* field) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    throw TraceError(line, std::string(field) + " must be an integer or string");
}

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> csv_split(const std::string& line, long long line_no) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            if (!current.empty()) throw TraceError(line_no, "stray quote inside unquoted field");
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (quoted) throw TraceError(line_no, "unterminated quoted field");
    fields.push_back(std::move(current));
    return fields;
}

inline double parse_conf(std::string_view text, long long line_no, const char* field) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw TraceError(line_no, std::string(field) + " is not a number");
    }
    return value;
}

inline void check_conf_range(double conf, long long line_no, const char* field) {
    if (!(conf > 0.0 && conf <= 1.0)) {
        throw TraceError(line_no, std::string(field) + " out of range (0, 1]");
    }
}

} // namespace detail

/// Smallest class count consistent with observed labels and confidences.
inline void finalize_class_count(AlignedTrace& trace) {
    std::unordered_set<std::string> labels;
    double min_conf = 1.0;
    for (const auto& row : trace.rows) {
        labels.insert(row.label);
        min_conf = std::min({min_conf, row.conf_a, row.conf_b});
    }
    int count = static_cast<int>(labels.size());
    if (min_conf > 0.0) {
        count = std::max(count, static_cast<int>(std::ceil(1.0 / min_conf - 1e-9)));
    }
    trace.class_count = std::max(2, count);
}

inline AlignedTrace parse_trace_jsonl(std::istream& in) {
    AlignedTrace trace;
    std::string line;
    long long line_no = 0;
    bool names_set = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::ordered_json row = nlohmann::ordered_json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            throw TraceError(line_no, "malformed JSON object");
        }
        if (!row.contains("t") || !row["t"].is_number_integer()) {
            throw TraceError(line_no, "missing integer field 't'");
        }
        if (!row.contains("y")) throw TraceError(line_no, "missing field 'y'");
        if (!row.contains("m") || !row["m"].is_object()) {
            throw TraceError(line_no, "missing model object 'm'");
        }
        const auto& models = row["m"];
        if (!names_set) {
            if (models.size() != 2) throw TraceError(line_no, "expected exactly two models");
            int i = 0;
            for (auto it = models.begin(); it != models.end(); ++it, ++i) {
                trace.model_names[i] = it.key();
            }
            names_set = true;
        }

        TrialRecord record;
        record.t = row["t"].get<long long>();
        if (record.t != static_cast<long long>(trace.rows.size()) + 1) {
            throw TraceError(line_no, "non-contiguous trial index t=" + std::to_string(record.t));
        }
        record.label = detail::label_from_json(row["y"], line_no, "label");

        for (int i = 0; i < 2; ++i) {
            const std::string& name = trace.model_names[i];
            if (!models.contains(name)) {
                throw TraceError(line_no, "missing model column '" + name + "'");
            }
            const auto& entry = models[name];
            if (!entry.is_object() || !entry.contains("pred") || !entry.contains("conf") ||
                !entry["conf"].is_number()) {
                throw TraceError(line_no, "model '" + name + "' needs pred and numeric conf");
            }
            const std::string pred = detail::label_from_json(entry["pred"], line_no, "pred");
            const double conf = entry["conf"].get<double>();
            detail::check_conf_range(conf, line_no, "conf");
            if (i == 0) {
                record.pred_a = pred;
                record.conf_a = conf;
            } else {
                record.pred_b = pred;
                record.conf_b = conf;
            }
        }
        trace.rows.push_back(std::move(record));
    }
    if (trace.rows.empty()) throw TraceError(line_no, "empty trace");
    finalize_class_count(trace);
    return trace;
}

inline AlignedTrace parse_trace_csv(std::istream& in) {
    static constexpr std::string_view kHeader = "t,y,pred_a,conf_a,pred_b,conf_b";
    AlignedTrace trace;
    std::string line;
    long long line_no = 0;
    if (!std::getline(in, line)) throw TraceError(1, "missing CSV header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) {
        throw TraceError(1, std::string("CSV header must be exactly '") + std::string(kHeader) + "'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::csv_split(line, line_no);
        if (fields.size() != 6) {
            throw TraceError(line_no, "expected 6 fields, got " + std::to_string(fields.size()));
        }
        TrialRecord record;
        {
            auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), record.t);
            if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size()) {
                throw TraceError(line_no, "t is not an integer");
            }
        }
        if (record.t != static_cast<long long>(trace.rows.size()) + 1) {
            throw TraceError(line_no, "non-contiguous trial index t=" + std::to_string(record.t));
        }
        record.label = fields[1];
        record.pred_a = fields[2];
        record.conf_a = detail::parse_conf(fields[3], line_no, "conf_a");
        record.pred_b = fields[4];
        record.conf_b = detail::parse_conf(fields[5], line_no, "conf_b");
        detail::check_conf_range(record.conf_a, line_no, "conf_a");
        detail::check_conf_range(record.conf_b, line_no, "conf_b");
        trace.rows.push_back(std::move(record));
    }
    if (trace.rows.empty()) throw TraceError(line_no, "empty trace");
    finalize_class_count(trace);
    return trace;
}

inline AlignedTrace parse_trace(std::istream& in, TraceFormat format) {
    return format == TraceFormat::Jsonl ? parse_trace_jsonl(in) : parse_trace_csv(in);
}

inline AlignedTrace parse_trace(const std::string& text, TraceFormat format) {
    std::istringstream in(text);
    return parse_trace(in, format);
}

inline void write_trace(std::ostream& out, const AlignedTrace& trace, TraceFormat format) {
    if (format == TraceFormat::Jsonl) {
        for (const auto& row : trace.rows) {
            nlohmann::ordered_json j;
            j["t"] = row.t;
            j["y"] = detail::label_to_json(row.label);
            nlohmann::ordered_json models;
            models[trace.model_names[0]] = {{"pred", detail::label_to_json(row.pred_a)},
                                            {"conf", row.conf_a}};
            models[trace.model_names[1]] = {{"pred", detail::label_to_json(row.pred_b)},
                                            {"conf", row.conf_b}};
            j["m"] = std::move(models);
            out << j.dump() << '\n';
        }
    } else {
        out << "t,y,pred_a,conf_a,pred_b,conf_b\n";
        for (const auto& row : trace.rows) {
            out << row.t << ',' << detail::csv_quote(row.label) << ','
                << detail::csv_quote(row.pred_a) << ',' << detail::format_double(row.conf_a) << ','
                << detail::csv_quote(row.pred_b) << ',' << detail::format_double(row.conf_b) << '\n';
        }
    }
}

inline std::string write_trace(const AlignedTrace& trace, TraceFormat format) {
    std::ostringstream out;
    write_trace(out, trace, format);
    return out.str();
}

} // namespace metasel
