#pragma once

// Declarative run configuration: an INI-style file with [engine], [bandit]
// and [estimator] sections. Every default equals the selection loop's
// stated constants, so an empty file is a valid config.

#include <charconv>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "metasel/engine.hpp"

namespace metasel {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

inline int to_int(const std::string& value, const std::string& key) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw std::invalid_argument("config: " + key + " must be an integer, got '" + value + "'");
    }
    return out;
}

inline double to_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: " + key + " must be a number, got '" + value + "'");
    }
}

inline std::vector<int> to_int_list(const std::string& value, const std::string& key) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        out.push_back(to_int(trim(item), key));
    }
    if (out.empty()) throw std::invalid_argument("config: " + key + " must list at least one value");
    return out;
}

} // namespace detail

inline Policy policy_from_string(std::string_view text) {
    if (text == "linucb") return Policy::LinUCB;
    if (text == "lints") return Policy::LinTS;
    throw std::invalid_argument("unknown policy '" + std::string(text) + "' (expected linucb or lints)");
}

inline EngineConfig parse_config(std::istream& in) {
    EngineConfig cfg;
    std::string line;
    std::string section;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string text = detail::trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        if (text.front() == '[' && text.back() == ']') {
            section = detail::trim(text.substr(1, text.size() - 2));
            if (section != "engine" && section != "bandit" && section != "estimator") {
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        const std::string scoped = section.empty() ? key : section + "." + key;

        if (scoped == "engine.burn_in") cfg.burn_in = detail::to_int(value, scoped);
        else if (scoped == "engine.window") cfg.window = detail::to_int(value, scoped);
        else if (scoped == "engine.update_freq") cfg.update_freq = detail::to_int(value, scoped);
        else if (scoped == "engine.checkpoints") cfg.checkpoints = detail::to_int_list(value, scoped);
        else if (scoped == "estimator.bins") cfg.bins = detail::to_int(value, scoped);
        else if (scoped == "bandit.policy") cfg.bandit.policy = policy_from_string(value);
        else if (scoped == "bandit.alpha") cfg.bandit.alpha = detail::to_double(value, scoped);
        else if (scoped == "bandit.sigma") cfg.bandit.sigma = detail::to_double(value, scoped);
        else if (scoped == "bandit.epsilon") cfg.bandit.epsilon = detail::to_double(value, scoped);
        else if (scoped == "bandit.seed") cfg.bandit.rng_seed = static_cast<std::uint64_t>(
                     detail::to_double(value, scoped));
        else {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + scoped + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline EngineConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

} // namespace metasel
