#pragma once

// NDJSON prediction logs: one record per (sample, step),
//   {"schema": "soc-log-v1", "id": "...", "step": 0, "probs": [...]}

#include "soc/errors.hpp"
#include "soc/label.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace soc::app {

inline constexpr const char* kLogSchema = "soc-log-v1";

struct LogRecord {
    std::string id;
    std::uint64_t step = 0;
    ProbVector probs;
    std::size_t line = 0;
};

struct PredictionLog {
    std::size_t num_classes = 0;
    /// records grouped by step, ascending; file order within a step
    std::map<std::uint64_t, std::vector<LogRecord>> steps;

    std::uint64_t final_step() const { return steps.rbegin()->first; }
    const std::vector<LogRecord>& final_records() const { return steps.rbegin()->second; }
};

namespace detail {

[[noreturn]] inline void log_error(std::size_t line, const std::string& what) {
    throw SchemaError("line " + std::to_string(line) + ": " + what);
}

inline LogRecord parse_record(const std::string& text, std::size_t line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        log_error(line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) log_error(line, "expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "schema" && key != "id" && key != "step" && key != "probs") log_error(line, "unknown field '" + key + "'");
    }
    if (!j.contains("schema") || j["schema"] != kLogSchema) {
        log_error(line, std::string("schema must be \"") + kLogSchema + "\"");
    }
    if (!j.contains("id") || !j["id"].is_string()) log_error(line, "id must be a string");
    if (!j.contains("step") || !j["step"].is_number_unsigned()) log_error(line, "step must be a non-negative integer");
    if (!j.contains("probs") || !j["probs"].is_array()) log_error(line, "probs must be an array");

    std::vector<double> probs;
    for (const auto& v : j["probs"]) {
        if (!v.is_number()) log_error(line, "probs must contain numbers only");
        probs.push_back(v.get<double>());
    }
    try {
        return LogRecord{j["id"].get<std::string>(), j["step"].get<std::uint64_t>(), ProbVector(std::move(probs)), line};
    } catch (const InvalidProbVector& e) {
        log_error(line, e.what());
    }
}

}  // namespace detail

/// Blank lines are skipped. Every error names the 1-based line number.
inline PredictionLog read_prediction_log(std::istream& in) {
    PredictionLog log;
    std::set<std::pair<std::string, std::uint64_t>> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); })) continue;
        auto rec = detail::parse_record(text, line);
        if (log.num_classes == 0) {
            log.num_classes = rec.probs.size();
        } else if (rec.probs.size() != log.num_classes) {
            detail::log_error(line, "probs has " + std::to_string(rec.probs.size()) + " entries, expected K=" +
                                        std::to_string(log.num_classes));
        }
        if (!seen.emplace(rec.id, rec.step).second) {
            detail::log_error(line, "duplicate record for id '" + rec.id + "' at step " + std::to_string(rec.step));
        }
        log.steps[rec.step].push_back(std::move(rec));
    }
    if (log.steps.empty()) throw SchemaError("prediction log is empty");
    return log;
}

}  // namespace soc::app
