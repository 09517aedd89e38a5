#pragma once

// Class-transition tracking: a per-sample prediction bank plus a rolling
// window of per-batch transition events whose average defines class
// similarity.

#include "soc/errors.hpp"
#include "soc/label.hpp"
#include "soc/similarity.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace soc {

inline constexpr ClassIndex kUnobserved = std::numeric_limits<ClassIndex>::max();
inline constexpr const char* kLedgerMagic = "SOC-CTT-v1";

/// Last argmax prediction per sample id.
template <typename Id>
class PredictionBank {
public:
    ClassIndex get(const Id& id) const {
        auto it = last_.find(id);
        return it == last_.end() ? kUnobserved : it->second;
    }

    void set(const Id& id, ClassIndex c) { last_[id] = c; }
    std::size_t size() const noexcept { return last_.size(); }
    const std::map<Id, ClassIndex>& entries() const noexcept { return last_; }

    friend bool operator==(const PredictionBank&, const PredictionBank&) = default;

private:
    std::map<Id, ClassIndex> last_;
};

struct Transition {
    ClassIndex from;
    ClassIndex to;

    friend bool operator==(const Transition&, const Transition&) = default;
};

using BatchTransitions = std::vector<Transition>;

class TransitionLedger {
public:
    TransitionLedger(std::size_t num_classes, std::size_t window_capacity)
        : num_classes_(num_classes), capacity_(window_capacity), running_sum_(num_classes * num_classes, 0) {
        if (num_classes < 2) throw InvalidClass("ledger needs K >= 2");
        if (window_capacity == 0) throw ShapeMismatch("ledger window capacity must be >= 1");
    }

    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t window_size() const noexcept { return window_.size(); }
    std::uint64_t version() const noexcept { return version_; }
    const std::deque<BatchTransitions>& window() const noexcept { return window_; }

    /// Summed (m -> n) count over the batches currently in the window.
    std::int64_t count(ClassIndex m, ClassIndex n) const noexcept { return running_sum_[m * num_classes_ + n]; }

    /// Appends one batch, evicting the oldest when the window is full.
    void push(BatchTransitions batch) {
        for (const auto& t : batch) {
            if (t.from >= num_classes_ || t.to >= num_classes_) throw InvalidClass("transition class out of range");
            if (t.from == t.to) throw InvalidClass("self-transition recorded");
        }
        if (window_.size() == capacity_) {
            for (const auto& t : window_.front()) --running_sum_[t.from * num_classes_ + t.to];
            window_.pop_front();
        }
        for (const auto& t : batch) ++running_sum_[t.from * num_classes_ + t.to];
        window_.push_back(std::move(batch));
        ++version_;
    }

    /// (avg_mn + avg_nm) / 2, averaging over the batches actually in the
    /// window. Returns kMaxSimilarity on the diagonal.
    double similarity(ClassIndex m, ClassIndex n) const {
        if (m >= num_classes_ || n >= num_classes_) throw InvalidClass("similarity query out of range");
        if (m == n) return kMaxSimilarity;
        if (window_.empty()) return 0.0;
        const double len = static_cast<double>(window_.size());
        return (static_cast<double>(count(m, n)) / len + static_cast<double>(count(n, m)) / len) / 2.0;
    }

    SimilarityMatrix similarity_matrix() const {
        std::vector<double> values(num_classes_ * num_classes_, 0.0);
        for (ClassIndex m = 0; m < num_classes_; ++m) {
            for (ClassIndex n = 0; n < num_classes_; ++n) {
                if (m != n) values[m * num_classes_ + n] = similarity(m, n);
            }
        }
        return SimilarityMatrix(num_classes_, std::move(values), version_);
    }

    nlohmann::json to_json() const {
        nlohmann::json window = nlohmann::json::array();
        for (const auto& batch : window_) {
            nlohmann::json events = nlohmann::json::array();
            for (const auto& t : batch) events.push_back({t.from, t.to});
            window.push_back(std::move(events));
        }
        return {{"magic", kLedgerMagic},
                {"K", num_classes_},
                {"N_b", capacity_},
                {"version", version_},
                {"window", std::move(window)}};
    }

    static TransitionLedger from_json(const nlohmann::json& j) {
        try {
            if (j.at("magic").get<std::string>() != kLedgerMagic) throw SchemaError("ledger snapshot: bad magic");
            TransitionLedger ledger(j.at("K").get<std::size_t>(), j.at("N_b").get<std::size_t>());
            const auto& window = j.at("window");
            if (window.size() > ledger.capacity_) throw SchemaError("ledger snapshot: window exceeds N_b");
            for (const auto& events : window) {
                BatchTransitions batch;
                for (const auto& e : events) batch.push_back({e.at(0).get<ClassIndex>(), e.at(1).get<ClassIndex>()});
                ledger.push(std::move(batch));
            }
            ledger.version_ = j.at("version").get<std::uint64_t>();
            return ledger;
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(std::string("ledger snapshot: ") + e.what());
        }
    }

    friend bool operator==(const TransitionLedger&, const TransitionLedger&) = default;

private:
    std::size_t num_classes_;
    std::size_t capacity_;
    std::deque<BatchTransitions> window_;
    std::vector<std::int64_t> running_sum_;
    std::uint64_t version_ = 0;
};

/// Records one batch of argmax predictions. A sample seen for the first
/// time only seeds the bank; a changed prediction m -> n logs a transition.
/// The ledger advances by exactly one batch even when no event occurs.
template <typename Id>
BatchTransitions observe_batch(TransitionLedger& ledger, PredictionBank<Id>& bank,
                               std::span<const std::pair<Id, ClassIndex>> batch) {
    for (const auto& [id, c] : batch) {
        if (c >= ledger.num_classes()) {
            throw InvalidClass("predicted class " + std::to_string(c) + " out of range for K=" +
                               std::to_string(ledger.num_classes()));
        }
    }
    BatchTransitions events;
    for (const auto& [id, c] : batch) {
        const ClassIndex last = bank.get(id);
        if (last != kUnobserved && last != c) events.push_back({last, c});
        bank.set(id, c);
    }
    ledger.push(events);
    return events;
}

template <typename Id>
BatchTransitions observe_batch(TransitionLedger& ledger, PredictionBank<Id>& bank,
                               const std::vector<std::pair<Id, ClassIndex>>& batch) {
    return observe_batch(ledger, bank, std::span<const std::pair<Id, ClassIndex>>(batch));
}

}  // namespace soc
