#pragma once

// Bounded sliding window of (confidence, reward) pairs for one model.

#include <cstddef>
#include <deque>
#include <stdexcept>

namespace metasel {

class PerformanceWindow {
public:
    struct Entry {
        double confidence; // in [0, 1]
        int reward;        // 0 or 1
    };

    explicit PerformanceWindow(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) {
            throw std::invalid_argument("PerformanceWindow: capacity must be positive");
        }
    }

    /// Append the newest entry, evicting the oldest when full.
    void push(double confidence, int reward) {
        if (!(confidence >= 0.0 && confidence <= 1.0)) {
            throw std::invalid_argument("PerformanceWindow: confidence must be in [0, 1]");
        }
        if (reward != 0 && reward != 1) {
            throw std::invalid_argument("PerformanceWindow: reward must be 0 or 1");
        }
        if (entries_.size() == capacity_) entries_.pop_front();
        entries_.push_back({confidence, reward});
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }

    /// Oldest to newest.
    const std::deque<Entry>& entries() const { return entries_; }

private:
    std::size_t capacity_;
    std::deque<Entry> entries_;
};

} // namespace metasel
