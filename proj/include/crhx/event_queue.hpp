#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace crhx {

enum class EventKind {
    NewArrival,
    HoldingExpiry,
    DwellExpiry,
    RegionDeadline,
    RetryAttempt,
    HorizonEnd,
};

struct TimedEvent {
    double fire_time = 0.0;
    std::uint64_t sequence = 0; // insertion counter, breaks ties FIFO
    EventKind kind = EventKind::HorizonEnd;
    std::uint64_t call_id = 0;
    int cell = 0;
    int payload = 0; // retry attempt counter
};

using EventHandle = std::uint64_t;
inline constexpr EventHandle kNoEvent = ~std::uint64_t{0};

// Time-ordered event calendar with a simulation clock. Cancellation is lazy:
// cancelled handles are tombstoned and skipped on pop.
class EventQueue {
public:
    double clock() const { return clock_; }

    bool empty() const { return live_ == 0; }
    std::size_t size() const { return live_; }

    EventHandle schedule(double fire_time, EventKind kind,
                         std::uint64_t call_id = 0, int cell = 0,
                         int payload = 0) {
        if (fire_time < clock_) {
            throw std::logic_error("schedule: fire_time precedes clock");
        }
        TimedEvent ev{fire_time, next_sequence_++, kind, call_id, cell, payload};
        heap_.push(ev);
        ++live_;
        return ev.sequence;
    }

    void cancel(EventHandle handle) {
        if (handle == kNoEvent || handle >= next_sequence_) {
            return;
        }
        if (cancelled_.insert(handle).second) {
            --live_;
        }
    }

    // Minimum under (fire_time, sequence); advances the clock. Empty calendar
    // yields nullopt (the drained termination path).
    std::optional<TimedEvent> pop_next() {
        while (!heap_.empty()) {
            TimedEvent ev = heap_.top();
            heap_.pop();
            if (auto it = cancelled_.find(ev.sequence); it != cancelled_.end()) {
                cancelled_.erase(it);
                continue;
            }
            --live_;
            clock_ = ev.fire_time;
            return ev;
        }
        return std::nullopt;
    }

private:
    struct Later {
        bool operator()(const TimedEvent& a, const TimedEvent& b) const {
            if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
            return a.sequence > b.sequence;
        }
    };

    std::priority_queue<TimedEvent, std::vector<TimedEvent>, Later> heap_;
    std::unordered_set<EventHandle> cancelled_;
    std::uint64_t next_sequence_ = 0;
    std::size_t live_ = 0;
    double clock_ = 0.0;
};

} // namespace crhx
