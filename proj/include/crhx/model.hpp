#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "crhx/event_queue.hpp"
#include "crhx/rng.hpp"

namespace crhx {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int other_cell(int cell) { return 1 - cell; }

// Traffic parameters. Rates are per second; dwell rate 0 disables handovers
// entirely (pure loss system, used for Erlang-B cross checks).
struct TrafficConfig {
    double lambda_nc = 1.0;          // new-call arrivals per second per cell
    double mu_d = 1.0 / 120.0;       // inverse mean dwell time
    double delta_h = 1.0 / 240.0;    // inverse mean holding time
    double region_deadline_mean = 10.0; // mean handover-region transit time

    void validate() const {
        if (lambda_nc <= 0.0) throw ConfigError("lambda_nc must be > 0");
        if (mu_d < 0.0) throw ConfigError("mu_d must be >= 0");
        if (delta_h <= 0.0) throw ConfigError("delta_h must be > 0");
        if (region_deadline_mean <= 0.0) {
            throw ConfigError("region_deadline_mean must be > 0");
        }
    }
};

enum class BlockedCallBehavior { Depart, Retry };
enum class PriorityRule { UrgencyDeadline, RandomSnr, Fifo };

// Step-6 admission semantics: the literal flowchart blocks a new call while
// any handover call is still waiting for this cell, even if a channel is
// free; the relaxed variant admits whenever a channel is free.
enum class AdmissionRule { LiteralFlowchart, FreeChannelRelaxed };

struct PolicyConfig {
    bool exchange_enabled = true;
    int buffer_capacity = 2; // Q, per directional buffer
    BlockedCallBehavior blocked_behavior = BlockedCallBehavior::Depart;
    double retry_delay = 5.0;
    int retry_max_attempts = 1;
    PriorityRule priority_rule = PriorityRule::UrgencyDeadline;
    AdmissionRule admission_rule = AdmissionRule::LiteralFlowchart;
    bool eager_exchange = false; // attempt exchange before enqueueing

    void validate() const {
        if (buffer_capacity < 0) throw ConfigError("buffer_capacity must be >= 0");
        if (blocked_behavior == BlockedCallBehavior::Retry) {
            if (retry_delay <= 0.0) throw ConfigError("retry_delay must be > 0");
            if (retry_max_attempts < 1) {
                throw ConfigError("retry_max_attempts must be >= 1");
            }
        }
    }
};

enum class CallState {
    Active,
    QueuedForHandover,
    Completed,
    Blocked,
    ForcedTerminated,
};

struct CallRecord {
    std::uint64_t id = 0;
    int home_cell = 0;
    int serving_cell = 0;
    int target_cell = -1;       // set while a handover is pending
    bool awaiting_region_exit = false; // no recourse: rides old channel to deadline
    double holding_time = 0.0;  // t_h, drawn at origination
    double holding_expiry = 0.0;
    double dwell_expiry = 0.0;
    double snr_rank = 0.0;      // drawn once per call, used by RandomSnr
    CallState state = CallState::Active;
    bool measured = true;       // originated inside the measurement window
    int attempt = 0;            // retry attempt index

    EventHandle holding_event = kNoEvent;
    EventHandle dwell_event = kNoEvent;
    EventHandle deadline_event = kNoEvent;
};

// New-call construction: draws holding and first dwell from the traffic
// parameters. Admission is the protocol's business, not ours.
inline CallRecord new_call(double clock, int cell, const TrafficConfig& traffic,
                           RngStream& rng) {
    CallRecord call;
    call.home_cell = cell;
    call.serving_cell = cell;
    call.holding_time = rng.exponential(traffic.delta_h);
    call.holding_expiry = clock + call.holding_time;
    call.dwell_expiry = traffic.mu_d > 0.0
        ? clock + rng.exponential(traffic.mu_d)
        : std::numeric_limits<double>::infinity();
    call.snr_rank = rng.uniform();
    return call;
}

struct BufferEntry {
    std::uint64_t call_id = 0;
    double priority = 0.0; // larger = served first
    double deadline = 0.0;
    std::uint64_t insert_seq = 0;
};

// Directional handover buffer q_ij held at the origin cell. Entries stay
// sorted by (priority desc, insertion order asc).
class HandoverBuffer {
public:
    void insert(BufferEntry entry) {
        entry.insert_seq = next_seq_++;
        auto pos = std::find_if(entries_.begin(), entries_.end(),
                                [&](const BufferEntry& e) {
                                    return e.priority < entry.priority;
                                });
        entries_.insert(pos, entry);
    }

    const BufferEntry& head() const {
        if (entries_.empty()) throw std::logic_error("buffer head on empty buffer");
        return entries_.front();
    }

    BufferEntry pop_head() {
        BufferEntry e = head();
        entries_.erase(entries_.begin());
        return e;
    }

    bool remove(std::uint64_t call_id) {
        auto pos = std::find_if(entries_.begin(), entries_.end(),
                                [&](const BufferEntry& e) {
                                    return e.call_id == call_id;
                                });
        if (pos == entries_.end()) return false;
        entries_.erase(pos);
        return true;
    }

    int position_of(std::uint64_t call_id) const {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].call_id == call_id) return static_cast<int>(i);
        }
        return -1;
    }

    bool empty() const { return entries_.empty(); }
    int size() const { return static_cast<int>(entries_.size()); }
    const std::vector<BufferEntry>& entries() const { return entries_; }

private:
    std::vector<BufferEntry> entries_;
    std::uint64_t next_seq_ = 0;
};

inline double priority_key(PriorityRule rule, double deadline, double snr_rank) {
    switch (rule) {
        case PriorityRule::UrgencyDeadline: return -deadline;
        case PriorityRule::RandomSnr: return snr_rank;
        case PriorityRule::Fifo: return 0.0;
    }
    return 0.0;
}

struct CellState {
    int cell_id = 0;
    int total_channels = 10;
    int busy = 0;
    HandoverBuffer out_buffer; // travellers leaving this cell
};

// ---------------------------------------------------------------------------
// Policy decision rules, shared verbatim by the event-driven engine and the
// exact chain builder so the two can never drift apart.

enum class AdmissionDecision { Admit, BlockNoChannel, BlockHandoverPending };

inline AdmissionDecision decide_admission(const PolicyConfig& policy, int busy,
                                          int capacity, int inbound_queue_len) {
    if (busy >= capacity) return AdmissionDecision::BlockNoChannel;
    if (policy.admission_rule == AdmissionRule::LiteralFlowchart &&
        inbound_queue_len > 0) {
        return AdmissionDecision::BlockHandoverPending;
    }
    return AdmissionDecision::Admit;
}

enum class HandoverAction { TakeFreeChannel, Enqueue, ExchangeWithOpposite, NoRecourse };

// Three-case handover rule for a call leaving `own` toward `target`:
// free channel wins; otherwise queue in the own-direction buffer; once that
// buffer is full, swap channels with the head of the opposite-direction
// buffer; with no partner the call is out of recourse.
inline HandoverAction decide_handover(const PolicyConfig& policy, int target_busy,
                                      int target_capacity, int own_queue_len,
                                      int opposite_queue_len) {
    if (target_busy < target_capacity) return HandoverAction::TakeFreeChannel;
    const bool partner_available =
        policy.exchange_enabled && opposite_queue_len > 0;
    if (policy.eager_exchange && partner_available) {
        return HandoverAction::ExchangeWithOpposite;
    }
    if (own_queue_len < policy.buffer_capacity) return HandoverAction::Enqueue;
    if (partner_available) return HandoverAction::ExchangeWithOpposite;
    return HandoverAction::NoRecourse;
}

} // namespace crhx
