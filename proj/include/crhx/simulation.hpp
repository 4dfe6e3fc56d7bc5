#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "crhx/event_queue.hpp"
#include "crhx/metrics.hpp"
#include "crhx/model.hpp"
#include "crhx/rng.hpp"

namespace crhx {

struct InvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

struct SimConfig {
    int channels_per_cell = 10;
    TrafficConfig traffic;
    PolicyConfig policy;
    double horizon = 1e5;        // simulated seconds
    double warmup_fraction = 0.1; // counters start after this fraction

    void validate() const {
        traffic.validate();
        policy.validate();
        if (channels_per_cell <= 0) throw ConfigError("channels must be > 0");
        if (horizon <= 0.0) throw ConfigError("horizon must be > 0");
        if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
            throw ConfigError("warmup_fraction must lie in [0,1)");
        }
    }
};

struct AdmissionOutcome {
    bool admitted = false;
    AdmissionDecision reason = AdmissionDecision::Admit;
};

struct HandoverOutcome {
    enum class Kind { SuccessFreeChannel, Enqueued, SuccessByExchange, FailureNoRecourse };
    Kind kind = Kind::SuccessFreeChannel;
    int buffer_position = -1;          // for Enqueued
    double deadline = 0.0;             // for Enqueued / FailureNoRecourse
    std::uint64_t partner_id = 0;      // for SuccessByExchange
};

// Single-replication world: two cells, their buffers, the event calendar and
// the metrics ledger. Strictly single-threaded; replications each own one.
//
// The protocol operations (admission, the three-case handover rule, channel
// exchange, priority service on release, deadline removal) are public so
// scenario tests can drive them directly; run() drives them from the event
// calendar.
class Simulation {
public:
    Simulation(SimConfig cfg, std::uint64_t seed, std::uint64_t stream_id)
        : cfg_(cfg),
          arrivals_{RngStream(seed, stream_id * 4 + 0),
                    RngStream(seed, stream_id * 4 + 1)},
          attrs_(seed, stream_id * 4 + 2),
          dynamics_(seed, stream_id * 4 + 3) {
        cfg_.validate();
        for (int c = 0; c < 2; ++c) {
            cells_[c].cell_id = c;
            cells_[c].total_channels = cfg_.channels_per_cell;
        }
        measure_start_ = cfg_.warmup_fraction * cfg_.horizon;
    }

    const CellState& cell(int c) const { return cells_.at(c); }
    const MetricsLedger& ledger() const { return ledger_; }
    double clock() const { return calendar_.clock(); }
    const CallRecord* find_call(std::uint64_t id) const {
        auto it = calls_.find(id);
        return it == calls_.end() ? nullptr : &it->second;
    }

    void set_trace(std::vector<TimedEvent>* sink) { trace_ = sink; }

    MetricsLedger run() {
        calendar_.schedule(cfg_.horizon, EventKind::HorizonEnd);
        for (int c = 0; c < 2; ++c) {
            calendar_.schedule(arrivals_[c].exponential(cfg_.traffic.lambda_nc),
                               EventKind::NewArrival, 0, c);
        }
        while (auto ev = calendar_.pop_next()) {
            if (trace_) trace_->push_back(*ev);
            if (ev->kind == EventKind::HorizonEnd) break;
            dispatch(*ev);
        }
        finalize();
        return ledger_;
    }

    // --- protocol operations -------------------------------------------

    // Spawns a call at the current clock and runs it through admission.
    // Returns the call id (0 when the call ended terminally blocked).
    std::uint64_t spawn_call(int cell, int attempt = 0) {
        CallRecord call = new_call(clock(), cell, cfg_.traffic, attrs_);
        call.id = next_call_id_++;
        call.measured = clock() >= measure_start_;
        call.attempt = attempt;
        if (call.measured) ++ledger_.new_arrivals;
        AdmissionOutcome out = admit_new_call(call);
        return out.admitted ? call.id : 0;
    }

    AdmissionOutcome admit_new_call(CallRecord call) {
        const int c = call.serving_cell;
        const AdmissionDecision decision =
            decide_admission(cfg_.policy, cells_[c].busy, cfg_.channels_per_cell,
                             inbound_queue_len(c));
        if (decision == AdmissionDecision::Admit) {
            if (call.measured) ++ledger_.admitted_new;
            call.state = CallState::Active;
            occupy(c);
            auto [it, ok] = calls_.emplace(call.id, call);
            if (!ok) throw InvariantViolation("duplicate call id");
            CallRecord& rec = it->second;
            rec.holding_event =
                calendar_.schedule(rec.holding_expiry, EventKind::HoldingExpiry, rec.id);
            arm_dwell(rec, rec.dwell_expiry);
            return {true, decision};
        }
        // Blocked at origination: terminal, unless the retry behavior grants
        // another independent attempt.
        if (call.measured) ++ledger_.blocked_new;
        if (cfg_.policy.blocked_behavior == BlockedCallBehavior::Retry &&
            call.attempt < cfg_.policy.retry_max_attempts) {
            calendar_.schedule(clock() + cfg_.policy.retry_delay,
                               EventKind::RetryAttempt, 0, c, call.attempt + 1);
        }
        return {false, decision};
    }

    HandoverOutcome request_handover(std::uint64_t call_id) {
        CallRecord& call = must_find(call_id);
        if (call.state != CallState::Active || call.awaiting_region_exit) {
            throw InvariantViolation("handover request for non-active call");
        }
        const int from = call.serving_cell;
        const int to = other_cell(from);
        if (call.measured) ++ledger_.handover_requests;
        call.target_cell = to;

        const HandoverAction action = decide_handover(
            cfg_.policy, cells_[to].busy, cfg_.channels_per_cell,
            cells_[from].out_buffer.size(), cells_[to].out_buffer.size());
        switch (action) {
            case HandoverAction::TakeFreeChannel: {
                occupy(to);
                release(from);
                call.serving_cell = to;
                call.target_cell = -1;
                if (call.measured) ++ledger_.handover_successes;
                arm_dwell(call, next_dwell());
                on_channel_release(from);
                return {HandoverOutcome::Kind::SuccessFreeChannel};
            }
            case HandoverAction::Enqueue: {
                const double deadline = clock() + next_region_transit();
                call.state = CallState::QueuedForHandover;
                BufferEntry entry;
                entry.call_id = call.id;
                entry.deadline = deadline;
                entry.priority = priority_key(cfg_.policy.priority_rule, deadline,
                                              call.snr_rank);
                cells_[from].out_buffer.insert(entry);
                if (cells_[from].out_buffer.size() > cfg_.policy.buffer_capacity) {
                    throw InvariantViolation("buffer over capacity");
                }
                call.deadline_event =
                    calendar_.schedule(deadline, EventKind::RegionDeadline, call.id);
                HandoverOutcome out{HandoverOutcome::Kind::Enqueued};
                out.buffer_position = cells_[from].out_buffer.position_of(call.id);
                out.deadline = deadline;
                return out;
            }
            case HandoverAction::ExchangeWithOpposite:
                return exchange_channels(call);
            case HandoverAction::NoRecourse: {
                // No free channel, no queue slot, no partner: the call rides
                // its old channel until it exits the handover region.
                const double deadline = clock() + next_region_transit();
                call.awaiting_region_exit = true;
                call.deadline_event =
                    calendar_.schedule(deadline, EventKind::RegionDeadline, call.id);
                HandoverOutcome out{HandoverOutcome::Kind::FailureNoRecourse};
                out.deadline = deadline;
                return out;
            }
        }
        throw InvariantViolation("unreachable handover action");
    }

    // Swap channels with the top-priority entry of the opposite-direction
    // buffer; both calls become active in their target cells and neither
    // cell's busy count moves.
    HandoverOutcome exchange_channels(CallRecord& arriving) {
        const int from = arriving.serving_cell;
        const int to = other_cell(from);
        HandoverBuffer& opposite = cells_[to].out_buffer;
        if (!cfg_.policy.exchange_enabled || opposite.empty()) {
            throw InvariantViolation("exchange without an eligible partner");
        }
        BufferEntry entry = opposite.pop_head();
        CallRecord& partner = must_find(entry.call_id);
        if (partner.serving_cell != to || partner.state != CallState::QueuedForHandover) {
            throw InvariantViolation("exchange partner not holding a target-cell channel");
        }
        calendar_.cancel(partner.deadline_event);
        partner.deadline_event = kNoEvent;

        arriving.serving_cell = to;
        arriving.target_cell = -1;
        partner.serving_cell = from;
        partner.target_cell = -1;
        partner.state = CallState::Active;
        if (arriving.measured) ++ledger_.handover_successes;
        if (partner.measured) ++ledger_.handover_successes;
        if (arriving.measured) ++ledger_.exchanges;
        arm_dwell(arriving, next_dwell());
        arm_dwell(partner, next_dwell());

        HandoverOutcome out{HandoverOutcome::Kind::SuccessByExchange};
        out.partner_id = partner.id;
        return out;
    }

    // Priority service: a freed channel goes to the highest-priority call
    // waiting for this cell; serving it frees its old channel in the other
    // cell, which may cascade.
    void on_channel_release(int cell) {
        int freed_in = cell;
        while (true) {
            HandoverBuffer& waiting = cells_[other_cell(freed_in)].out_buffer;
            if (waiting.empty()) break;
            BufferEntry entry = waiting.pop_head();
            CallRecord& call = must_find(entry.call_id);
            if (call.state != CallState::QueuedForHandover) {
                throw InvariantViolation("buffered call not queued");
            }
            calendar_.cancel(call.deadline_event);
            call.deadline_event = kNoEvent;
            const int old = call.serving_cell;
            occupy(freed_in);
            release(old);
            call.serving_cell = freed_in;
            call.target_cell = -1;
            call.state = CallState::Active;
            if (call.measured) ++ledger_.handover_successes;
            arm_dwell(call, next_dwell());
            freed_in = old;
        }
    }

    // Deadline expiry of a waiting call: removed from its buffer (if queued),
    // its channel released, the call forced-terminated.
    void on_deadline_expiry(std::uint64_t call_id) {
        CallRecord& call = must_find(call_id);
        const int cell = call.serving_cell;
        if (call.state == CallState::QueuedForHandover) {
            if (!cells_[cell].out_buffer.remove(call.id)) {
                throw InvariantViolation("queued call missing from its buffer");
            }
        } else if (!call.awaiting_region_exit) {
            throw InvariantViolation("deadline for a call not waiting on one");
        }
        calendar_.cancel(call.holding_event);
        calendar_.cancel(call.dwell_event);
        if (call.measured) {
            ++ledger_.forced_terminations;
            ++ledger_.handover_failures;
        }
        release(cell);
        calls_.erase(call_id);
        on_channel_release(cell);
    }

    // Exposed for scenario tests: completes a call right now regardless of
    // its remaining holding time.
    void complete_call(std::uint64_t call_id) { handle_holding_expiry(call_id); }

    // Channel conservation audit against the full call table.
    void audit() const {
        std::array<int, 2> held{0, 0};
        std::array<int, 2> queued{0, 0};
        for (const auto& [id, call] : calls_) {
            if (call.state == CallState::Active ||
                call.state == CallState::QueuedForHandover) {
                ++held[call.serving_cell];
            }
            if (call.state == CallState::QueuedForHandover) ++queued[call.serving_cell];
        }
        for (int c = 0; c < 2; ++c) {
            if (held[c] != cells_[c].busy) {
                throw InvariantViolation("channel conservation violated");
            }
            if (queued[c] != cells_[c].out_buffer.size()) {
                throw InvariantViolation("buffer membership violated");
            }
        }
    }

private:
    void dispatch(const TimedEvent& ev) {
        switch (ev.kind) {
            case EventKind::NewArrival: {
                spawn_call(ev.cell);
                calendar_.schedule(
                    clock() + arrivals_[ev.cell].exponential(cfg_.traffic.lambda_nc),
                    EventKind::NewArrival, 0, ev.cell);
                break;
            }
            case EventKind::RetryAttempt:
                spawn_call(ev.cell, ev.payload);
                break;
            case EventKind::HoldingExpiry:
                must_find(ev.call_id).holding_event = kNoEvent;
                handle_holding_expiry(ev.call_id);
                break;
            case EventKind::DwellExpiry: {
                CallRecord& call = must_find(ev.call_id);
                call.dwell_event = kNoEvent;
                request_handover(ev.call_id);
                break;
            }
            case EventKind::RegionDeadline:
                must_find(ev.call_id).deadline_event = kNoEvent;
                on_deadline_expiry(ev.call_id);
                break;
            case EventKind::HorizonEnd:
                break;
        }
    }

    void handle_holding_expiry(std::uint64_t call_id) {
        CallRecord& call = must_find(call_id);
        const int cell = call.serving_cell;
        if (call.state == CallState::QueuedForHandover) {
            if (!cells_[cell].out_buffer.remove(call.id)) {
                throw InvariantViolation("queued call missing from its buffer");
            }
            if (call.measured) {
                ++ledger_.handover_successes;
                ++ledger_.resolved_by_completion;
            }
        } else if (call.awaiting_region_exit && call.measured) {
            ++ledger_.handover_successes;
            ++ledger_.resolved_by_completion;
        }
        calendar_.cancel(call.holding_event);
        calendar_.cancel(call.dwell_event);
        calendar_.cancel(call.deadline_event);
        if (call.measured) ++ledger_.completions;
        release(cell);
        calls_.erase(call_id);
        on_channel_release(cell);
    }

    void finalize() {
        flush_busy_integral(cfg_.horizon);
        for (const auto& [id, call] : calls_) {
            if (!call.measured) continue;
            if (call.state == CallState::Active ||
                call.state == CallState::QueuedForHandover) {
                ++ledger_.in_flight_at_horizon;
            }
            if (call.state == CallState::QueuedForHandover || call.awaiting_region_exit) {
                ++ledger_.still_queued_at_horizon;
            }
        }
        ledger_.clock_horizon = cfg_.horizon - measure_start_;
        audit();
        // Accounting identities, enforced on every run.
        if (ledger_.blocked_new + ledger_.admitted_new != ledger_.new_arrivals) {
            throw InvariantViolation("arrival accounting identity violated");
        }
        if (ledger_.blocked_new + ledger_.completions + ledger_.forced_terminations +
                ledger_.in_flight_at_horizon != ledger_.new_arrivals) {
            throw InvariantViolation("call accounting identity violated");
        }
        if (ledger_.handover_successes + ledger_.handover_failures +
                ledger_.still_queued_at_horizon != ledger_.handover_requests) {
            throw InvariantViolation("handover accounting identity violated");
        }
    }

    int inbound_queue_len(int cell) const {
        return cells_[other_cell(cell)].out_buffer.size();
    }

    void occupy(int cell) {
        flush_busy_integral(clock());
        if (++cells_[cell].busy > cfg_.channels_per_cell) {
            throw InvariantViolation("busy exceeds channel count");
        }
    }

    void release(int cell) {
        flush_busy_integral(clock());
        if (--cells_[cell].busy < 0) {
            throw InvariantViolation("busy went negative");
        }
    }

    void flush_busy_integral(double now) {
        const double from = std::max(busy_mark_, measure_start_);
        const double to = std::min(now, cfg_.horizon);
        if (to > from) {
            ledger_.busy_channel_time +=
                (to - from) * static_cast<double>(cells_[0].busy + cells_[1].busy);
        }
        busy_mark_ = now;
    }

    void arm_dwell(CallRecord& call, double expiry) {
        calendar_.cancel(call.dwell_event);
        call.dwell_event = kNoEvent;
        call.dwell_expiry = expiry;
        if (expiry < std::numeric_limits<double>::infinity()) {
            call.dwell_event = calendar_.schedule(expiry, EventKind::DwellExpiry, call.id);
        }
    }

    double next_dwell() {
        return cfg_.traffic.mu_d > 0.0
            ? clock() + dynamics_.exponential(cfg_.traffic.mu_d)
            : std::numeric_limits<double>::infinity();
    }

    double next_region_transit() {
        return dynamics_.exponential(1.0 / cfg_.traffic.region_deadline_mean);
    }

    CallRecord& must_find(std::uint64_t id) {
        auto it = calls_.find(id);
        if (it == calls_.end()) throw InvariantViolation("unknown call id");
        return it->second;
    }

    SimConfig cfg_;
    std::array<RngStream, 2> arrivals_;
    RngStream attrs_;    // per-call draws, aligned across policies
    RngStream dynamics_; // policy-dependent draws (redials, deadlines)
    EventQueue calendar_;
    std::array<CellState, 2> cells_{};
    std::unordered_map<std::uint64_t, CallRecord> calls_;
    MetricsLedger ledger_;
    std::uint64_t next_call_id_ = 1;
    double measure_start_ = 0.0;
    double busy_mark_ = 0.0;
    std::vector<TimedEvent>* trace_ = nullptr;
};

} // namespace crhx
