#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "crhx/model.hpp"

namespace crhx {

struct CtmcError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CtmcSpec {
    int channels = 2;
    TrafficConfig traffic;
    PolicyConfig policy;
    std::size_t max_states = 100000;
};

struct CtmcMetrics {
    double p_block = 0.0;         // stationary new-call blocking (PASTA)
    double p_handover_fail = 0.0; // forced-termination flow / admitted flow
    double p_access = 0.0;        // handover success flow / request flow
    double carried_erlangs = 0.0; // E[busy_1 + busy_2]
    std::size_t num_states = 0;
    std::vector<double> stationary;
};

namespace ctmc_detail {

// Aggregate chain state: per cell the occupied channels, the queued
// travellers (holding a channel here, waiting for the other cell) and the
// no-recourse travellers riding their channel to the region boundary.
struct State {
    std::array<int, 2> busy{0, 0};
    std::array<int, 2> queued{0, 0};
    std::array<int, 2> doomed{0, 0};

    int active(int c) const { return busy[c] - queued[c] - doomed[c]; }

    std::uint64_t key() const {
        std::uint64_t k = 0;
        for (int c = 0; c < 2; ++c) {
            k = k * 64 + static_cast<std::uint64_t>(busy[c]);
            k = k * 64 + static_cast<std::uint64_t>(queued[c]);
            k = k * 64 + static_cast<std::uint64_t>(doomed[c]);
        }
        return k;
    }
};

struct CounterDelta {
    int blocked = 0, admitted = 0, requests = 0, successes = 0;
    int failures = 0, forced = 0, completions = 0, exchanges = 0;
};

struct Transition {
    State to;
    double rate = 0.0;
    CounterDelta delta;
    bool state_change = false;
};

// Priority service cascade on a freed channel, identical step rule to the
// event-driven engine: while somebody waits for the cell with the free
// channel, the head of that queue takes it and frees its own channel across.
inline void release_cascade(State& s, int cell, CounterDelta& delta) {
    int freed_in = cell;
    while (s.queued[other_cell(freed_in)] > 0) {
        const int from = other_cell(freed_in);
        s.queued[from] -= 1;
        s.busy[freed_in] += 1;
        s.busy[from] -= 1;
        delta.successes += 1;
        freed_in = from;
    }
}

inline std::vector<Transition> transitions(const State& s, const CtmcSpec& spec) {
    const TrafficConfig& t = spec.traffic;
    const PolicyConfig& p = spec.policy;
    const int C = spec.channels;
    const double nu = 1.0 / t.region_deadline_mean;
    std::vector<Transition> out;

    auto push = [&](State to, double rate, CounterDelta delta) {
        if (rate <= 0.0) return;
        Transition tr{to, rate, delta, to.key() != s.key()};
        out.push_back(tr);
    };

    for (int c = 0; c < 2; ++c) {
        const int j = other_cell(c);

        // New-call arrival at cell c.
        {
            CounterDelta d;
            State to = s;
            const AdmissionDecision dec =
                decide_admission(p, s.busy[c], C, s.queued[j]);
            if (dec == AdmissionDecision::Admit) {
                to.busy[c] += 1;
                d.admitted = 1;
            } else {
                d.blocked = 1; // Depart: no state change, flow only
            }
            push(to, t.lambda_nc, d);
        }

        // Holding expiry of an active call.
        if (s.active(c) > 0) {
            CounterDelta d;
            d.completions = 1;
            State to = s;
            to.busy[c] -= 1;
            release_cascade(to, c, d);
            push(to, s.active(c) * t.delta_h, d);
        }
        // Holding expiry of a queued call (a completion that also closes its
        // pending request on the success side).
        if (s.queued[c] > 0) {
            CounterDelta d;
            d.completions = 1;
            d.successes = 1;
            State to = s;
            to.queued[c] -= 1;
            to.busy[c] -= 1;
            release_cascade(to, c, d);
            push(to, s.queued[c] * t.delta_h, d);
        }
        // Holding expiry of a no-recourse traveller.
        if (s.doomed[c] > 0) {
            CounterDelta d;
            d.completions = 1;
            d.successes = 1;
            State to = s;
            to.doomed[c] -= 1;
            to.busy[c] -= 1;
            release_cascade(to, c, d);
            push(to, s.doomed[c] * t.delta_h, d);
        }

        // Dwell expiry of an active call: the three-case handover rule.
        if (s.active(c) > 0 && t.mu_d > 0.0) {
            CounterDelta d;
            d.requests = 1;
            State to = s;
            const HandoverAction action =
                decide_handover(p, s.busy[j], C, s.queued[c], s.queued[j]);
            switch (action) {
                case HandoverAction::TakeFreeChannel:
                    to.busy[j] += 1;
                    to.busy[c] -= 1;
                    d.successes += 1;
                    release_cascade(to, c, d);
                    break;
                case HandoverAction::Enqueue:
                    to.queued[c] += 1;
                    break;
                case HandoverAction::ExchangeWithOpposite:
                    to.queued[j] -= 1;
                    d.successes += 2;
                    d.exchanges = 1;
                    break;
                case HandoverAction::NoRecourse:
                    to.doomed[c] += 1;
                    break;
            }
            push(to, s.active(c) * t.mu_d, d);
        }

        // Region deadline of a queued call.
        if (s.queued[c] > 0) {
            CounterDelta d;
            d.forced = 1;
            d.failures = 1;
            State to = s;
            to.queued[c] -= 1;
            to.busy[c] -= 1;
            release_cascade(to, c, d);
            push(to, s.queued[c] * nu, d);
        }
        // Region deadline of a no-recourse traveller.
        if (s.doomed[c] > 0) {
            CounterDelta d;
            d.forced = 1;
            d.failures = 1;
            State to = s;
            to.doomed[c] -= 1;
            to.busy[c] -= 1;
            release_cascade(to, c, d);
            push(to, s.doomed[c] * nu, d);
        }
    }
    return out;
}

} // namespace ctmc_detail

// Exact stationary metrics of the aggregate chain under the same policy rules
// as the event-driven engine. Dense direct solve; intended for tiny instances.
inline CtmcMetrics ctmc_oracle(const CtmcSpec& spec) {
    using namespace ctmc_detail;
    spec.traffic.validate();
    spec.policy.validate();
    if (spec.policy.blocked_behavior != BlockedCallBehavior::Depart) {
        throw CtmcError("ctmc_oracle supports only the Depart blocked-call behavior");
    }
    constexpr std::size_t kDenseSolveLimit = 4000;

    // Reachability sweep from the empty system.
    std::vector<State> states;
    std::unordered_map<std::uint64_t, std::size_t> index;
    std::queue<State> frontier;
    State empty;
    states.push_back(empty);
    index.emplace(empty.key(), 0);
    frontier.push(empty);
    while (!frontier.empty()) {
        State s = frontier.front();
        frontier.pop();
        for (const Transition& tr : transitions(s, spec)) {
            if (!tr.state_change) continue;
            if (index.emplace(tr.to.key(), states.size()).second) {
                states.push_back(tr.to);
                frontier.push(tr.to);
                if (states.size() > spec.max_states ||
                    states.size() > kDenseSolveLimit) {
                    throw CtmcError("ctmc_oracle: state space too large");
                }
            }
        }
    }

    const std::size_t n = states.size();
    // Solve pi Q = 0, sum pi = 1: rows of A are Q^T with the last row
    // replaced by the normalization.
    std::vector<double> a(n * n, 0.0);
    std::vector<double> b(n, 0.0);
    for (std::size_t col = 0; col < n; ++col) {
        double exit_rate = 0.0;
        for (const Transition& tr : transitions(states[col], spec)) {
            if (!tr.state_change) continue;
            const std::size_t row = index.at(tr.to.key());
            a[row * n + col] += tr.rate;
            exit_rate += tr.rate;
        }
        a[col * n + col] -= exit_rate;
    }
    for (std::size_t col = 0; col < n; ++col) a[(n - 1) * n + col] = 1.0;
    b[n - 1] = 1.0;

    // Gaussian elimination with partial pivoting.
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        double best = std::abs(a[k * n + k]);
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::abs(a[r * n + k]) > best) {
                best = std::abs(a[r * n + k]);
                pivot = r;
            }
        }
        if (best < 1e-13) {
            throw CtmcError("ctmc_oracle: chain is not ergodic");
        }
        if (pivot != k) {
            for (std::size_t cidx = 0; cidx < n; ++cidx) {
                std::swap(a[k * n + cidx], a[pivot * n + cidx]);
            }
            std::swap(b[k], b[pivot]);
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a[r * n + k] / a[k * n + k];
            if (f == 0.0) continue;
            for (std::size_t cidx = k; cidx < n; ++cidx) {
                a[r * n + cidx] -= f * a[k * n + cidx];
            }
            b[r] -= f * b[k];
        }
    }
    std::vector<double> pi(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t cidx = k + 1; cidx < n; ++cidx) {
            s -= a[k * n + cidx] * pi[cidx];
        }
        pi[k] = s / a[k * n + k];
    }
    double total = 0.0;
    for (double x : pi) {
        if (x < -1e-9) throw CtmcError("ctmc_oracle: negative stationary mass");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-8) {
        throw CtmcError("ctmc_oracle: stationary vector does not normalize");
    }

    // Rate-weighted counter flows.
    double blocked_flow = 0.0, admitted_flow = 0.0, request_flow = 0.0;
    double success_flow = 0.0, forced_flow = 0.0;
    double carried = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        carried += pi[i] * static_cast<double>(states[i].busy[0] + states[i].busy[1]);
        for (const Transition& tr : transitions(states[i], spec)) {
            blocked_flow += pi[i] * tr.rate * tr.delta.blocked;
            admitted_flow += pi[i] * tr.rate * tr.delta.admitted;
            request_flow += pi[i] * tr.rate * tr.delta.requests;
            success_flow += pi[i] * tr.rate * tr.delta.successes;
            forced_flow += pi[i] * tr.rate * tr.delta.forced;
        }
    }

    CtmcMetrics m;
    m.num_states = n;
    m.stationary = std::move(pi);
    m.carried_erlangs = carried;
    const double arrival_flow = blocked_flow + admitted_flow;
    m.p_block = arrival_flow > 0.0 ? blocked_flow / arrival_flow : 0.0;
    m.p_handover_fail = admitted_flow > 0.0 ? forced_flow / admitted_flow : 0.0;
    m.p_access = request_flow > 0.0 ? success_flow / request_flow : 0.0;
    return m;
}

} // namespace crhx
