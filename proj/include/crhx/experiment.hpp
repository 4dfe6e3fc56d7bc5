#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "crhx/analytic.hpp"
#include "crhx/ctmc.hpp"
#include "crhx/metrics.hpp"
#include "crhx/simulation.hpp"

namespace crhx {

inline constexpr const char* kToolVersion = "0.1.0";

enum class SweepAxis { LambdaNc, QueueCapacity };

// Full campaign description: traffic, policy matrix, sweep axis, horizon,
// replication plan. Flat key = value config format with '#' comments.
struct ExperimentSpec {
    TrafficConfig traffic;
    int channels = 10;
    std::vector<std::string> policies = {"exchange", "buffered", "conventional"};
    PolicyConfig base_policy; // knobs shared by the labelled presets
    SweepAxis sweep_axis = SweepAxis::LambdaNc;
    double sweep_start = 0.2;
    double sweep_stop = 2.0;
    double sweep_step = 0.2;
    double horizon = 1e5;
    double warmup_fraction = 0.1;
    int replications = 20;
    std::uint64_t base_seed = 1;
    std::string output_path;
    bool emit_oracle = false;

    void validate() const {
        traffic.validate();
        base_policy.validate();
        if (channels <= 0) throw ConfigError("channels must be > 0");
        if (policies.empty()) throw ConfigError("at least one policy required");
        if (!(sweep_start < sweep_stop)) {
            throw ConfigError("sweep_start must be < sweep_stop");
        }
        if (sweep_step <= 0.0) throw ConfigError("sweep_step must be > 0");
        if (horizon <= 0.0) throw ConfigError("horizon must be > 0");
        if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
            throw ConfigError("warmup_fraction must lie in [0,1)");
        }
        if (replications < 1) throw ConfigError("replications must be >= 1");
        for (const auto& p : policies) {
            if (p != "exchange" && p != "buffered" && p != "conventional") {
                throw ConfigError("unknown policy label: " + p);
            }
        }
    }

    std::vector<double> sweep_values() const {
        std::vector<double> v;
        for (double x = sweep_start; x <= sweep_stop + 1e-9 * sweep_step;
             x += sweep_step) {
            v.push_back(x);
        }
        return v;
    }
};

// Labelled policy presets: "exchange" = buffers + channel exchange,
// "buffered" = buffers only, "conventional" = neither.
inline PolicyConfig policy_for_label(const ExperimentSpec& spec,
                                     const std::string& label,
                                     double sweep_value) {
    PolicyConfig p = spec.base_policy;
    if (label == "exchange") {
        p.exchange_enabled = true;
    } else if (label == "buffered") {
        p.exchange_enabled = false;
    } else if (label == "conventional") {
        p.exchange_enabled = false;
        p.buffer_capacity = 0;
    } else {
        throw ConfigError("unknown policy label: " + label);
    }
    if (spec.sweep_axis == SweepAxis::QueueCapacity && label != "conventional") {
        p.buffer_capacity = static_cast<int>(std::lround(sweep_value));
    }
    return p;
}

struct ResultRow {
    std::string policy;
    double sweep_value = 0.0;
    int replications = 0;
    std::uint64_t base_seed = 0;
    std::optional<Interval> p_block;
    std::optional<Interval> p_handover_fail;
    std::optional<Interval> p_forced; // same estimator, reported separately
    std::optional<Interval> p_access;
    std::optional<Interval> lambda_hoc;     // per cell, requests per second
    std::optional<Interval> carried;        // per cell, Erlangs
    std::optional<double> oracle_erlang_b;  // loss-system reference, no dwell
    std::optional<double> oracle_ctmc_p_block;
    std::optional<double> oracle_ctmc_p_fail;
    std::optional<double> oracle_ctmc_p_access;
    // Per-replication samples kept for paired-seed comparisons.
    std::vector<double> block_samples;
    std::vector<double> fail_samples;
    std::vector<double> access_samples;
    std::vector<MetricsLedger> ledgers;
};

namespace experiment_detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double parse_number(const std::string& key, const std::string& value,
                           int line) {
    try {
        std::size_t used = 0;
        double x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' expects a number, got '" + value + "'");
    }
}

inline std::optional<Interval> summarize(const std::vector<double>& samples) {
    std::vector<double> clean;
    for (double x : samples) {
        if (!std::isnan(x)) clean.push_back(x);
    }
    if (clean.empty()) return std::nullopt;
    if (clean.size() == 1) return Interval{clean.front(), 0.0};
    return confidence_interval(clean);
}

inline std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return std::string(buf);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace experiment_detail

inline ExperimentSpec parse_config(std::string_view text) {
    using experiment_detail::parse_number;
    using experiment_detail::trim;
    ExperimentSpec spec;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string stripped = raw.substr(0, raw.find('#'));
        std::string entry = trim(stripped);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) +
                              ": expected key = value, got '" + entry + "'");
        }
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));
        auto bad_value = [&]() {
            return ConfigError("line " + std::to_string(line) + ": key '" + key +
                               "' has invalid value '" + value + "'");
        };
        if (key == "lambda_nc") {
            spec.traffic.lambda_nc = parse_number(key, value, line);
        } else if (key == "dwell_mean") {
            const double m = parse_number(key, value, line);
            if (m < 0.0) throw bad_value();
            spec.traffic.mu_d = m > 0.0 ? 1.0 / m : 0.0;
        } else if (key == "holding_mean") {
            const double m = parse_number(key, value, line);
            if (m <= 0.0) throw bad_value();
            spec.traffic.delta_h = 1.0 / m;
        } else if (key == "region_deadline_mean") {
            spec.traffic.region_deadline_mean = parse_number(key, value, line);
        } else if (key == "channels") {
            spec.channels = static_cast<int>(parse_number(key, value, line));
        } else if (key == "queue_capacity") {
            spec.base_policy.buffer_capacity =
                static_cast<int>(parse_number(key, value, line));
        } else if (key == "policies") {
            spec.policies.clear();
            std::istringstream ps(value);
            std::string tok;
            while (std::getline(ps, tok, ',')) {
                spec.policies.push_back(trim(tok));
            }
        } else if (key == "blocked_behavior") {
            if (value == "depart") {
                spec.base_policy.blocked_behavior = BlockedCallBehavior::Depart;
            } else if (value == "retry") {
                spec.base_policy.blocked_behavior = BlockedCallBehavior::Retry;
            } else {
                throw bad_value();
            }
        } else if (key == "retry_delay") {
            spec.base_policy.retry_delay = parse_number(key, value, line);
        } else if (key == "retry_max_attempts") {
            spec.base_policy.retry_max_attempts =
                static_cast<int>(parse_number(key, value, line));
        } else if (key == "priority_rule") {
            if (value == "deadline") {
                spec.base_policy.priority_rule = PriorityRule::UrgencyDeadline;
            } else if (value == "random_snr") {
                spec.base_policy.priority_rule = PriorityRule::RandomSnr;
            } else if (value == "fifo") {
                spec.base_policy.priority_rule = PriorityRule::Fifo;
            } else {
                throw bad_value();
            }
        } else if (key == "admission_rule") {
            if (value == "literal") {
                spec.base_policy.admission_rule = AdmissionRule::LiteralFlowchart;
            } else if (value == "relaxed") {
                spec.base_policy.admission_rule = AdmissionRule::FreeChannelRelaxed;
            } else {
                throw bad_value();
            }
        } else if (key == "eager_exchange") {
            if (value == "on") spec.base_policy.eager_exchange = true;
            else if (value == "off") spec.base_policy.eager_exchange = false;
            else throw bad_value();
        } else if (key == "sweep") {
            if (value == "lambda") spec.sweep_axis = SweepAxis::LambdaNc;
            else if (value == "queue") spec.sweep_axis = SweepAxis::QueueCapacity;
            else throw bad_value();
        } else if (key == "sweep_start") {
            spec.sweep_start = parse_number(key, value, line);
        } else if (key == "sweep_stop") {
            spec.sweep_stop = parse_number(key, value, line);
        } else if (key == "sweep_step") {
            spec.sweep_step = parse_number(key, value, line);
        } else if (key == "horizon") {
            spec.horizon = parse_number(key, value, line);
        } else if (key == "warmup_fraction") {
            spec.warmup_fraction = parse_number(key, value, line);
        } else if (key == "replications") {
            spec.replications = static_cast<int>(parse_number(key, value, line));
        } else if (key == "base_seed") {
            spec.base_seed =
                static_cast<std::uint64_t>(parse_number(key, value, line));
        } else if (key == "output") {
            spec.output_path = value;
        } else if (key == "oracle") {
            if (value == "on") spec.emit_oracle = true;
            else if (value == "off") spec.emit_oracle = false;
            else throw bad_value();
        } else {
            throw ConfigError("line " + std::to_string(line) +
                              ": unknown key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

inline std::string canonical_config(const ExperimentSpec& spec) {
    using experiment_detail::format_number;
    std::ostringstream out;
    out << "lambda_nc = " << format_number(spec.traffic.lambda_nc) << "\n";
    out << "dwell_mean = "
        << format_number(spec.traffic.mu_d > 0.0 ? 1.0 / spec.traffic.mu_d : 0.0)
        << "\n";
    out << "holding_mean = " << format_number(1.0 / spec.traffic.delta_h) << "\n";
    out << "region_deadline_mean = "
        << format_number(spec.traffic.region_deadline_mean) << "\n";
    out << "channels = " << spec.channels << "\n";
    out << "queue_capacity = " << spec.base_policy.buffer_capacity << "\n";
    out << "policies = ";
    for (std::size_t i = 0; i < spec.policies.size(); ++i) {
        out << (i ? "," : "") << spec.policies[i];
    }
    out << "\n";
    out << "blocked_behavior = "
        << (spec.base_policy.blocked_behavior == BlockedCallBehavior::Depart
                ? "depart" : "retry") << "\n";
    out << "retry_delay = " << format_number(spec.base_policy.retry_delay) << "\n";
    out << "retry_max_attempts = " << spec.base_policy.retry_max_attempts << "\n";
    out << "priority_rule = ";
    switch (spec.base_policy.priority_rule) {
        case PriorityRule::UrgencyDeadline: out << "deadline"; break;
        case PriorityRule::RandomSnr: out << "random_snr"; break;
        case PriorityRule::Fifo: out << "fifo"; break;
    }
    out << "\n";
    out << "admission_rule = "
        << (spec.base_policy.admission_rule == AdmissionRule::LiteralFlowchart
                ? "literal" : "relaxed") << "\n";
    out << "eager_exchange = " << (spec.base_policy.eager_exchange ? "on" : "off")
        << "\n";
    out << "sweep = "
        << (spec.sweep_axis == SweepAxis::LambdaNc ? "lambda" : "queue") << "\n";
    out << "sweep_start = " << format_number(spec.sweep_start) << "\n";
    out << "sweep_stop = " << format_number(spec.sweep_stop) << "\n";
    out << "sweep_step = " << format_number(spec.sweep_step) << "\n";
    out << "horizon = " << format_number(spec.horizon) << "\n";
    out << "warmup_fraction = " << format_number(spec.warmup_fraction) << "\n";
    out << "replications = " << spec.replications << "\n";
    out << "base_seed = " << spec.base_seed << "\n";
    if (!spec.output_path.empty()) out << "output = " << spec.output_path << "\n";
    out << "oracle = " << (spec.emit_oracle ? "on" : "off") << "\n";
    return out.str();
}

// Runs every (policy x sweep point x replication). Replications at the same
// sweep point share seeds across policies (common random numbers), so policy
// comparisons are paired.
inline std::vector<ResultRow> run_campaign(const ExperimentSpec& spec) {
    using experiment_detail::summarize;
    spec.validate();
    const std::vector<double> sweep = spec.sweep_values();
    std::vector<ResultRow> rows;
    rows.reserve(spec.policies.size() * sweep.size());

    for (const std::string& label : spec.policies) {
        for (std::size_t si = 0; si < sweep.size(); ++si) {
            const double value = sweep[si];
            SimConfig cfg;
            cfg.channels_per_cell = spec.channels;
            cfg.traffic = spec.traffic;
            cfg.policy = policy_for_label(spec, label, value);
            cfg.horizon = spec.horizon;
            cfg.warmup_fraction = spec.warmup_fraction;
            if (spec.sweep_axis == SweepAxis::LambdaNc) {
                cfg.traffic.lambda_nc = value;
            }

            ResultRow row;
            row.policy = label;
            row.sweep_value = value;
            row.replications = spec.replications;
            row.base_seed = spec.base_seed;
            std::vector<double> hoc_samples;
            std::vector<double> carried_samples;
            for (int rep = 0; rep < spec.replications; ++rep) {
                // One stream per replication index, shared across policies and
                // sweep points: comparisons are paired by common random numbers.
                Simulation sim(cfg, spec.base_seed,
                               static_cast<std::uint64_t>(rep));
                MetricsLedger led = sim.run();
                row.ledgers.push_back(led);
                const auto nan = std::numeric_limits<double>::quiet_NaN();
                row.block_samples.push_back(blocking_probability(led).value_or(nan));
                row.fail_samples.push_back(
                    handover_failure_probability(led).value_or(nan));
                row.access_samples.push_back(access_probability(led).value_or(nan));
                hoc_samples.push_back(empirical_handover_rate(led) / 2.0);
                carried_samples.push_back(carried_traffic_erlangs(led) / 2.0);
            }
            row.p_block = summarize(row.block_samples);
            row.p_handover_fail = summarize(row.fail_samples);
            row.p_forced = row.p_handover_fail;
            row.p_access = summarize(row.access_samples);
            row.lambda_hoc = summarize(hoc_samples);
            row.carried = summarize(carried_samples);

            if (spec.emit_oracle) {
                if (cfg.traffic.mu_d == 0.0) {
                    row.oracle_erlang_b = erlang_b(
                        spec.channels, cfg.traffic.lambda_nc / cfg.traffic.delta_h);
                }
                try {
                    CtmcSpec cspec;
                    cspec.channels = spec.channels;
                    cspec.traffic = cfg.traffic;
                    cspec.policy = cfg.policy;
                    CtmcMetrics cm = ctmc_oracle(cspec);
                    row.oracle_ctmc_p_block = cm.p_block;
                    row.oracle_ctmc_p_fail = cm.p_handover_fail;
                    row.oracle_ctmc_p_access = cm.p_access;
                } catch (const CtmcError&) {
                    // instance too large (or otherwise unsolvable); leave blank
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::string emit_csv(const std::vector<ResultRow>& rows,
                            const ExperimentSpec& spec) {
    using experiment_detail::fnv1a;
    using experiment_detail::format_number;
    if (rows.empty()) throw std::invalid_argument("emit_csv: no rows");
    std::ostringstream out;
    out << "# crhx " << kToolVersion << "\n";
    out << "# config_hash " << std::hex << fnv1a(canonical_config(spec))
        << std::dec << "\n";
    out << "# base_seed " << spec.base_seed << "\n";
    out << "# access probability denominator: handover requests\n";
    out << "policy,sweep_axis,sweep_value,replications,"
           "p_block,p_block_hw,p_handover_fail,p_handover_fail_hw,"
           "p_forced,p_forced_hw,p_access,p_access_hw,"
           "lambda_hoc,lambda_hoc_hw,carried_erlangs,carried_erlangs_hw,"
           "oracle_erlang_b,oracle_ctmc_p_block,oracle_ctmc_p_fail,"
           "oracle_ctmc_p_access\n";
    auto interval_cols = [&](const std::optional<Interval>& v) {
        if (!v) return std::string(",");
        return format_number(v->mean) + "," + format_number(v->half_width);
    };
    auto scalar_col = [&](const std::optional<double>& v) {
        return v ? format_number(*v) : std::string();
    };
    for (const ResultRow& row : rows) {
        out << row.policy << ","
            << (spec.sweep_axis == SweepAxis::LambdaNc ? "lambda" : "queue") << ","
            << format_number(row.sweep_value) << "," << row.replications << ","
            << interval_cols(row.p_block) << ","
            << interval_cols(row.p_handover_fail) << ","
            << interval_cols(row.p_forced) << ","
            << interval_cols(row.p_access) << ","
            << interval_cols(row.lambda_hoc) << ","
            << interval_cols(row.carried) << ","
            << scalar_col(row.oracle_erlang_b) << ","
            << scalar_col(row.oracle_ctmc_p_block) << ","
            << scalar_col(row.oracle_ctmc_p_fail) << ","
            << scalar_col(row.oracle_ctmc_p_access) << "\n";
    }
    return out.str();
}

} // namespace crhx
