#pragma once

#include <stdexcept>
#include <string>

namespace crhx {

namespace detail {
inline void require_probability(double p, const char* name) {
    if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
    }
}
} // namespace detail

// Likelihood that a call's dwell ends before its holding time, i.e. that it
// will need a handover at all.
inline double handover_propensity(double mu_d, double delta_h) {
    if (mu_d <= 0.0 || delta_h <= 0.0) {
        throw std::invalid_argument("handover_propensity: rates must be > 0");
    }
    return mu_d / (mu_d + delta_h);
}

inline double handover_access(double p_hf) {
    detail::require_probability(p_hf, "p_hf");
    return 1.0 - p_hf;
}

// Probability that a call admitted in one cell goes on to a successful
// channel exchange with the other.
inline double exchange_success(double p_nc, double p_hf, double propensity) {
    detail::require_probability(p_nc, "p_nc");
    detail::require_probability(p_hf, "p_hf");
    detail::require_probability(propensity, "propensity");
    return (1.0 - p_nc) * (1.0 - p_hf) * propensity;
}

enum class HandoverRateVariant {
    // The published closed form; its numerator and denominator cancel, so it
    // degenerates to lambda_nc. Shipped for faithfulness.
    LiteralForm,
    // Geometric-chain closure over repeated handovers of one call.
    FixedPoint,
};

inline double handover_rate(double lambda_nc, double p_nc, double p_hf,
                            double propensity, HandoverRateVariant variant) {
    if (lambda_nc < 0.0) throw std::invalid_argument("lambda_nc must be >= 0");
    detail::require_probability(p_nc, "p_nc");
    detail::require_probability(p_hf, "p_hf");
    detail::require_probability(propensity, "propensity");
    switch (variant) {
        case HandoverRateVariant::LiteralForm:
            return lambda_nc;
        case HandoverRateVariant::FixedPoint: {
            const double denom = 1.0 - (1.0 - p_hf) * propensity;
            if (denom <= 0.0) {
                throw std::domain_error("handover_rate: divergent load");
            }
            return lambda_nc * (1.0 - p_nc) * propensity / denom;
        }
    }
    throw std::invalid_argument("handover_rate: unknown variant");
}

// Offered traffic in Erlangs, new-call arrival rate over the dwell rate.
inline double offered_traffic(double lambda_nc, double mu_d) {
    if (lambda_nc < 0.0) throw std::invalid_argument("lambda_nc must be >= 0");
    if (mu_d <= 0.0) throw std::invalid_argument("mu_d must be > 0");
    return lambda_nc / mu_d;
}

inline double carried_traffic(double omega_ot, double p_nc) {
    if (omega_ot < 0.0) throw std::invalid_argument("omega_ot must be >= 0");
    detail::require_probability(p_nc, "p_nc");
    return omega_ot * (1.0 - p_nc);
}

// Erlang-B loss probability of an M/M/C/C system via the standard recursion
// B(0) = 1, B(k) = A B(k-1) / (k + A B(k-1)).
inline double erlang_b(int channels, double offered_erlangs) {
    if (channels < 0) throw std::invalid_argument("erlang_b: channels must be >= 0");
    if (offered_erlangs < 0.0) {
        throw std::invalid_argument("erlang_b: offered traffic must be >= 0");
    }
    double b = 1.0;
    for (int k = 1; k <= channels; ++k) {
        b = offered_erlangs * b / (static_cast<double>(k) + offered_erlangs * b);
    }
    return b;
}

} // namespace crhx
