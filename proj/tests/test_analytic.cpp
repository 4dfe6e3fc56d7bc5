#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crhx/analytic.hpp"

using namespace crhx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent closed-form route for the loss probability:
// B = (A^C / C!) / sum_k A^k / k!, evaluated in log space.
double erlang_b_closed_form(int channels, double a) {
    if (a == 0.0) return channels == 0 ? 1.0 : 0.0;
    std::vector<double> log_terms(channels + 1);
    double lt = 0.0;
    for (int k = 0; k <= channels; ++k) {
        if (k > 0) lt += std::log(a) - std::log(static_cast<double>(k));
        log_terms[k] = lt;
    }
    const double m = *std::max_element(log_terms.begin(), log_terms.end());
    double denom = 0.0;
    for (double t : log_terms) denom += std::exp(t - m);
    return std::exp(log_terms.back() - m) / denom;
}

} // namespace

TEST_CASE("handover propensity") {
    CHECK_THAT(handover_propensity(1.0, 1.0), WithinAbs(0.5, 1e-12));
    CHECK_THAT(handover_propensity(1.0 / 120.0, 1.0 / 240.0),
               WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(handover_propensity(1.0, 1e-12), WithinAbs(1.0, 1e-9));
    CHECK_THROWS_AS(handover_propensity(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("handover access complement") {
    CHECK(handover_access(0.0) == 1.0);
    CHECK(handover_access(1.0) == 0.0);
    CHECK_THAT(handover_access(0.05), WithinAbs(0.95, 1e-12));
    CHECK_THROWS_AS(handover_access(1.5), std::invalid_argument);
}

TEST_CASE("exchange success probability") {
    CHECK(exchange_success(0.0, 0.0, 1.0) == 1.0);
    CHECK(exchange_success(1.0, 0.3, 0.4) == 0.0);
    CHECK_THAT(exchange_success(0.1, 0.05, 2.0 / 3.0), WithinAbs(0.57, 1e-12));
}

TEST_CASE("handover rate variants") {
    CHECK(handover_rate(1.0, 0.2, 0.1, 0.5, HandoverRateVariant::LiteralForm) == 1.0);
    CHECK_THAT(handover_rate(1.0, 0.0, 0.0, 2.0 / 3.0,
                             HandoverRateVariant::FixedPoint),
               WithinAbs(2.0, 1e-12));
    CHECK(handover_rate(1.0, 0.0, 0.0, 0.0, HandoverRateVariant::FixedPoint) == 0.0);
    CHECK_THROWS_AS(
        handover_rate(1.0, 0.0, 0.0, 1.0, HandoverRateVariant::FixedPoint),
        std::domain_error);
}

TEST_CASE("offered traffic") {
    CHECK_THAT(offered_traffic(1.0, 1.0 / 120.0), WithinAbs(120.0, 1e-9));
    CHECK(offered_traffic(0.0, 0.5) == 0.0);
    CHECK_THAT(offered_traffic(2.0, 1.0 / 120.0),
               WithinRel(2.0 * offered_traffic(1.0, 1.0 / 120.0), 1e-12));
    CHECK_THROWS_AS(offered_traffic(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("carried traffic") {
    CHECK(carried_traffic(120.0, 0.0) == 120.0);
    CHECK(carried_traffic(120.0, 1.0) == 0.0);
    CHECK_THAT(carried_traffic(120.0, 0.25), WithinAbs(90.0, 1e-12));
}

TEST_CASE("erlang_b pinned values") {
    CHECK_THAT(erlang_b(1, 1.0), WithinAbs(0.5, 1e-12));
    CHECK_THAT(erlang_b(2, 1.0), WithinAbs(0.2, 1e-12));
    CHECK_THAT(erlang_b(10, 120.0), WithinAbs(0.91740967, 5e-8));
    CHECK(erlang_b(0, 3.0) == 1.0);
    CHECK(erlang_b(5, 0.0) == 0.0);
    CHECK_THROWS_AS(erlang_b(-1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(erlang_b(1, -1.0), std::invalid_argument);
}

TEST_CASE("erlang_b recursion matches the closed form") {
    for (int c : {1, 2, 5, 10, 25}) {
        for (double a : {0.5, 2.0, 6.0, 12.0, 120.0}) {
            CHECK_THAT(erlang_b(c, a), WithinRel(erlang_b_closed_form(c, a), 1e-10));
        }
    }
}

TEST_CASE("erlang_b monotone in channels and load") {
    for (int c = 1; c < 20; ++c) {
        CHECK(erlang_b(c + 1, 8.0) < erlang_b(c, 8.0));
    }
    for (double a = 1.0; a < 20.0; a += 1.0) {
        CHECK(erlang_b(10, a + 1.0) > erlang_b(10, a));
    }
}
