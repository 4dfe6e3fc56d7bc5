#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "crhx/experiment.hpp"

using namespace crhx;
using Catch::Matchers::ContainsSubstring;

namespace {

// Cheap campaign for structural tests.
std::string mini_config() {
    return
        "lambda_nc = 0.8\n"
        "dwell_mean = 4\n"
        "holding_mean = 8\n"
        "region_deadline_mean = 1\n"
        "channels = 2\n"
        "queue_capacity = 1\n"
        "sweep = lambda\n"
        "sweep_start = 0.4\n"
        "sweep_stop = 0.8\n"
        "sweep_step = 0.4\n"
        "horizon = 500\n"
        "replications = 3\n"
        "base_seed = 7\n";
}

} // namespace

TEST_CASE("empty config yields the default parameter block") {
    ExperimentSpec spec = parse_config("");
    CHECK(spec.traffic.lambda_nc == 1.0);
    CHECK(spec.traffic.mu_d == 1.0 / 120.0);
    CHECK(spec.traffic.delta_h == 1.0 / 240.0);
    CHECK(spec.channels == 10);
    CHECK(spec.base_policy.buffer_capacity == 2);
    CHECK(spec.replications == 20);
}

TEST_CASE("comments and blank lines are ignored") {
    ExperimentSpec spec = parse_config("# a comment\n\nchannels = 5 # trailing\n");
    CHECK(spec.channels == 5);
}

TEST_CASE("invalid values are rejected with the offending key and line") {
    CHECK_THROWS_WITH(parse_config("lambda_nc = -1\n"),
                      ContainsSubstring("lambda_nc"));
    CHECK_THROWS_WITH(parse_config("\nbogus_key = 3\n"),
                      ContainsSubstring("line 2") && ContainsSubstring("bogus_key"));
    CHECK_THROWS_WITH(parse_config("horizon = fast\n"),
                      ContainsSubstring("horizon"));
    CHECK_THROWS_AS(parse_config("sweep_start = 2\nsweep_stop = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("policies = exchange,nonsense\n"), ConfigError);
}

TEST_CASE("canonical emission round-trips") {
    ExperimentSpec spec = parse_config(mini_config());
    const std::string canon = canonical_config(spec);
    ExperimentSpec again = parse_config(canon);
    CHECK(canonical_config(again) == canon);
}

TEST_CASE("campaign cardinality is policies x sweep points") {
    ExperimentSpec spec = parse_config(mini_config());
    REQUIRE(spec.policies.size() == 3);
    REQUIRE(spec.sweep_values().size() == 2);
    auto rows = run_campaign(spec);
    CHECK(rows.size() == 6);
    for (const auto& row : rows) {
        CHECK(row.replications == 3);
        REQUIRE(row.p_block.has_value());
        CHECK(row.p_block->mean >= 0.0);
        CHECK(row.p_block->mean <= 1.0);
        CHECK(row.p_block->half_width >= 0.0);
    }
}

TEST_CASE("identical spec and seed produce byte-identical CSV") {
    ExperimentSpec spec = parse_config(mini_config());
    const std::string a = emit_csv(run_campaign(spec), spec);
    const std::string b = emit_csv(run_campaign(spec), spec);
    CHECK(a == b);
}

TEST_CASE("CSV carries a fixed header and one line per row") {
    ExperimentSpec spec = parse_config(mini_config());
    spec.policies = {"exchange"};
    auto rows = run_campaign(spec);
    REQUIRE_FALSE(rows.empty());
    rows.resize(1);
    const std::string csv = emit_csv(rows, spec);
    std::istringstream in(csv);
    std::string line;
    int content = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.rfind('#', 0) == 0) continue;
        if (!saw_header) {
            CHECK(line.rfind("policy,sweep_axis,sweep_value", 0) == 0);
            saw_header = true;
            continue;
        }
        ++content;
        CHECK(line.rfind("exchange,lambda,0.4,", 0) == 0);
    }
    CHECK(saw_header);
    CHECK(content == 1);
}

TEST_CASE("oracle columns appear for tiny instances") {
    ExperimentSpec spec = parse_config(mini_config());
    spec.policies = {"exchange"};
    spec.emit_oracle = true;
    auto rows = run_campaign(spec);
    REQUIRE_FALSE(rows.empty());
    CHECK(rows.front().oracle_ctmc_p_block.has_value());
    CHECK_FALSE(rows.front().oracle_erlang_b.has_value()); // dwell enabled
}

TEST_CASE("queue sweep drives the buffer capacity") {
    ExperimentSpec spec = parse_config(mini_config());
    spec.sweep_axis = SweepAxis::QueueCapacity;
    spec.sweep_start = 0.0;
    spec.sweep_stop = 2.0;
    spec.sweep_step = 1.0;
    spec.policies = {"exchange", "conventional"};
    auto rows = run_campaign(spec);
    CHECK(rows.size() == 6);
    // Conventional ignores the queue axis entirely: identical runs per point.
    const auto* conv0 = &rows[3];
    const auto* conv2 = &rows[5];
    REQUIRE(conv0->policy == "conventional");
    CHECK(conv0->p_block->mean == conv2->p_block->mean);
}
