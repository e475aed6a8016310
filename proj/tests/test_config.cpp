#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "promo/config.hpp"

using namespace promo;

TEST_CASE("config text parses keys, comments and blanks") {
    const std::string text = R"(
# demo config
h = 64
w = 64
steps = 123
lambda = 0.25
mode = full
no_rope_groups = true
out_dir = /tmp/promo_demo
)";
    RunConfig c = parse_config_text(text);
    CHECK(c.h == 64);
    CHECK(c.steps == 123);
    CHECK(c.lambda == 0.25);
    CHECK(c.mode == "full");
    CHECK(c.no_rope_groups);
    CHECK(c.out_dir == "/tmp/promo_demo");
}

TEST_CASE("unknown keys are rejected") {
    CHECK_THROWS_AS(parse_config_text("definitely_not_a_key = 1\n"), contract_error);
    CHECK_THROWS_AS(parse_config_text("h 64\n"), contract_error);
}

TEST_CASE("validation catches bad values") {
    RunConfig c;
    c.lambda = 1.0;
    CHECK_THROWS_AS(c.validate(), contract_error);
    c = RunConfig{};
    c.mode = "speedy";
    CHECK_THROWS_AS(c.validate(), contract_error);
}

TEST_CASE("identity hash ignores runtime-only keys") {
    RunConfig a;
    RunConfig b = a;
    b.mode = "full";
    b.sample_steps = 50;
    b.eval_seeds = 7;
    b.out_dir = "elsewhere";
    b.dataset_dir = "/data";
    CHECK(a.identity_hash() == b.identity_hash());
}

TEST_CASE("identity hash tracks the trained artifact") {
    RunConfig a;
    RunConfig b = a;
    b.steps = a.steps + 1;
    CHECK(a.identity_hash() != b.identity_hash());
    RunConfig c = a;
    c.no_rope_groups = true;
    CHECK(a.identity_hash() != c.identity_hash());
    RunConfig d = a;
    d.lambda = 0.25;
    CHECK(a.identity_hash() != d.identity_hash());
    RunConfig e = a;
    e.no_cache = true;
    CHECK(a.identity_hash() != e.identity_hash());
}

TEST_CASE("PROMO_OUT overrides the output directory") {
    RunConfig c;
    c.out_dir = "from_config";
    unsetenv("PROMO_OUT");
    CHECK(c.resolved_out_dir() == "from_config");
    setenv("PROMO_OUT", "/tmp/from_env", 1);
    CHECK(c.resolved_out_dir() == "/tmp/from_env");
    unsetenv("PROMO_OUT");
}

TEST_CASE("hash hex is 16 nibbles and stable") {
    RunConfig c;
    const std::string h1 = c.identity_hash_hex();
    const std::string h2 = c.identity_hash_hex();
    CHECK(h1.size() == 16);
    CHECK(h1 == h2);
}
