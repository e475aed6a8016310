#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "promo/rng.hpp"
#include "promo/style.hpp"
#include "promo/synth.hpp"

using namespace promo;

TEST_CASE("null style maps to the all-NULL sequence") {
    StyleTokenizer tok(2, kNumGarmentColors);
    auto seq = tok.to_tokens(std::nullopt);
    REQUIRE(int(seq.size()) == tok.seq_len());
    for (int t : seq) CHECK(t == StyleTokenizer::kNull);
}

TEST_CASE("distinct styles give distinct sequences") {
    StyleTokenizer tok(2, kNumGarmentColors);
    std::set<std::vector<int>> seen;
    int styles = 0;
    // enumerate a healthy slice of the attribute space
    for (int slot = 0; slot < 2; ++slot)
        for (int color = 0; color < kNumGarmentColors; ++color)
            for (int pat = 0; pat < kNumPatterns; ++pat)
                for (int len = 0; len < kNumLengths; ++len)
                    for (int tuck = 0; tuck < kNumTucks; ++tuck) {
                        StyleAttrs a;
                        a.garments.push_back({Slot(slot), color, Pattern(pat), GarmentLength(len),
                                              Tuck(tuck)});
                        seen.insert(tok.to_tokens(a));
                        ++styles;
                    }
    CHECK(int(seen.size()) == styles);
}

TEST_CASE("token round trip is the identity on non-null styles") {
    StyleTokenizer tok(2, kNumGarmentColors);
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        StyleAttrs a = sample_style(rng, 2);
        auto seq = tok.to_tokens(a);
        auto back = tok.from_tokens(seq);
        REQUIRE(back.has_value());
        CHECK(*back == a);
        CHECK(tok.to_tokens(back) == seq);
    }
    CHECK(!tok.from_tokens(tok.to_tokens(std::nullopt)).has_value());
}

TEST_CASE("malformed token sequences are rejected") {
    StyleTokenizer tok(2, kNumGarmentColors);
    std::vector<int> bad(tok.seq_len(), StyleTokenizer::kPad);
    CHECK_THROWS_AS(tok.from_tokens(bad), contract_error);
    std::vector<int> wrong_len(3, StyleTokenizer::kNull);
    CHECK_THROWS_AS(tok.from_tokens(wrong_len), contract_error);
}

TEST_CASE("slot ordering is enforced") {
    StyleAttrs bad;
    bad.garments.push_back({Slot::lower, 0, Pattern::solid, GarmentLength::short_cut, Tuck::tucked_out});
    bad.garments.push_back({Slot::upper, 1, Pattern::solid, GarmentLength::short_cut, Tuck::tucked_out});
    CHECK_THROWS_AS(bad.validate(2, kNumGarmentColors), contract_error);
}
