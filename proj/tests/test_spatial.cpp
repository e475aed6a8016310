#include <catch2/catch_amalgamated.hpp>

#include "promo/codec.hpp"
#include "promo/rng.hpp"
#include "promo/spatial.hpp"

using namespace promo;

TEST_CASE("make_agnostic basic cases") {
    Image person(4, 4, 3, 0.8f);
    SECTION("all-ones mask zeroes everything") {
        Image mask(4, 4, 1, 1.0f);
        Image out = make_agnostic(person, mask);
        for (float v : out.data) CHECK(v == 0.0f);
    }
    SECTION("all-zero mask is the identity") {
        Image mask(4, 4, 1, 0.0f);
        CHECK(make_agnostic(person, mask) == person);
    }
    SECTION("single pixel") {
        Image mask(4, 4, 1, 0.0f);
        mask.at(0, 1, 2) = 1.0f;
        Image out = make_agnostic(person, mask);
        CHECK(out.at(0, 1, 2) == 0.0f);
        CHECK(out.at(0, 1, 1) == 0.8f);
    }
    SECTION("shape mismatch rejected") {
        Image mask(3, 4, 1);
        CHECK_THROWS_AS(make_agnostic(person, mask), contract_error);
    }
}

TEST_CASE("make_agnostic leaks nothing inside the mask") {
    Rng rng(5);
    Image person(16, 16, 3);
    for (auto& v : person.data) v = float(rng.uniform());
    Image mask(16, 16, 1);
    for (auto& v : mask.data) v = rng.bernoulli(0.4) ? 1.0f : 0.0f;
    Image out = make_agnostic(person, mask);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                if (mask.at(0, y, x) != 0.0f) REQUIRE(out.at(c, y, x) == 0.0f);
}

TEST_CASE("merge_spatial with zero pose is plain 2x2 average pooling") {
    Rng rng(9);
    Image ag(8, 8, 3);
    for (auto& v : ag.data) v = float(rng.uniform());
    Image pose(8, 8, 3, 0.0f);
    Image out = merge_spatial(ag, pose);
    REQUIRE(out.h == 4);
    REQUIRE(out.w == 4);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                const float avg = (ag.at(c, 2 * y, 2 * x) + ag.at(c, 2 * y, 2 * x + 1) +
                                   ag.at(c, 2 * y + 1, 2 * x) + ag.at(c, 2 * y + 1, 2 * x + 1)) /
                                  4.0f;
                CHECK_THAT(out.at(c, y, x), Catch::Matchers::WithinAbs(avg, 1e-7));
            }
}

TEST_CASE("merged condition is 12.5% of the naive two-condition tokens") {
    // H=W=64, p=4: mask+pose separately -> 2*256 tokens; merged -> 64.
    Image ag(64, 64, 3, 0.5f), pose(64, 64, 3, 0.0f);
    const int naive = 2 * encode_image(ag, 4).tokens();
    Image merged = merge_spatial(ag, pose);
    const int merged_tokens = encode_image(merged, 4).tokens();
    CHECK(naive == 512);
    CHECK(merged_tokens == 64);
    CHECK(merged_tokens * 8 == naive);
}

TEST_CASE("merge_spatial hand-computed overlay pixel") {
    // 2x2 block: one pose pixel (1,0,0) over 0.4 gray agnostic.
    Image ag(2, 2, 3, 0.4f);
    Image pose(2, 2, 3, 0.0f);
    pose.at(0, 0, 0) = 1.0f;
    Image out = merge_spatial(ag, pose);
    CHECK_THAT(out.at(0, 0, 0), Catch::Matchers::WithinAbs((1.0 + 0.4 * 3) / 4.0, 1e-7));  // 0.55
    CHECK_THAT(out.at(1, 0, 0), Catch::Matchers::WithinAbs((0.0 + 0.4 * 3) / 4.0, 1e-7));  // pose zeroed green
}

TEST_CASE("region weight map endpoints and half coverage") {
    // 4x4 parsing mask pooled to 2x2: one pure body cell, one pure
    // background cell, one half-covered cell.
    Image parsing(4, 4, 1, 0.0f);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) parsing.at(0, y, x) = 1.0f;  // cell 0,0 pure body
    parsing.at(0, 2, 0) = 1.0f;
    parsing.at(0, 2, 1) = 1.0f;  // cell 1,0 half covered

    WeightMap wm = region_weight_map(parsing, 0.5, 2, 2);
    CHECK_THAT(wm.at(0, 0), Catch::Matchers::WithinAbs(1.5, 1e-9));
    CHECK_THAT(wm.at(0, 1), Catch::Matchers::WithinAbs(0.5, 1e-9));
    CHECK_THAT(wm.at(1, 0), Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("lambda=0 disables weighting") {
    Image parsing(8, 8, 1);
    Rng rng(3);
    for (auto& v : parsing.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    WeightMap wm = region_weight_map(parsing, 0.0, 4, 4);
    for (float v : wm.weights) CHECK(v == 1.0f);
}

TEST_CASE("mean weight identity") {
    Rng rng(77);
    Image parsing(32, 32, 1);
    double mean_parse = 0.0;
    for (auto& v : parsing.data) {
        v = rng.bernoulli(0.3) ? 1.0f : 0.0f;
        mean_parse += v;
    }
    mean_parse /= parsing.data.size();
    const double lambda = 0.5;
    WeightMap wm = region_weight_map(parsing, lambda, 8, 8);
    double mean_w = 0.0;
    for (float v : wm.weights) mean_w += v;
    mean_w /= wm.weights.size();
    CHECK_THAT(mean_w, Catch::Matchers::WithinAbs(1.0 + lambda * (2.0 * mean_parse - 1.0), 1e-9));
}

TEST_CASE("weights stay inside [1-lambda, 1+lambda]") {
    Rng rng(123);
    Image parsing(16, 16, 1);
    for (auto& v : parsing.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    const double lambda = 0.7;
    WeightMap wm = region_weight_map(parsing, lambda, 4, 4);
    for (float v : wm.weights) {
        CHECK(v >= float(1.0 - lambda) - 1e-6f);
        CHECK(v <= float(1.0 + lambda) + 1e-6f);
    }
}

TEST_CASE("region weight map rejects bad factors") {
    Image parsing(10, 10, 1);
    CHECK_THROWS_AS(region_weight_map(parsing, 0.5, 4, 4), contract_error);
    CHECK_THROWS_AS(region_weight_map(parsing, 1.0, 5, 5), contract_error);
}
