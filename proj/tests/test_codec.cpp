#include <catch2/catch_amalgamated.hpp>

#include "promo/codec.hpp"
#include "promo/rng.hpp"

using namespace promo;

namespace {

// Random test images on the k/2^24 dyadic grid (exactly representable in
// float; the renderer's palette lives on the coarser k/256 grid).
Image random_image(Rng& rng, int h, int w, int c = 3) {
    Image img(h, w, c);
    for (auto& v : img.data) v = float(rng.next_u64() >> 40) * 0x1.0p-24f;
    return img;
}

}  // namespace

TEST_CASE("encode shape arithmetic") {
    Image img(64, 64, 3, 0.25f);
    TokenGrid g = encode_image(img, 4);
    CHECK(g.h == 16);
    CHECK(g.w == 16);
    CHECK(g.d == 48);
}

TEST_CASE("constant image gives equal tokens") {
    Image img(16, 16, 3, 0.5f);
    TokenGrid g = encode_image(img, 4);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x)
            for (int k = 0; k < g.d; ++k) CHECK(g.token(y, x)[k] == g.token(0, 0)[0]);
}

TEST_CASE("decode is an exact left inverse of encode") {
    Rng rng(20240901);
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 1 + trial % 4;
        const int h = p * (2 + trial % 5), w = p * (3 + trial % 4);
        Image img = random_image(rng, h, w);
        Image back = decode_grid(encode_image(img, p), p);
        REQUIRE(back == img);  // bit-exact
    }
}

TEST_CASE("encode is linear up to the affine shift") {
    // encode(x) = 2x - 1, so encode(a*x + b*y) = a*enc(x) + b*enc(y) + (a+b-1).
    Rng rng(7);
    Image x = random_image(rng, 8, 8), y = random_image(rng, 8, 8);
    const float a = 0.25f, b = 0.5f;
    Image mix(8, 8, 3);
    for (size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = a * x.data[i] + b * y.data[i];
    TokenGrid gm = encode_image(mix, 2), gx = encode_image(x, 2), gy = encode_image(y, 2);
    for (size_t i = 0; i < gm.data.size(); ++i)
        CHECK_THAT(gm.data[i],
                   Catch::Matchers::WithinAbs(a * gx.data[i] + b * gy.data[i] + (a + b - 1.0f), 1e-6));
}

TEST_CASE("p=1 decode is the plain de-normalization") {
    TokenGrid g(3, 3, 3);
    Rng rng(11);
    for (auto& v : g.data) v = float(rng.uniform() * 2 - 1);
    Image img = decode_grid(g, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(img.at(c, y, x) == (g.token(y, x)[c] + 1.0f) * 0.5f);
}

TEST_CASE("zero grid decodes to the normalization midpoint") {
    TokenGrid g(4, 4, 48);
    Image img = decode_grid(g, 4);
    for (float v : img.data) CHECK(v == kPixelMidpoint);
}

TEST_CASE("encode rejects non-divisible dims") {
    Image img(10, 10, 3);
    CHECK_THROWS_AS(encode_image(img, 4), contract_error);
    TokenGrid g(2, 2, 12);
    CHECK_THROWS_AS(decode_grid(g, 4), contract_error);
}
