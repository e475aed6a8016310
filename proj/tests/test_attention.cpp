#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "promo/attention.hpp"
#include "promo/rng.hpp"

using namespace promo;

namespace {

Mat<double> random_mat(Rng& rng, int r, int c) {
    Mat<double> m(r, c);
    for (auto& v : m.a) v = rng.normal();
    return m;
}

// Independent oracle: per-row softmax with explicit renormalization over
// visible columns only. No additive-bias trick.
Mat<double> brute_attention(const Mat<double>& Q, const Mat<double>& K, const Mat<double>& V,
                            const Mat<uint8_t>& mask) {
    const double scale = 1.0 / std::sqrt(double(Q.cols));
    Mat<double> out(Q.rows, V.cols);
    for (int i = 0; i < Q.rows; ++i) {
        std::vector<double> logits(K.rows, 0.0);
        double mx = -1e300;
        for (int j = 0; j < K.rows; ++j) {
            if (!mask.at(i, j)) continue;
            double s = 0;
            for (int k = 0; k < Q.cols; ++k) s += Q.at(i, k) * K.at(j, k);
            logits[j] = s * scale;
            mx = std::max(mx, logits[j]);
        }
        double z = 0;
        for (int j = 0; j < K.rows; ++j)
            if (mask.at(i, j)) z += std::exp(logits[j] - mx);
        for (int j = 0; j < K.rows; ++j) {
            if (!mask.at(i, j)) continue;
            const double p = std::exp(logits[j] - mx) / z;
            for (int k = 0; k < V.cols; ++k) out.at(i, k) += p * V.at(j, k);
        }
    }
    return out;
}

SegmentLayout demo_layout() {
    SegmentLayout l;
    l.segments = {{"latent", SegKind::latent, 4},
                  {"style", SegKind::style, 2},
                  {"C1", SegKind::condition, 3},
                  {"C2", SegKind::condition, 2}};
    return l;
}

}  // namespace

TEST_CASE("group mask visibility pattern") {
    SegmentLayout l;
    l.segments = {{"latent", SegKind::latent, 4},
                  {"style", SegKind::style, 2},
                  {"C1", SegKind::condition, 3}};
    Mat<uint8_t> m = build_group_mask(l);
    REQUIRE(m.rows == 9);
    // latent + style rows all-true
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 9; ++j) CHECK(m.at(i, j) == 1);
    // C1 rows: exactly 3 true entries, on C1 columns
    for (int i = 6; i < 9; ++i) {
        int count = 0;
        for (int j = 0; j < 9; ++j) count += m.at(i, j);
        CHECK(count == 3);
        for (int j = 6; j < 9; ++j) CHECK(m.at(i, j) == 1);
    }
}

TEST_CASE("no conditions gives an all-true mask") {
    SegmentLayout l;
    l.segments = {{"latent", SegKind::latent, 5}};
    Mat<uint8_t> m = build_group_mask(l);
    for (auto v : m.a) CHECK(v == 1);
}

TEST_CASE("conditions cannot see each other") {
    Mat<uint8_t> m = build_group_mask(demo_layout());
    // C1 rows are 6..8, C2 columns are 9..10
    for (int i = 6; i < 9; ++i)
        for (int j = 9; j < 11; ++j) CHECK(m.at(i, j) == 0);
    for (int i = 9; i < 11; ++i) {
        for (int j = 0; j < 9; ++j) CHECK(m.at(i, j) == 0);
        for (int j = 9; j < 11; ++j) CHECK(m.at(i, j) == 1);
    }
}

TEST_CASE("layout validation") {
    SegmentLayout two_latent;
    two_latent.segments = {{"a", SegKind::latent, 2}, {"b", SegKind::latent, 2}};
    CHECK_THROWS_AS(two_latent.validate(), contract_error);

    SegmentLayout cond_before_style;
    cond_before_style.segments = {{"z", SegKind::latent, 2},
                                  {"C1", SegKind::condition, 2},
                                  {"style", SegKind::style, 2}};
    CHECK_THROWS_AS(cond_before_style.validate(), contract_error);
}

TEST_CASE("single visible column returns that value row exactly") {
    Rng rng(42);
    Mat<double> Q = random_mat(rng, 1, 8), K = random_mat(rng, 5, 8), V = random_mat(rng, 5, 6);
    Mat<uint8_t> mask(1, 5, 0);
    mask.at(0, 3) = 1;
    Mat<double> out = masked_attention(Q, K, V, mask);
    for (int k = 0; k < 6; ++k) CHECK_THAT(out.at(0, k), Catch::Matchers::WithinAbs(V.at(3, k), 1e-12));
}

TEST_CASE("all-visible single query is a softmax average") {
    Rng rng(43);
    Mat<double> Q = random_mat(rng, 1, 4);
    Mat<double> K = random_mat(rng, 3, 4);
    Mat<double> out = masked_attention(Q, K, K, Mat<uint8_t>(1, 3, 1));
    CHECK(out.rows == 1);
    // must be a convex combination of V rows: each output dim between min/max
    for (int k = 0; k < 4; ++k) {
        double lo = 1e300, hi = -1e300;
        for (int j = 0; j < 3; ++j) {
            lo = std::min(lo, K.at(j, k));
            hi = std::max(hi, K.at(j, k));
        }
        CHECK(out.at(0, k) >= lo - 1e-12);
        CHECK(out.at(0, k) <= hi + 1e-12);
    }
}

TEST_CASE("masked attention equals the dense renormalization oracle") {
    Rng rng(4242);
    for (int trial = 0; trial < 30; ++trial) {
        Mat<double> Q = random_mat(rng, 8, 8), K = random_mat(rng, 8, 8), V = random_mat(rng, 8, 8);
        Mat<uint8_t> mask(8, 8, 0);
        for (int i = 0; i < 8; ++i) {
            mask.at(i, rng.uniform_int(8)) = 1;  // guarantee a visible column
            for (int j = 0; j < 8; ++j)
                if (rng.bernoulli(0.6)) mask.at(i, j) = 1;
        }
        Mat<double> got = masked_attention(Q, K, V, mask);
        Mat<double> want = brute_attention(Q, K, V, mask);
        for (size_t i = 0; i < got.a.size(); ++i)
            REQUIRE_THAT(got.a[i], Catch::Matchers::WithinAbs(want.a[i], 1e-6));
    }
}

TEST_CASE("attention rows sum to one over visible columns") {
    Rng rng(99);
    Mat<double> Q = random_mat(rng, 6, 12), K = random_mat(rng, 9, 12), V = random_mat(rng, 9, 4);
    Mat<uint8_t> mask(6, 9, 1);
    auto r = masked_attention_probs(Q, K, V, mask);
    for (int i = 0; i < 6; ++i) {
        double s = 0;
        for (int j = 0; j < 9; ++j) s += r.probs.at(i, j);
        CHECK_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("fully masked row is rejected") {
    Mat<double> Q(2, 4), K(3, 4), V(3, 4);
    Mat<uint8_t> mask(2, 3, 1);
    for (int j = 0; j < 3; ++j) mask.at(1, j) = 0;
    CHECK_THROWS_AS(masked_attention(Q, K, V, mask), contract_error);
}

TEST_CASE("cache of zero condition tokens degenerates to live attention") {
    SegmentLayout l;
    l.segments = {{"latent", SegKind::latent, 4}, {"style", SegKind::style, 2}};
    Rng rng(7);
    Mat<double> Q = random_mat(rng, 6, 6), K = random_mat(rng, 6, 6), V = random_mat(rng, 6, 6);
    LayerKVCache<double> cache = capture_cache(K, V, l);
    CHECK(cache.cond_tokens() == 0);
    Mat<double> cached = attend_with_cache(Q, K, V, cache, l);
    Mat<double> live = masked_attention(Q, K, V, Mat<uint8_t>(6, 6, 1));
    CHECK(cached == live);
}

TEST_CASE("cached attention equals explicit concatenation exactly") {
    SegmentLayout l = demo_layout();
    Rng rng(8);
    const int S = l.total(), d = 12;
    Mat<double> K = random_mat(rng, S, d), V = random_mat(rng, S, d);
    LayerKVCache<double> cache = capture_cache(K, V, l);
    REQUIRE(cache.cond_tokens() == 5);

    const int live = l.live_total();
    Mat<double> Q_live = random_mat(rng, live, d);
    Mat<double> K_live(live, d), V_live(live, d);
    for (int i = 0; i < live; ++i) {
        std::copy(K.row(i), K.row(i) + d, K_live.row(i));
        std::copy(V.row(i), V.row(i) + d, V_live.row(i));
    }
    Mat<double> got = attend_with_cache(Q_live, K_live, V_live, cache, l);

    // Reference: dense masked attention over the full sequence using the
    // live rows of the group mask.
    Mat<uint8_t> full_mask = build_group_mask(l);
    Mat<uint8_t> live_mask(live, S);
    for (int i = 0; i < live; ++i)
        for (int j = 0; j < S; ++j) live_mask.at(i, j) = full_mask.at(i, j);
    Mat<double> Q_full = Q_live;
    Mat<double> want = masked_attention(Q_full, K, V, live_mask);
    CHECK(got == want);  // exact: same kernel, same accumulation order
}

TEST_CASE("cache is immutable after capture") {
    SegmentLayout l = demo_layout();
    Rng rng(9);
    const int S = l.total(), d = 6;
    Mat<double> K = random_mat(rng, S, d), V = random_mat(rng, S, d);
    LayerKVCache<double> cache = capture_cache(K, V, l);
    const Mat<double> k_before = cache.K, v_before = cache.V;
    for (auto& v : K.a) v = 777.0;
    for (auto& v : V.a) v = -777.0;
    CHECK(cache.K == k_before);
    CHECK(cache.V == v_before);
}

TEST_CASE("cache layout mismatch is rejected") {
    SegmentLayout l = demo_layout();
    Rng rng(10);
    const int d = 6;
    Mat<double> K = random_mat(rng, l.total(), d), V = random_mat(rng, l.total(), d);
    LayerKVCache<double> cache = capture_cache(K, V, l);
    SegmentLayout other = l;
    other.segments[2].len = 4;  // different C1 length
    Mat<double> Q = random_mat(rng, other.live_total(), d);
    Mat<double> Kl = random_mat(rng, other.live_total(), d);
    CHECK_THROWS_AS(attend_with_cache(Q, Kl, Kl, cache, other), contract_error);
}
