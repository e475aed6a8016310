#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <map>

#include "promo/style.hpp"
#include "promo/synth.hpp"

using namespace promo;

namespace {

const GeneratorConfig kCfg;  // defaults: 64x64, garments 32x32, n_max 2

bool images_equal(const Image& a, const Image& b) { return a == b; }

}  // namespace

TEST_CASE("same seed and config give bit-identical samples") {
    TryOnSample a = gen_sample(7, kCfg);
    TryOnSample b = gen_sample(7, kCfg);
    CHECK(images_equal(a.person, b.person));
    CHECK(images_equal(a.target, b.target));
    CHECK(images_equal(a.pose_map, b.pose_map));
    CHECK(images_equal(a.agnostic_mask, b.agnostic_mask));
    CHECK(images_equal(a.parsing_mask, b.parsing_mask));
    REQUIRE(a.garments.size() == b.garments.size());
    for (size_t i = 0; i < a.garments.size(); ++i) CHECK(images_equal(a.garments[i], b.garments[i]));
    CHECK(a.style == b.style);
}

TEST_CASE("masking invariant: target equals person off the edited region") {
    // Full-image pixel scan for a spread of seeds.
    for (uint64_t seed : {1ull, 2ull, 3ull, 10ull, 99ull, 12345ull}) {
        TryOnSample s = gen_sample(seed, kCfg);
        for (int y = 0; y < kCfg.h; ++y)
            for (int x = 0; x < kCfg.w; ++x) {
                if (s.agnostic_mask.at(0, y, x) != 0.0f) continue;
                if (s.parsing_mask.at(0, y, x) != 0.0f) continue;
                for (int c = 0; c < 3; ++c) REQUIRE(s.target.at(c, y, x) == s.person.at(c, y, x));
            }
    }
}

TEST_CASE("agnostic mask covers the garment composite region plus margin") {
    for (uint64_t seed : {4ull, 8ull, 15ull, 16ull}) {
        auto [s, det] = gen_sample_detail(seed, kCfg);
        // every pixel where target differs from person must be masked
        for (int y = 0; y < kCfg.h; ++y)
            for (int x = 0; x < kCfg.w; ++x)
                for (int c = 0; c < 3; ++c)
                    if (s.target.at(c, y, x) != s.person.at(c, y, x))
                        REQUIRE(s.agnostic_mask.at(0, y, x) == 1.0f);
        // and the mask is exactly the dilated union of composite rects
        Image expect(kCfg.h, kCfg.w, 1);
        for (const auto& r : det.garment_rects)
            for (int y = std::max(0, r.y0 - kCfg.mask_margin);
                 y <= std::min(kCfg.h - 1, r.y1 + kCfg.mask_margin); ++y)
                for (int x = std::max(0, r.x0 - kCfg.mask_margin);
                     x <= std::min(kCfg.w - 1, r.x1 + kCfg.mask_margin); ++x)
                    expect.at(0, y, x) = 1.0f;
        REQUIRE(s.agnostic_mask == expect);
    }
}

TEST_CASE("parsing mask contains body and worn garments") {
    for (uint64_t seed : {21ull, 22ull, 23ull}) {
        TryOnSample s = gen_sample(seed, kCfg);
        // any pixel where target differs from background must be parsed
        for (int y = 0; y < kCfg.h; ++y)
            for (int x = 0; x < kCfg.w; ++x) {
                bool bg = true;
                for (int c = 0; c < 3; ++c) bg = bg && s.target.at(c, y, x) == kBackground.ch(c);
                if (!bg) REQUIRE(s.parsing_mask.at(0, y, x) == 1.0f);
            }
    }
}

TEST_CASE("long garments span at least 0.45 H") {
    // Independent bbox scan: find rows whose pixels belong to the garment
    // color class (base or its pattern accent) and measure the extent.
    int checked = 0;
    for (uint64_t seed = 0; seed < 400 && checked < 12; ++seed) {
        auto [s, det] = gen_sample_detail(seed, kCfg);
        if (det.attrs.garments.size() != 1) continue;
        const auto& g = det.attrs.garments[0];
        if (g.length != GarmentLength::long_cut) continue;
        const Rgb base = kGarmentPalette[g.color_id];
        const Rgb alt = pattern_alt(base);
        int y_min = kCfg.h, y_max = -1;
        for (int y = 0; y < kCfg.h; ++y)
            for (int x = 0; x < kCfg.w; ++x) {
                const bool is_base = s.target.at(0, y, x) == base.r &&
                                     s.target.at(1, y, x) == base.g && s.target.at(2, y, x) == base.b;
                const bool is_alt = s.target.at(0, y, x) == alt.r && s.target.at(1, y, x) == alt.g &&
                                    s.target.at(2, y, x) == alt.b;
                if (is_base || is_alt) {
                    y_min = std::min(y_min, y);
                    y_max = std::max(y_max, y);
                }
            }
        REQUIRE(y_max - y_min + 1 >= int(0.45 * kCfg.h));
        ++checked;
    }
    REQUIRE(checked >= 12);
    // composited extent obeys the rule for every long garment, including
    // occluded ones
    for (uint64_t seed = 0; seed < 200; ++seed) {
        auto [s, det] = gen_sample_detail(seed, kCfg);
        for (size_t i = 0; i < det.attrs.garments.size(); ++i)
            if (det.attrs.garments[i].length == GarmentLength::long_cut) {
                const auto& r = det.garment_rects[i];
                REQUIRE(r.y1 - r.y0 + 1 >= int(0.45 * kCfg.h));
            }
    }
}

TEST_CASE("bad generator config is rejected") {
    GeneratorConfig bad = kCfg;
    bad.h = 60;  // not a multiple of 2*patch = 8
    CHECK_THROWS_AS(gen_sample(1, bad), contract_error);
}

TEST_CASE("attribute value distribution is unconcentrated") {
    std::map<std::string, int> counts;
    int garments = 0;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        auto [s, det] = gen_sample_detail(seed, kCfg);
        for (const auto& g : det.attrs.garments) {
            ++garments;
            counts["slot." + std::to_string(int(g.slot))]++;
            counts["color." + std::to_string(g.color_id)]++;
            counts["pattern." + std::to_string(int(g.pattern))]++;
            counts["length." + std::to_string(int(g.length))]++;
            counts["tuck." + std::to_string(int(g.tuck))]++;
        }
    }
    auto freq_ok = [&](const std::string& key, int n_values) {
        for (int v = 0; v < n_values; ++v) {
            const double f = double(counts[key + "." + std::to_string(v)]) / garments;
            INFO(key << "." << v << " freq=" << f);
            CHECK(f >= 0.05);
            CHECK(f <= 0.95);
        }
    };
    freq_ok("slot", kNumSlots);
    freq_ok("color", kNumGarmentColors);
    freq_ok("pattern", kNumPatterns);
    freq_ok("length", kNumLengths);
    freq_ok("tuck", kNumTucks);
}

TEST_CASE("style nullability rate is near the configured value") {
    int nulls = 0;
    for (uint64_t seed = 0; seed < 1000; ++seed)
        if (!gen_sample(seed, kCfg).style) ++nulls;
    CHECK(nulls > 40);
    CHECK(nulls < 200);
}

TEST_CASE("visible garment regions are majority base color") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        auto [s, det] = gen_sample_detail(seed, kCfg);
        for (size_t i = 0; i < det.attrs.garments.size(); ++i) {
            const Rgb base = kGarmentPalette[det.attrs.garments[i].color_id];
            int base_px = 0, total = 0;
            for (int y = 0; y < kCfg.h; ++y)
                for (int x = 0; x < kCfg.w; ++x) {
                    if (det.garment_regions[i].at(0, y, x) == 0.0f) continue;
                    ++total;
                    if (s.target.at(0, y, x) == base.r && s.target.at(1, y, x) == base.g &&
                        s.target.at(2, y, x) == base.b)
                        ++base_px;
                }
            REQUIRE(total > 40);
            REQUIRE(double(base_px) / total > 0.5);
        }
    }
}

TEST_CASE("sample record round-trips bit-exactly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "promo_synth_io_test";
    fs::create_directories(dir);
    for (uint64_t seed : {3ull, 14ull, 159ull, 2653ull}) {
        TryOnSample s = gen_sample(seed, kCfg);
        const std::string path = (dir / sample_filename(seed)).string();
        save_sample(s, path);
        TryOnSample r = load_sample(path);
        CHECK(r.seed == s.seed);
        CHECK(images_equal(r.person, s.person));
        CHECK(images_equal(r.agnostic_mask, s.agnostic_mask));
        CHECK(images_equal(r.pose_map, s.pose_map));
        CHECK(images_equal(r.parsing_mask, s.parsing_mask));
        CHECK(images_equal(r.target, s.target));
        REQUIRE(r.garments.size() == s.garments.size());
        for (size_t i = 0; i < r.garments.size(); ++i) CHECK(images_equal(r.garments[i], s.garments[i]));
        CHECK(r.style == s.style);
        std::remove(path.c_str());
    }
}
