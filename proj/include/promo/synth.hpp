#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "promo/common.hpp"
#include "promo/rng.hpp"
#include "promo/style.hpp"

namespace promo {

// Procedural try-on sample generator. Every conditioning signal the
// pipeline consumes (person, garments, agnostic mask, pose, parsing,
// style, target) is rendered with exact ground truth, as a pure function
// of (seed, config). All colors sit on the k/256 dyadic grid so the
// latent codec round-trips them bit-exactly.

struct Rgb {
    float r, g, b;
    float ch(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

inline constexpr Rgb kBackground{224 / 256.0f, 224 / 256.0f, 224 / 256.0f};
inline constexpr Rgb kSkin{160 / 256.0f, 112 / 256.0f, 80 / 256.0f};
inline constexpr Rgb kPoseLimb{0.0f, 1.0f, 0.0f};
inline constexpr Rgb kPoseJoint{1.0f, 0.0f, 0.0f};

inline constexpr std::array<Rgb, 6> kGarmentPalette{{
    {192 / 256.0f, 32 / 256.0f, 32 / 256.0f},    // red
    {32 / 256.0f, 160 / 256.0f, 48 / 256.0f},    // green
    {32 / 256.0f, 64 / 256.0f, 192 / 256.0f},    // blue
    {208 / 256.0f, 192 / 256.0f, 32 / 256.0f},   // yellow
    {176 / 256.0f, 32 / 256.0f, 160 / 256.0f},   // purple
    {32 / 256.0f, 176 / 256.0f, 176 / 256.0f},   // cyan
}};
constexpr int kNumGarmentColors = int(kGarmentPalette.size());

/// Pattern accent shade: half the base color (stays nearest to base in RGB
/// for most of the palette, and never the majority of a garment region).
inline Rgb pattern_alt(const Rgb& base) { return {base.r * 0.5f, base.g * 0.5f, base.b * 0.5f}; }

struct GeneratorConfig {
    int h = 64, w = 64;
    int garment_h = 32, garment_w = 32;
    int n_max = 2;
    double style_null_rate = 0.1;
    int patch = 4;  // latent patch size; h,w must be multiples of 2*patch
    int mask_margin = 2;

    void validate() const {
        check(patch >= 1, "gen config: patch must be >= 1");
        check(h % (2 * patch) == 0 && w % (2 * patch) == 0,
              "gen config: H and W must be multiples of 2*patch");
        check(garment_h % patch == 0 && garment_w % patch == 0,
              "gen config: garment dims must be multiples of patch");
        check(n_max >= 1 && n_max <= kNumSlots, "gen config: n_max must be 1 or 2 (one per slot)");
        check(style_null_rate >= 0.0 && style_null_rate <= 1.0, "gen config: bad null rate");
        check(h >= 48 && w >= 48, "gen config: canvas too small for the figure");
    }
};

struct TryOnSample {
    Image person;                     // h x w x 3
    std::vector<Image> garments;      // flat-lays, garment_h x garment_w x 3
    Image agnostic_mask;              // h x w x 1, binary
    Image pose_map;                   // h x w x 3
    Image parsing_mask;               // h x w x 1, binary
    std::optional<StyleAttrs> style;  // null = no prompt
    Image target;                     // h x w x 3
    uint64_t seed = 0;
};

/// Composited extent of one worn garment (before any occlusion).
struct GarmentRect {
    int y0 = 0, x0 = 0, y1 = 0, x1 = 0;
};

/// Renderer-side ground truth that is not part of the serialized sample:
/// attributes (even when the style channel is nulled), per-garment visible
/// region masks, and composited extents. Regenerable from (seed, cfg).
struct SampleDetail {
    StyleAttrs attrs;
    std::vector<Image> garment_regions;     // h x w x 1 each; pixels where the garment is on top
    std::vector<GarmentRect> garment_rects; // composited extent per garment
};

namespace detail {

inline void put_px(Image& img, int y, int x, const Rgb& col) {
    if (y < 0 || y >= img.h || x < 0 || x >= img.w) return;
    for (int c = 0; c < 3; ++c) img.at(c, y, x) = col.ch(c);
}

inline void mark_px(Image& mask, int y, int x) {
    if (y < 0 || y >= mask.h || x < 0 || x >= mask.w) return;
    mask.at(0, y, x) = 1.0f;
}

inline void fill_rect(Image& img, int y0, int x0, int y1, int x1, const Rgb& col, Image* mask) {
    for (int y = std::max(0, y0); y <= std::min(img.h - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(img.w - 1, x1); ++x) {
            put_px(img, y, x, col);
            if (mask) mark_px(*mask, y, x);
        }
}

inline void fill_disc(Image& img, int cy, int cx, int r, const Rgb& col, Image* mask) {
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) {
                put_px(img, y, x, col);
                if (mask) mark_px(*mask, y, x);
            }
}

/// Bresenham-style segment with square brush of given half-width.
inline void draw_segment(Image& img, int y0, int x0, int y1, int x1, int halfw, const Rgb& col,
                         Image* mask) {
    const int steps = std::max(std::abs(y1 - y0), std::abs(x1 - x0));
    for (int s = 0; s <= steps; ++s) {
        const int y = steps == 0 ? y0 : y0 + (y1 - y0) * s / steps;
        const int x = steps == 0 ? x0 : x0 + (x1 - x0) * s / steps;
        for (int dy = -halfw; dy <= halfw; ++dy)
            for (int dx = -halfw; dx <= halfw; ++dx) {
                put_px(img, y + dy, x + dx, col);
                if (mask) mark_px(*mask, y + dy, x + dx);
            }
    }
}

struct Pt {
    int y, x;
};

inline Pt offset_polar(Pt from, double len, double angle_from_down) {
    return {from.y + int(std::lround(len * std::cos(angle_from_down))),
            from.x + int(std::lround(len * std::sin(angle_from_down)))};
}

/// Body pose: joint positions for a stick figure, jittered per sample.
struct BodyPose {
    int cx, shoulder_y, hip_y, half_w, head_r;
    Pt head, sh_l, sh_r, el_l, el_r, wr_l, wr_r, hip_l, hip_r, kn_l, kn_r, an_l, an_r;
};

inline BodyPose sample_pose(Rng& rng, const GeneratorConfig& cfg) {
    BodyPose p;
    const int H = cfg.h, W = cfg.w;
    p.cx = W / 2 + rng.uniform_int(7) - 3;
    p.shoulder_y = H * 3 / 16 + rng.uniform_int(5) - 2;
    p.hip_y = p.shoulder_y + H * 9 / 32;
    p.half_w = W / 8 - 1 + rng.uniform_int(3);
    p.head_r = H / 16 + rng.uniform_int(2) - 1;
    p.head = {p.shoulder_y - p.head_r - 2, p.cx + rng.uniform_int(3) - 1};
    p.sh_l = {p.shoulder_y + 1, p.cx - p.half_w};
    p.sh_r = {p.shoulder_y + 1, p.cx + p.half_w};

    const double deg = 3.14159265358979323846 / 180.0;
    const double upper_arm = H * 9.0 / 64.0, fore_arm = H / 8.0;
    const double a_l = rng.uniform_range(10, 50) * deg, a_r = rng.uniform_range(10, 50) * deg;
    const double e_l = rng.uniform_range(0, 40) * deg, e_r = rng.uniform_range(0, 40) * deg;
    p.el_l = offset_polar(p.sh_l, upper_arm, -a_l);
    p.el_r = offset_polar(p.sh_r, upper_arm, a_r);
    p.wr_l = offset_polar(p.el_l, fore_arm, -a_l + e_l);
    p.wr_r = offset_polar(p.el_r, fore_arm, a_r - e_r);

    const double thigh = H * 7.0 / 32.0, shin = H * 7.0 / 32.0;
    const double l_l = rng.uniform_range(0, 10) * deg, l_r = rng.uniform_range(0, 10) * deg;
    const double k_l = rng.uniform_range(0, 8) * deg, k_r = rng.uniform_range(0, 8) * deg;
    p.hip_l = {p.hip_y, p.cx - (p.half_w - 3)};
    p.hip_r = {p.hip_y, p.cx + (p.half_w - 3)};
    p.kn_l = offset_polar(p.hip_l, thigh, -l_l);
    p.kn_r = offset_polar(p.hip_r, thigh, l_r);
    p.an_l = offset_polar(p.kn_l, shin, -l_l + k_l);
    p.an_r = offset_polar(p.kn_r, shin, l_r - k_r);
    return p;
}

inline void render_body(Image& img, const BodyPose& p, Image* body_mask) {
    fill_disc(img, p.head.y, p.head.x, p.head_r, kSkin, body_mask);
    fill_rect(img, p.shoulder_y, p.cx - p.half_w, p.hip_y, p.cx + p.half_w, kSkin, body_mask);
    draw_segment(img, p.sh_l.y, p.sh_l.x, p.el_l.y, p.el_l.x, 1, kSkin, body_mask);
    draw_segment(img, p.el_l.y, p.el_l.x, p.wr_l.y, p.wr_l.x, 1, kSkin, body_mask);
    draw_segment(img, p.sh_r.y, p.sh_r.x, p.el_r.y, p.el_r.x, 1, kSkin, body_mask);
    draw_segment(img, p.el_r.y, p.el_r.x, p.wr_r.y, p.wr_r.x, 1, kSkin, body_mask);
    draw_segment(img, p.hip_l.y, p.hip_l.x, p.kn_l.y, p.kn_l.x, 1, kSkin, body_mask);
    draw_segment(img, p.kn_l.y, p.kn_l.x, p.an_l.y, p.an_l.x, 1, kSkin, body_mask);
    draw_segment(img, p.hip_r.y, p.hip_r.x, p.kn_r.y, p.kn_r.x, 1, kSkin, body_mask);
    draw_segment(img, p.kn_r.y, p.kn_r.x, p.an_r.y, p.an_r.x, 1, kSkin, body_mask);
}

/// DWPose-style skeleton: 1px limb segments plus 2x2 keypoint dots.
inline void render_pose_map(Image& img, const BodyPose& p) {
    auto seg = [&](Pt a, Pt b) { draw_segment(img, a.y, a.x, b.y, b.x, 0, kPoseLimb, nullptr); };
    Pt neck{p.shoulder_y, p.cx}, pelvis{p.hip_y, p.cx};
    seg(p.head, neck);
    seg(p.sh_l, p.sh_r);
    seg(neck, pelvis);
    seg(p.hip_l, p.hip_r);
    seg(p.sh_l, p.el_l);
    seg(p.el_l, p.wr_l);
    seg(p.sh_r, p.el_r);
    seg(p.el_r, p.wr_r);
    seg(p.hip_l, p.kn_l);
    seg(p.kn_l, p.an_l);
    seg(p.hip_r, p.kn_r);
    seg(p.kn_r, p.an_r);
    for (Pt kp : {p.head, p.sh_l, p.sh_r, p.el_l, p.el_r, p.wr_l, p.wr_r, p.hip_l, p.hip_r, p.kn_l,
                  p.kn_r, p.an_l, p.an_r}) {
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx) put_px(img, kp.y + dy, kp.x + dx, kPoseJoint);
    }
}

inline bool pattern_is_alt(Pattern pat, int ly, int lx) {
    if (pat == Pattern::stripes) return ly % 4 == 3;
    if (pat == Pattern::checker) return ((lx >> 2) + (ly >> 2)) % 3 == 0;
    return false;
}

/// Worn garment rectangle on the body; bbox rows are fixed by the length
/// attribute so the geometric style rules are exact.
struct WornRect {
    int y0, x0, y1, x1;
};

inline WornRect worn_rect(const BodyPose& p, const GarmentStyle& g, const GeneratorConfig& cfg) {
    const int H = cfg.h;
    const int long_len = H * 30 / 64, short_upper = H / 4, short_lower = H * 12 / 64;
    if (g.slot == Slot::upper) {
        const int len = g.length == GarmentLength::long_cut ? long_len : short_upper;
        return {p.shoulder_y, p.cx - p.half_w - 1, p.shoulder_y + len, p.cx + p.half_w + 1};
    }
    const int len = g.length == GarmentLength::long_cut ? long_len : short_lower;
    return {p.hip_y, p.cx - p.half_w, std::min(p.hip_y + len, cfg.h - 2), p.cx + p.half_w};
}

inline void paint_garment(Image& img, const WornRect& r, const GarmentStyle& g, Image* region) {
    const Rgb base = kGarmentPalette[g.color_id];
    const Rgb alt = pattern_alt(base);
    for (int y = std::max(0, r.y0); y <= std::min(img.h - 1, r.y1); ++y)
        for (int x = std::max(0, r.x0); x <= std::min(img.w - 1, r.x1); ++x) {
            put_px(img, y, x, pattern_is_alt(g.pattern, y - r.y0, x - r.x0) ? alt : base);
            if (region) mark_px(*region, y, x);
        }
}

inline Image render_flat_lay(const GarmentStyle& g, const GeneratorConfig& cfg) {
    const int Hg = cfg.garment_h, Wg = cfg.garment_w;
    Image img(Hg, Wg, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < Hg; ++y)
            for (int x = 0; x < Wg; ++x) img.at(c, y, x) = kBackground.ch(c);

    const Rgb base = kGarmentPalette[g.color_id];
    const Rgb alt = pattern_alt(base);
    const int len = g.length == GarmentLength::long_cut ? Hg * 3 / 4 : Hg * 7 / 16;
    const int x0 = g.slot == Slot::upper ? Wg * 3 / 16 : Wg / 4;
    const int x1 = g.slot == Slot::upper ? Wg * 13 / 16 : Wg * 3 / 4;
    const int y0 = 2, y1 = y0 + len;
    for (int y = y0; y <= std::min(Hg - 1, y1); ++y)
        for (int x = x0; x <= x1; ++x)
            put_px(img, y, x, pattern_is_alt(g.pattern, y - y0, x - x0) ? alt : base);
    if (g.slot == Slot::upper) {
        // neck notch
        fill_rect(img, y0, (x0 + x1) / 2 - 2, y0 + 1, (x0 + x1) / 2 + 2, kBackground, nullptr);
    } else {
        // split hem, pants-like
        const int gy = (y0 + y1) / 2;
        fill_rect(img, gy, (x0 + x1) / 2 - 1, std::min(Hg - 1, y1), (x0 + x1) / 2 + 1, kBackground,
                  nullptr);
    }
    return img;
}

inline Image dilate(const Image& mask, int margin) {
    Image out(mask.h, mask.w, 1);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            if (mask.at(0, y, x) == 0.0f) continue;
            for (int dy = -margin; dy <= margin; ++dy)
                for (int dx = -margin; dx <= margin; ++dx) mark_px(out, y + dy, x + dx);
        }
    return out;
}

}  // namespace detail

inline StyleAttrs sample_style(Rng& rng, int n_max) {
    const int n = 1 + rng.uniform_int(n_max);
    std::vector<Slot> slots;
    if (n == 1)
        slots.push_back(rng.bernoulli(0.5) ? Slot::upper : Slot::lower);
    else
        slots = {Slot::upper, Slot::lower};

    // Colors are distinct within a sample so garment regions are
    // unambiguous for the rule-based metrics.
    std::vector<int> colors(kNumGarmentColors);
    for (int i = 0; i < kNumGarmentColors; ++i) colors[i] = i;
    StyleAttrs attrs;
    for (Slot slot : slots) {
        GarmentStyle g;
        g.slot = slot;
        const int pick = rng.uniform_int(int(colors.size()));
        g.color_id = colors[pick];
        colors.erase(colors.begin() + pick);
        const double pr = rng.uniform();
        g.pattern = pr < 0.5 ? Pattern::solid : (pr < 0.75 ? Pattern::stripes : Pattern::checker);
        g.length = rng.bernoulli(0.5) ? GarmentLength::long_cut : GarmentLength::short_cut;
        g.tuck = slot == Slot::upper && rng.bernoulli(0.5) ? Tuck::tucked_in : Tuck::tucked_out;
        attrs.garments.push_back(g);
    }
    // A long upper garment worn over a lower one would fully cover a short
    // lower garment; geometry stays consistent by tucking it in instead.
    if (attrs.garments.size() == 2 && attrs.garments[0].length == GarmentLength::long_cut)
        attrs.garments[0].tuck = Tuck::tucked_in;
    return attrs;
}

/// Generate one sample plus its renderer-side ground truth.
inline std::pair<TryOnSample, SampleDetail> gen_sample_detail(uint64_t seed,
                                                              const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(seed, /*stream=*/0x73796e7468ULL);

    const detail::BodyPose pose = detail::sample_pose(rng, cfg);
    const StyleAttrs attrs = sample_style(rng, cfg.n_max);

    TryOnSample s;
    s.seed = seed;
    s.person = Image(cfg.h, cfg.w, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < cfg.h; ++y)
            for (int x = 0; x < cfg.w; ++x) s.person.at(c, y, x) = kBackground.ch(c);

    Image body_mask(cfg.h, cfg.w, 1);
    detail::render_body(s.person, pose, &body_mask);

    s.pose_map = Image(cfg.h, cfg.w, 3);
    detail::render_pose_map(s.pose_map, pose);

    // Target: person plus garments. Tuck decides layering at the waist:
    // tucked-in draws the upper first (lower waistband covers it),
    // tucked-out draws the upper last.
    s.target = s.person;
    SampleDetail det;
    det.attrs = attrs;
    det.garment_regions.assign(attrs.garments.size(), Image(cfg.h, cfg.w, 1));
    det.garment_rects.resize(attrs.garments.size());
    bool upper_first = false;
    for (const auto& g : attrs.garments)
        if (g.slot == Slot::upper && g.tuck == Tuck::tucked_in) upper_first = true;
    std::vector<size_t> order(attrs.garments.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (!upper_first)
        std::reverse(order.begin(), order.end());  // canonical order is upper first
    for (size_t idx : order) {
        const auto& g = attrs.garments[idx];
        const auto r = detail::worn_rect(pose, g, cfg);
        det.garment_rects[idx] = {r.y0, r.x0, r.y1, r.x1};
        detail::paint_garment(s.target, r, g, &det.garment_regions[idx]);
    }
    // Keep only the visible (top-most) pixels in each region mask.
    for (size_t a = 0; a + 1 < order.size(); ++a)
        for (size_t b = a + 1; b < order.size(); ++b) {
            Image& earlier = det.garment_regions[order[a]];
            const Image& later = det.garment_regions[order[b]];
            for (size_t i = 0; i < earlier.data.size(); ++i)
                if (later.data[i] != 0.0f) earlier.data[i] = 0.0f;
        }

    // Agnostic mask: exactly the composited garment region plus margin.
    Image union_region(cfg.h, cfg.w, 1);
    for (const auto& g : attrs.garments) {
        const auto r = detail::worn_rect(pose, g, cfg);
        for (int y = std::max(0, r.y0); y <= std::min(cfg.h - 1, r.y1); ++y)
            for (int x = std::max(0, r.x0); x <= std::min(cfg.w - 1, r.x1); ++x)
                detail::mark_px(union_region, y, x);
    }
    s.agnostic_mask = detail::dilate(union_region, cfg.mask_margin);

    // Parsing: every pixel occupied by the body or a worn garment.
    s.parsing_mask = body_mask;
    for (const auto& region : det.garment_regions)
        for (size_t i = 0; i < region.data.size(); ++i)
            if (region.data[i] != 0.0f) s.parsing_mask.data[i] = 1.0f;

    for (const auto& g : attrs.garments) s.garments.push_back(detail::render_flat_lay(g, cfg));

    s.style = rng.bernoulli(cfg.style_null_rate) ? std::nullopt : std::optional<StyleAttrs>(attrs);
    return {std::move(s), std::move(det)};
}

inline TryOnSample gen_sample(uint64_t seed, const GeneratorConfig& cfg) {
    return gen_sample_detail(seed, cfg).first;
}

// ---------------------------------------------------------------------------
// Flat binary sample records ("PRMO"), one file per seed.
// Layout (little-endian):
//   magic "PRMO" | u16 version | u16 flags (bit0 = has_style)
//   u32 H, W, Hg, Wg, N | u64 seed
//   f32 planes: person[3], agnostic_mask[1], pose_map[3], parsing_mask[1],
//               target[3], garments[N][3]
//   style record if has_style: u8 count, then per garment
//               u8 slot, color, pattern, length, tuck
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = (uint64_t(v) >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(buf[i]) << (8 * i);
    return T(v);
}

inline void write_planes(std::ostream& os, const Image& img) {
    static_assert(sizeof(float) == 4);
    os.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.data.size() * 4));
}

inline void read_planes(std::istream& is, Image& img) {
    is.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size() * 4));
}

}  // namespace detail

inline void save_sample(const TryOnSample& s, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    check(bool(os), "save_sample: cannot open " + path);
    os.write("PRMO", 4);
    detail::write_le<uint16_t>(os, 1);
    detail::write_le<uint16_t>(os, s.style ? 1 : 0);
    detail::write_le<uint32_t>(os, uint32_t(s.person.h));
    detail::write_le<uint32_t>(os, uint32_t(s.person.w));
    detail::write_le<uint32_t>(os, s.garments.empty() ? 0 : uint32_t(s.garments[0].h));
    detail::write_le<uint32_t>(os, s.garments.empty() ? 0 : uint32_t(s.garments[0].w));
    detail::write_le<uint32_t>(os, uint32_t(s.garments.size()));
    detail::write_le<uint64_t>(os, s.seed);
    detail::write_planes(os, s.person);
    detail::write_planes(os, s.agnostic_mask);
    detail::write_planes(os, s.pose_map);
    detail::write_planes(os, s.parsing_mask);
    detail::write_planes(os, s.target);
    for (const auto& g : s.garments) detail::write_planes(os, g);
    if (s.style) {
        detail::write_le<uint8_t>(os, uint8_t(s.style->garments.size()));
        for (const auto& g : s.style->garments) {
            detail::write_le<uint8_t>(os, uint8_t(g.slot));
            detail::write_le<uint8_t>(os, uint8_t(g.color_id));
            detail::write_le<uint8_t>(os, uint8_t(g.pattern));
            detail::write_le<uint8_t>(os, uint8_t(g.length));
            detail::write_le<uint8_t>(os, uint8_t(g.tuck));
        }
    }
    check(bool(os), "save_sample: write failed for " + path);
}

inline TryOnSample load_sample(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(bool(is), "load_sample: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    check(is && std::memcmp(magic, "PRMO", 4) == 0, "load_sample: bad magic in " + path);
    const uint16_t version = detail::read_le<uint16_t>(is);
    check(version == 1, "load_sample: unsupported version");
    const uint16_t flags = detail::read_le<uint16_t>(is);
    const int H = int(detail::read_le<uint32_t>(is));
    const int W = int(detail::read_le<uint32_t>(is));
    const int Hg = int(detail::read_le<uint32_t>(is));
    const int Wg = int(detail::read_le<uint32_t>(is));
    const int N = int(detail::read_le<uint32_t>(is));
    TryOnSample s;
    s.seed = detail::read_le<uint64_t>(is);
    s.person = Image(H, W, 3);
    s.agnostic_mask = Image(H, W, 1);
    s.pose_map = Image(H, W, 3);
    s.parsing_mask = Image(H, W, 1);
    s.target = Image(H, W, 3);
    detail::read_planes(is, s.person);
    detail::read_planes(is, s.agnostic_mask);
    detail::read_planes(is, s.pose_map);
    detail::read_planes(is, s.parsing_mask);
    detail::read_planes(is, s.target);
    for (int i = 0; i < N; ++i) {
        Image g(Hg, Wg, 3);
        detail::read_planes(is, g);
        s.garments.push_back(std::move(g));
    }
    if (flags & 1) {
        StyleAttrs attrs;
        const int n = detail::read_le<uint8_t>(is);
        for (int i = 0; i < n; ++i) {
            GarmentStyle g;
            g.slot = Slot(detail::read_le<uint8_t>(is));
            g.color_id = detail::read_le<uint8_t>(is);
            g.pattern = Pattern(detail::read_le<uint8_t>(is));
            g.length = GarmentLength(detail::read_le<uint8_t>(is));
            g.tuck = Tuck(detail::read_le<uint8_t>(is));
            attrs.garments.push_back(g);
        }
        s.style = attrs;
    }
    check(bool(is), "load_sample: truncated file " + path);
    return s;
}

inline std::string sample_filename(uint64_t seed) { return "sample_" + std::to_string(seed) + ".prmo"; }

}  // namespace promo
