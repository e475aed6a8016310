#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "promo/common.hpp"
#include "promo/synth.hpp"

namespace promo {

// Paired image quality (SSIM, PSNR) plus rule-based synthetic-task
// accuracies. The garment metrics classify pixels against the renderer
// palette, so they are closed-form and robust to small brightness jitter.

struct EvalReport {
    double ssim = 0.0;
    double psnr = 0.0;
    double garment_assignment_acc = 0.0;
    double style_compliance_acc = 0.0;
    int n = 0;
};

namespace metrics_detail {

inline const std::vector<double>& gaussian_window_11() {
    static const std::vector<double> w = [] {
        std::vector<double> v(11 * 11);
        const double sigma = 1.5;
        double sum = 0.0;
        for (int y = 0; y < 11; ++y)
            for (int x = 0; x < 11; ++x) {
                const double dy = y - 5, dx = x - 5;
                v[y * 11 + x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
                sum += v[y * 11 + x];
            }
        for (auto& e : v) e /= sum;
        return v;
    }();
    return w;
}

}  // namespace metrics_detail

/// Structural similarity, 11x11 Gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, dynamic range 1; valid-window positions, averaged over
/// channels. Symmetric, and exactly 1 iff the images are identical.
inline double ssim(const Image& a, const Image& b) {
    check(a.same_shape(b), "ssim: shape mismatch");
    check(a.h >= 11 && a.w >= 11, "ssim: images smaller than the filter window");
    if (a.data == b.data) return 1.0;
    const auto& win = metrics_detail::gaussian_window_11();
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    long count = 0;
    for (int ch = 0; ch < a.c; ++ch)
        for (int y = 0; y + 11 <= a.h; ++y)
            for (int x = 0; x + 11 <= a.w; ++x) {
                double ma = 0, mb = 0, va = 0, vb = 0, cov = 0;
                for (int dy = 0; dy < 11; ++dy)
                    for (int dx = 0; dx < 11; ++dx) {
                        const double wgt = win[dy * 11 + dx];
                        const double pa = a.at(ch, y + dy, x + dx);
                        const double pb = b.at(ch, y + dy, x + dx);
                        ma += wgt * pa;
                        mb += wgt * pb;
                        va += wgt * pa * pa;
                        vb += wgt * pb * pb;
                        cov += wgt * pa * pb;
                    }
                va -= ma * ma;
                vb -= mb * mb;
                cov -= ma * mb;
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
    return acc / double(count);
}

/// Peak signal-to-noise ratio in dB for unit dynamic range; +inf sentinel
/// for identical images.
inline double psnr(const Image& a, const Image& b) {
    check(a.same_shape(b), "psnr: shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        mse += d * d;
    }
    mse /= double(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

/// Evaluation palette: background, skin, then the garment colors.
inline const std::vector<Rgb>& eval_palette() {
    static const std::vector<Rgb> p = [] {
        std::vector<Rgb> v{kBackground, kSkin};
        for (const auto& c : kGarmentPalette) v.push_back(c);
        return v;
    }();
    return p;
}

inline int nearest_palette(float r, float g, float b) {
    const auto& pal = eval_palette();
    int best = 0;
    double best_d = 1e300;
    for (size_t i = 0; i < pal.size(); ++i) {
        const double dr = r - pal[i].r, dg = g - pal[i].g, db = b - pal[i].b;
        const double d = dr * dr + dg * dg + db * db;
        if (d < best_d) {
            best_d = d;
            best = int(i);
        }
    }
    return best;
}

constexpr int kPaletteGarmentBase = 2;  // garment color_id c maps to class 2+c

/// Fraction of garments whose dominant palette color inside the
/// ground-truth (visible) garment region of `output` matches the
/// conditioned color.
inline double garment_assignment_acc(const Image& output, const TryOnSample& sample,
                                     const SampleDetail& det) {
    check(output.h == sample.target.h && output.w == sample.target.w && output.c == 3,
          "garment_assignment_acc: output shape mismatch");
    int matched = 0, total = 0;
    for (size_t g = 0; g < det.attrs.garments.size(); ++g) {
        std::map<int, int> counts;
        for (int y = 0; y < output.h; ++y)
            for (int x = 0; x < output.w; ++x) {
                if (det.garment_regions[g].at(0, y, x) == 0.0f) continue;
                ++counts[nearest_palette(output.at(0, y, x), output.at(1, y, x), output.at(2, y, x))];
            }
        int mode_class = -1, mode_count = -1;
        for (const auto& [cls, n] : counts)
            if (n > mode_count) {
                mode_count = n;
                mode_class = cls;
            }
        ++total;
        if (mode_class == kPaletteGarmentBase + det.attrs.garments[g].color_id) ++matched;
    }
    return total ? double(matched) / total : 1.0;
}

inline double garment_assignment_acc(const Image& output, const TryOnSample& sample,
                                     const GeneratorConfig& cfg) {
    return garment_assignment_acc(output, sample, gen_sample_detail(sample.seed, cfg).second);
}

/// Rule-based style compliance on prompted samples: the vertical extent of
/// pixels classified to a garment's color (within the edit region) must
/// agree with its length attribute. Counted per styled garment.
struct ComplianceCount {
    int matched = 0, total = 0;
};

inline ComplianceCount style_compliance(const Image& output, const TryOnSample& sample,
                                        const SampleDetail& det) {
    ComplianceCount cc;
    if (!sample.style) return cc;
    for (const auto& g : det.attrs.garments) {
        int y_min = output.h, y_max = -1;
        for (int y = 0; y < output.h; ++y)
            for (int x = 0; x < output.w; ++x) {
                if (sample.agnostic_mask.at(0, y, x) == 0.0f) continue;
                const int cls =
                    nearest_palette(output.at(0, y, x), output.at(1, y, x), output.at(2, y, x));
                if (cls == kPaletteGarmentBase + g.color_id) {
                    y_min = std::min(y_min, y);
                    y_max = std::max(y_max, y);
                }
            }
        const int extent = y_max >= y_min ? y_max - y_min + 1 : 0;
        const bool is_long = extent >= int(0.45 * output.h);
        ++cc.total;
        if ((g.length == GarmentLength::long_cut) == is_long) ++cc.matched;
    }
    return cc;
}

}  // namespace promo
