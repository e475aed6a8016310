#pragma once

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "promo/common.hpp"

namespace promo {

// Minimal 8-bit RGB PNG writer (zlib deflate, filter 0). Enough to emit
// lossless sample sheets; a tEXt chunk carries the config hash so every
// image artifact is traceable to its run.

namespace png_detail {

inline void be32(std::vector<unsigned char>& v, uint32_t x) {
    v.push_back((x >> 24) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back(x & 0xff);
}

inline void chunk(std::ofstream& os, const char type[4], const std::vector<unsigned char>& data) {
    std::vector<unsigned char> hdr;
    be32(hdr, uint32_t(data.size()));
    os.write(reinterpret_cast<const char*>(hdr.data()), 4);
    os.write(type, 4);
    if (!data.empty()) os.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), uInt(data.size()));
    std::vector<unsigned char> tail;
    be32(tail, uint32_t(crc));
    os.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace png_detail

/// Write a planar float image (values clamped to [0,1]) as 8-bit RGB PNG.
inline void write_png(const Image& img, const std::string& path,
                      const std::string& config_hash = "") {
    check(img.c == 3 || img.c == 1, "png: need 1 or 3 channels");
    std::ofstream os(path, std::ios::binary);
    check(bool(os), "png: cannot open " + path);
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<unsigned char> ihdr;
    png_detail::be32(ihdr, uint32_t(img.w));
    png_detail::be32(ihdr, uint32_t(img.h));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    png_detail::chunk(os, "IHDR", ihdr);

    if (!config_hash.empty()) {
        std::vector<unsigned char> text;
        const std::string key = "promo_config_hash";
        text.insert(text.end(), key.begin(), key.end());
        text.push_back(0);
        text.insert(text.end(), config_hash.begin(), config_hash.end());
        png_detail::chunk(os, "tEXt", text);
    }

    std::vector<unsigned char> raw;
    raw.reserve(size_t(img.h) * (1 + 3 * img.w));
    auto to8 = [](float v) {
        const float c = std::min(1.0f, std::max(0.0f, v));
        return (unsigned char)(c * 255.0f + 0.5f);
    };
    for (int y = 0; y < img.h; ++y) {
        raw.push_back(0);  // filter none
        for (int x = 0; x < img.w; ++x) {
            if (img.c == 3) {
                raw.push_back(to8(img.at(0, y, x)));
                raw.push_back(to8(img.at(1, y, x)));
                raw.push_back(to8(img.at(2, y, x)));
            } else {
                const unsigned char g = to8(img.at(0, y, x));
                raw.push_back(g);
                raw.push_back(g);
                raw.push_back(g);
            }
        }
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<unsigned char> comp(bound);
    check(compress2(comp.data(), &bound, raw.data(), uLong(raw.size()), 9) == Z_OK,
          "png: deflate failed");
    comp.resize(bound);
    png_detail::chunk(os, "IDAT", comp);
    png_detail::chunk(os, "IEND", {});
    check(bool(os), "png: write failed for " + path);
}

/// Horizontal concatenation with a 2px separator; used for comparison
/// sheets (person | conditions | output | target).
inline Image hstack(const std::vector<Image>& imgs, float sep_value = 1.0f) {
    check(!imgs.empty(), "hstack: empty");
    int h = 0, w = 0;
    for (const auto& im : imgs) {
        h = std::max(h, im.h);
        w += im.w + 2;
    }
    Image out(h, w - 2, 3, sep_value);
    int x0 = 0;
    for (const auto& im : imgs) {
        for (int y = 0; y < im.h; ++y)
            for (int x = 0; x < im.w; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(c, y, x0 + x) = im.c == 3 ? im.at(c, y, x) : im.at(0, y, x);
        x0 += im.w + 2;
    }
    return out;
}

inline Image vstack(const std::vector<Image>& imgs, float sep_value = 1.0f) {
    check(!imgs.empty(), "vstack: empty");
    int h = 0, w = 0;
    for (const auto& im : imgs) {
        w = std::max(w, im.w);
        h += im.h + 2;
    }
    Image out(h - 2, w, 3, sep_value);
    int y0 = 0;
    for (const auto& im : imgs) {
        for (int y = 0; y < im.h; ++y)
            for (int x = 0; x < im.w; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(c, y0 + y, x) = im.c == 3 ? im.at(c, y, x) : im.at(0, y, x);
        y0 += im.h + 2;
    }
    return out;
}

}  // namespace promo
