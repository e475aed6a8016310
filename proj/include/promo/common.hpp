#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace promo {

// Contract violations (shape mismatches, bad configs) surface as exceptions.
struct contract_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void check(bool ok, const std::string& msg) {
    if (!ok) throw contract_error(msg);
}

/// Planar float image: `c` channel planes of h*w pixels, values in [0,1].
struct Image {
    int h = 0, w = 0, c = 0;
    std::vector<float> data;  // data[ch*h*w + y*w + x]

    Image() = default;
    Image(int h_, int w_, int c_, float fill = 0.0f)
        : h(h_), w(w_), c(c_), data(size_t(h_) * w_ * c_, fill) {}

    float& at(int ch, int y, int x) { return data[(size_t(ch) * h + y) * w + x]; }
    float at(int ch, int y, int x) const { return data[(size_t(ch) * h + y) * w + x]; }
    size_t size() const { return data.size(); }

    bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
    bool operator==(const Image& o) const { return h == o.h && w == o.w && c == o.c && data == o.data; }
};

/// 2D lattice of d-dimensional tokens; token vectors are contiguous.
struct TokenGrid {
    int h = 0, w = 0, d = 0;
    std::vector<float> data;  // data[(y*w + x)*d + k]

    TokenGrid() = default;
    TokenGrid(int h_, int w_, int d_, float fill = 0.0f)
        : h(h_), w(w_), d(d_), data(size_t(h_) * w_ * d_, fill) {}

    float* token(int y, int x) { return data.data() + (size_t(y) * w + x) * d; }
    const float* token(int y, int x) const { return data.data() + (size_t(y) * w + x) * d; }
    int tokens() const { return h * w; }

    bool same_shape(const TokenGrid& o) const { return h == o.h && w == o.w && d == o.d; }
    bool operator==(const TokenGrid& o) const { return h == o.h && w == o.w && d == o.d && data == o.data; }
};

}  // namespace promo
