#pragma once

#include <optional>
#include <vector>

#include "promo/common.hpp"

namespace promo {

// Structured dressing-style attributes: a fixed finite vocabulary per
// garment slot, serialized to a fixed-length integer token sequence for
// the text channel. A null style maps to the reserved all-NULL sequence,
// so image-only (null prompt) generation uses the same interface.

enum class Slot : uint8_t { upper = 0, lower = 1 };
enum class Pattern : uint8_t { solid = 0, stripes = 1, checker = 2 };
enum class GarmentLength : uint8_t { short_cut = 0, long_cut = 1 };
enum class Tuck : uint8_t { tucked_in = 0, tucked_out = 1 };

constexpr int kNumSlots = 2;
constexpr int kNumPatterns = 3;
constexpr int kNumLengths = 2;
constexpr int kNumTucks = 2;

struct GarmentStyle {
    Slot slot = Slot::upper;
    int color_id = 0;
    Pattern pattern = Pattern::solid;
    GarmentLength length = GarmentLength::short_cut;
    Tuck tuck = Tuck::tucked_out;

    bool operator==(const GarmentStyle&) const = default;
};

/// Garments in canonical slot order (upper before lower), slots unique.
struct StyleAttrs {
    std::vector<GarmentStyle> garments;

    bool operator==(const StyleAttrs&) const = default;

    void validate(int n_max, int n_colors) const {
        check(!garments.empty() && int(garments.size()) <= n_max, "style: garment count out of range");
        for (size_t i = 0; i < garments.size(); ++i) {
            const auto& g = garments[i];
            check(g.color_id >= 0 && g.color_id < n_colors, "style: color id out of range");
            if (i > 0)
                check(int(garments[i - 1].slot) < int(g.slot), "style: slots must be unique and ordered");
        }
    }
};

/// Fixed-length tokenizer over the attribute vocabulary. Sequence layout:
/// [count][slot,color,pattern,length,tuck] x N_max, PAD-filled; the null
/// style is L_text copies of NULL.
class StyleTokenizer {
public:
    static constexpr int kNull = 0;
    static constexpr int kPad = 1;

    StyleTokenizer(int n_max, int n_colors) : n_max_(n_max), n_colors_(n_colors) {
        count_base_ = 2;
        slot_base_ = count_base_ + n_max_ + 1;
        color_base_ = slot_base_ + kNumSlots;
        pattern_base_ = color_base_ + n_colors_;
        length_base_ = pattern_base_ + kNumPatterns;
        tuck_base_ = length_base_ + kNumLengths;
        vocab_size_ = tuck_base_ + kNumTucks;
    }

    int seq_len() const { return 1 + 5 * n_max_; }
    int vocab_size() const { return vocab_size_; }

    std::vector<int> to_tokens(const std::optional<StyleAttrs>& style) const {
        std::vector<int> out(seq_len(), kNull);
        if (!style) return out;
        style->validate(n_max_, n_colors_);
        out.assign(seq_len(), kPad);
        out[0] = count_base_ + int(style->garments.size());
        int p = 1;
        for (const auto& g : style->garments) {
            out[p++] = slot_base_ + int(g.slot);
            out[p++] = color_base_ + g.color_id;
            out[p++] = pattern_base_ + int(g.pattern);
            out[p++] = length_base_ + int(g.length);
            out[p++] = tuck_base_ + int(g.tuck);
        }
        return out;
    }

    /// Inverse of to_tokens; throws on malformed sequences.
    std::optional<StyleAttrs> from_tokens(const std::vector<int>& toks) const {
        check(int(toks.size()) == seq_len(), "style tokens: wrong length");
        bool all_null = true;
        for (int t : toks) all_null = all_null && t == kNull;
        if (all_null) return std::nullopt;
        check(toks[0] > count_base_ && toks[0] <= count_base_ + n_max_, "style tokens: bad count token");
        const int n = toks[0] - count_base_;
        StyleAttrs attrs;
        int p = 1;
        for (int i = 0; i < n; ++i) {
            GarmentStyle g;
            g.slot = Slot(decode(toks[p++], slot_base_, kNumSlots, "slot"));
            g.color_id = decode(toks[p++], color_base_, n_colors_, "color");
            g.pattern = Pattern(decode(toks[p++], pattern_base_, kNumPatterns, "pattern"));
            g.length = GarmentLength(decode(toks[p++], length_base_, kNumLengths, "length"));
            g.tuck = Tuck(decode(toks[p++], tuck_base_, kNumTucks, "tuck"));
            attrs.garments.push_back(g);
        }
        for (; p < seq_len(); ++p) check(toks[p] == kPad, "style tokens: bad padding");
        attrs.validate(n_max_, n_colors_);
        return attrs;
    }

private:
    static int decode(int tok, int base, int n, const char* what) {
        check(tok >= base && tok < base + n, std::string("style tokens: bad ") + what + " token");
        return tok - base;
    }

    int n_max_, n_colors_;
    int count_base_, slot_base_, color_base_, pattern_base_, length_base_, tuck_base_, vocab_size_;
};

}  // namespace promo
