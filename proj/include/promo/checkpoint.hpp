#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

#include "promo/model.hpp"

namespace promo {

// Checkpoint container ("PRMC"): hyperparameter block plus named f32
// tensors, little-endian. Optimizer moments ride along as "opt.m.*" /
// "opt.v.*" tensors so training resumes cleanly. Writes are atomic
// (tmp file + rename).
//
// Layout:
//   magic "PRMC" | u16 version | u64 config_hash | u64 train_step
//   u32 layers, d_model, n_heads, d_freq, d_token, style_vocab
//   u32 n_tensors, then per tensor:
//     u16 name_len | name | u32 rows | u32 cols | f32 data

namespace ckpt_detail {

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

inline void write_tensor(std::ostream& os, const std::string& name, const Mat<float>& m) {
    write_le<uint16_t>(os, uint16_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    write_le<uint32_t>(os, uint32_t(m.rows));
    write_le<uint32_t>(os, uint32_t(m.cols));
    os.write(reinterpret_cast<const char*>(m.a.data()), std::streamsize(m.a.size() * 4));
}

}  // namespace ckpt_detail

struct Checkpoint {
    ModelConfig model_cfg;
    uint64_t config_hash = 0;
    uint64_t train_step = 0;
    std::map<std::string, Mat<float>> tensors;

    ModelParams<float> params() const {
        ModelParams<float> p = make_params<float>(model_cfg);
        p.visit([&](const std::string& name, Mat<float>& m) {
            auto it = tensors.find(name);
            check(it != tensors.end(), "checkpoint: missing tensor " + name);
            check(it->second.rows == m.rows && it->second.cols == m.cols,
                  "checkpoint: shape mismatch for " + name);
            m = it->second;
        });
        return p;
    }
};

inline void save_checkpoint(const std::string& path, const ModelParams<float>& p,
                            uint64_t config_hash, uint64_t train_step,
                            const std::map<std::string, Mat<float>>& extra_tensors = {}) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        check(bool(os), "checkpoint: cannot open " + tmp);
        os.write("PRMC", 4);
        ckpt_detail::write_le<uint16_t>(os, 1);
        ckpt_detail::write_le<uint64_t>(os, config_hash);
        ckpt_detail::write_le<uint64_t>(os, train_step);
        ckpt_detail::write_le<uint32_t>(os, uint32_t(p.cfg.layers));
        ckpt_detail::write_le<uint32_t>(os, uint32_t(p.cfg.d_model));
        ckpt_detail::write_le<uint32_t>(os, uint32_t(p.cfg.n_heads));
        ckpt_detail::write_le<uint32_t>(os, uint32_t(p.cfg.d_freq));
        ckpt_detail::write_le<uint32_t>(os, uint32_t(p.cfg.d_token));
        ckpt_detail::write_le<uint32_t>(os, uint32_t(p.cfg.style_vocab));
        uint32_t n = uint32_t(extra_tensors.size());
        p.visit([&](const std::string&, const Mat<float>&) { ++n; });
        ckpt_detail::write_le<uint32_t>(os, n);
        p.visit([&](const std::string& name, const Mat<float>& m) {
            ckpt_detail::write_tensor(os, name, m);
        });
        for (const auto& [name, m] : extra_tensors) ckpt_detail::write_tensor(os, name, m);
        check(bool(os), "checkpoint: write failed for " + tmp);
    }
    check(std::rename(tmp.c_str(), path.c_str()) == 0, "checkpoint: rename failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(bool(is), "checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    check(is && std::memcmp(magic, "PRMC", 4) == 0, "checkpoint: bad magic in " + path);
    check(ckpt_detail::read_le<uint16_t>(is) == 1, "checkpoint: unsupported version");
    Checkpoint ck;
    ck.config_hash = ckpt_detail::read_le<uint64_t>(is);
    ck.train_step = ckpt_detail::read_le<uint64_t>(is);
    ck.model_cfg.layers = int(ckpt_detail::read_le<uint32_t>(is));
    ck.model_cfg.d_model = int(ckpt_detail::read_le<uint32_t>(is));
    ck.model_cfg.n_heads = int(ckpt_detail::read_le<uint32_t>(is));
    ck.model_cfg.d_freq = int(ckpt_detail::read_le<uint32_t>(is));
    ck.model_cfg.d_token = int(ckpt_detail::read_le<uint32_t>(is));
    ck.model_cfg.style_vocab = int(ckpt_detail::read_le<uint32_t>(is));
    const uint32_t n = ckpt_detail::read_le<uint32_t>(is);
    for (uint32_t i = 0; i < n; ++i) {
        const uint16_t len = ckpt_detail::read_le<uint16_t>(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        const int rows = int(ckpt_detail::read_le<uint32_t>(is));
        const int cols = int(ckpt_detail::read_le<uint32_t>(is));
        Mat<float> m(rows, cols);
        is.read(reinterpret_cast<char*>(m.a.data()), std::streamsize(m.a.size() * 4));
        ck.tensors.emplace(std::move(name), std::move(m));
    }
    check(bool(is), "checkpoint: truncated file " + path);
    return ck;
}

}  // namespace promo
