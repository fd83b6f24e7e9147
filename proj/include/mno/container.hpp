#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mno/common.hpp"
#include "mno/tensor.hpp"

// Little-endian binary primitives plus the named-block container used for
// model weights.  Byte layouts are written explicitly (no struct dumps), so
// files are identical across compilers; exact layouts in docs/FORMATS.md.

namespace mno::io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void write_f64_array(std::ostream& os, const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_f64(os, v[i]);
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("unexpected end of file (u32)");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("unexpected end of file (u64)");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

inline void read_f64_array(std::istream& is, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = read_f64(is);
}

inline void write_magic(std::ostream& os, const char m[4]) { os.write(m, 4); }

inline void expect_magic(std::istream& is, const char m[4], const char* what) {
    char b[4];
    if (!is.read(b, 4) || b[0] != m[0] || b[1] != m[1] || b[2] != m[2] || b[3] != m[3])
        throw IoError(std::string("bad magic: not a ") + what + " file");
}

// ---- named-block weight container ------------------------------------------

enum class ModelType : std::uint32_t { fno = 0, linear = 1, resnet = 2, climatology = 3 };

inline const char* model_type_name(ModelType t) {
    switch (t) {
    case ModelType::fno: return "fno";
    case ModelType::linear: return "linear";
    case ModelType::resnet: return "resnet";
    case ModelType::climatology: return "climatology";
    }
    return "?";
}

/// Ordered collection of named tensors; write order defines the byte layout.
class BlockFile {
public:
    ModelType type = ModelType::fno;

    void add(const std::string& name, RealTensor t) {
        reals_.emplace_back(name, std::move(t));
        order_.push_back('r');
    }
    void add(const std::string& name, ComplexTensor t) {
        cplxs_.emplace_back(name, std::move(t));
        order_.push_back('c');
    }
    void add(const std::string& name, std::vector<std::int64_t> v) {
        ints_.emplace_back(name, std::move(v));
        order_.push_back('i');
    }

    const RealTensor& real(const std::string& name) const {
        for (const auto& [n, t] : reals_)
            if (n == name) return t;
        throw IoError("weight file missing f64 block '" + name + "'");
    }
    const ComplexTensor& cplx(const std::string& name) const {
        for (const auto& [n, t] : cplxs_)
            if (n == name) return t;
        throw IoError("weight file missing c128 block '" + name + "'");
    }
    const std::vector<std::int64_t>& ints(const std::string& name) const {
        for (const auto& [n, v] : ints_)
            if (n == name) return v;
        throw IoError("weight file missing i64 block '" + name + "'");
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw IoError("cannot open for writing: " + path);
        write_magic(os, "MNOW");
        write_u32(os, 1); // version
        write_u32(os, static_cast<std::uint32_t>(type));
        write_u32(os, static_cast<std::uint32_t>(order_.size()));
        std::size_t ri = 0, ci = 0, ii = 0;
        for (char kind : order_) {
            if (kind == 'r') {
                const auto& [n, t] = reals_[ri++];
                write_block_header(os, n, 0, t.shape);
                write_f64_array(os, t.data.data(), t.numel());
            } else if (kind == 'c') {
                const auto& [n, t] = cplxs_[ci++];
                write_block_header(os, n, 1, t.shape);
                write_f64_array(os, t.reals(), 2 * t.numel());
            } else {
                const auto& [n, v] = ints_[ii++];
                write_block_header(os, n, 2, {static_cast<int>(v.size())});
                for (std::int64_t x : v) write_u64(os, static_cast<std::uint64_t>(x));
            }
        }
        if (!os) throw IoError("write failed: " + path);
    }

    static BlockFile load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw IoError("cannot open: " + path);
        expect_magic(is, "MNOW", "weight container");
        const std::uint32_t version = read_u32(is);
        if (version != 1) throw IoError("unsupported weight container version " + std::to_string(version));
        BlockFile bf;
        bf.type = static_cast<ModelType>(read_u32(is));
        const std::uint32_t n_blocks = read_u32(is);
        for (std::uint32_t i = 0; i < n_blocks; ++i) {
            const std::uint32_t name_len = read_u32(is);
            if (name_len > 4096) throw IoError("weight block name too long");
            std::string name(name_len, '\0');
            if (!is.read(name.data(), name_len)) throw IoError("unexpected end of file (name)");
            const std::uint32_t dtype = read_u32(is);
            const std::uint32_t ndim = read_u32(is);
            std::vector<int> shape(ndim);
            for (auto& d : shape) d = static_cast<int>(read_u32(is));
            if (dtype == 0) {
                RealTensor t(shape);
                read_f64_array(is, t.data.data(), t.numel());
                bf.add(name, std::move(t));
            } else if (dtype == 1) {
                ComplexTensor t(shape);
                read_f64_array(is, t.reals(), 2 * t.numel());
                bf.add(name, std::move(t));
            } else if (dtype == 2) {
                std::vector<std::int64_t> v(shape_numel(shape));
                for (auto& x : v) x = static_cast<std::int64_t>(read_u64(is));
                bf.add(name, std::move(v));
            } else {
                throw IoError("unknown block dtype " + std::to_string(dtype));
            }
        }
        return bf;
    }

private:
    static void write_block_header(std::ostream& os, const std::string& name, std::uint32_t dtype,
                                   const std::vector<int>& shape) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, dtype);
        write_u32(os, static_cast<std::uint32_t>(shape.size()));
        for (int d : shape) write_u32(os, static_cast<std::uint32_t>(d));
    }

    template <class T>
    using Named = std::vector<std::pair<std::string, T>>;

    Named<RealTensor> reals_;
    Named<ComplexTensor> cplxs_;
    Named<std::vector<std::int64_t>> ints_;
    std::string order_; // 'r'/'c'/'i' per add() call, preserves file order
};

} // namespace mno::io
