#pragma once

#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "mno/common.hpp"

namespace mno {

using cplx = std::complex<double>;

inline std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeError("negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? "," : "") + std::to_string(shape[i]);
    return s + ")";
}

/// Dense row-major f64 tensor.  Shape is dynamic; the last dimension is the
/// contiguous one.  No view semantics: tensors own their storage.
struct RealTensor {
    std::vector<int> shape;
    std::vector<double> data;

    RealTensor() = default;
    explicit RealTensor(std::vector<int> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

    std::size_t numel() const { return data.size(); }
    /// Number of rows when all leading dimensions are collapsed.
    std::size_t lead() const { return cols() ? numel() / cols() : 0; }
    /// Size of the last (contiguous) dimension.
    std::size_t cols() const { return shape.empty() ? 0 : static_cast<std::size_t>(shape.back()); }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    void require_shape(const std::vector<int>& s, const char* who) const {
        if (shape != s)
            throw ShapeError(std::string(who) + ": expected " + shape_str(s) + ", got " + shape_str(shape));
    }
};

/// Dense row-major complex128 tensor (interleaved re/im pairs in memory).
struct ComplexTensor {
    std::vector<int> shape;
    std::vector<cplx> data;

    ComplexTensor() = default;
    explicit ComplexTensor(std::vector<int> s) : shape(std::move(s)), data(shape_numel(shape)) {}

    std::size_t numel() const { return data.size(); }
    std::size_t cols() const { return shape.empty() ? 0 : static_cast<std::size_t>(shape.back()); }

    void fill(cplx v) { std::fill(data.begin(), data.end(), v); }

    /// Flat view of the storage as 2*numel() doubles, for optimizers and I/O.
    double* reals() { return reinterpret_cast<double*>(data.data()); }
    const double* reals() const { return reinterpret_cast<const double*>(data.data()); }
};

} // namespace mno
