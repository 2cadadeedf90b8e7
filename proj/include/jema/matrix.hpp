#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "jema/error.hpp"
#include "jema/rng.hpp"

namespace jema {

// Row-major dense matrix of 64-bit reals. Column vectors are (n, 1) matrices;
// scalars are (1, 1). All numeric state in the engine lives in these.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(int r, int c, double fill = 0.0) : rows(r), cols(c) {
        if (r < 0 || c < 0) fail("DenseMatrix: negative shape ", r, "x", c);
        data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill);
    }

    static DenseMatrix scalar(double v) { return DenseMatrix(1, 1, v); }

    static DenseMatrix column(const std::vector<double>& v) {
        DenseMatrix m(static_cast<int>(v.size()), 1);
        m.data = v;
        return m;
    }

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return rows == 1 && cols == 1; }

    // Checked read of a 1x1 value; loss heads and reports go through this.
    double scalar_value() const {
        if (!is_scalar()) fail("scalar_value: matrix is ", rows, "x", cols, ", not 1x1");
        return data[0];
    }
    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { data.assign(data.size(), v); }

    void fill_uniform(SplitMix64& rng, double lo, double hi) {
        for (double& v : data) v = rng.uniform(lo, hi);
    }

    void fill_gaussian(SplitMix64& rng, double sigma) {
        for (double& v : data) v = sigma * rng.gaussian();
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return std::sqrt(s);
    }
};

// C = A * B. The k-major loop keeps the inner update a contiguous FMA stream;
// with -O3 -mfma this runs within a small factor of a tuned BLAS at the
// problem sizes this engine sees.
inline void matmul_into(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
    if (a.cols != b.rows)
        fail("matmul: inner dimensions differ, ", a.rows, "x", a.cols, " * ", b.rows, "x", b.cols);
    c = DenseMatrix(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c;
    matmul_into(a, b, c);
    return c;
}

inline DenseMatrix transposed(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

inline double euclidean(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace jema
