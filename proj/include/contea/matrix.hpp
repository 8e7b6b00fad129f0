#pragma once
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace contea {

// Dense row-major matrix of doubles. Small on purpose: the encoders and
// matchers here run at desk scale and need predictable memory layout more
// than they need a BLAS.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    std::span<double> row_span(std::size_t r) { return {row(r), cols_}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols_}; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(const double* a, std::size_t n) {
    return std::sqrt(dot(a, a, n));
}

// y += alpha * x
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Normalizes one row to unit L2 norm; leaves a zero row untouched and
// reports it.
inline bool normalize_row(double* a, std::size_t n) {
    double norm = l2_norm(a, n);
    if (norm <= 0.0) return false;
    double inv = 1.0 / norm;
    for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
    return true;
}

inline void normalize_rows(Mat& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) normalize_row(m.row(r), m.cols());
}

} // namespace contea
