#pragma once

// Dense row-major matrix and vector types. These are the universal numeric
// carriers of the lab: datasets, encoder weights, embeddings, correlation
// tables. All storage is 64-bit floating point.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "midlab/errors.hpp"

namespace midl {

class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t len, double fill = 0.0) : d_(len, fill) {}
    Vector(std::initializer_list<double> init) : d_(init) {}
    explicit Vector(std::vector<double> data) : d_(std::move(data)) {}

    std::size_t size() const { return d_.size(); }
    bool empty() const { return d_.empty(); }

    double& operator[](std::size_t i) { return d_[i]; }
    double operator[](std::size_t i) const { return d_[i]; }

    double* data() { return d_.data(); }
    const double* data() const { return d_.data(); }

    std::vector<double>& raw() { return d_; }
    const std::vector<double>& raw() const { return d_; }

    auto begin() { return d_.begin(); }
    auto end() { return d_.end(); }
    auto begin() const { return d_.begin(); }
    auto end() const { return d_.end(); }

    bool all_finite() const {
        for (double v : d_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double norm2() const {
        double s = 0.0;
        for (double v : d_) s += v * v;
        return std::sqrt(s);
    }

    double norm1() const {
        double s = 0.0;
        for (double v : d_) s += std::abs(v);
        return s;
    }

    friend bool operator==(const Vector& a, const Vector& b) { return a.d_ == b.d_; }

private:
    std::vector<double> d_;
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw ShapeError("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Row-major dense matrix. Invariant: data.size() == rows*cols.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), d_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), d_(std::move(data)) {
        if (d_.size() != rows_ * cols_)
            throw ShapeError("Matrix: data length " + std::to_string(d_.size()) +
                             " does not equal rows*cols = " + std::to_string(rows_ * cols_));
    }
    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        d_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw ShapeError("Matrix: ragged initializer");
            for (double v : row) d_.push_back(v);
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return d_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return d_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return d_.data() + i * cols_; }

    double* data() { return d_.data(); }
    const double* data() const { return d_.data(); }

    std::vector<double>& raw() { return d_; }
    const std::vector<double>& raw() const { return d_; }

    Vector row(std::size_t i) const {
        Vector v(cols_);
        for (std::size_t j = 0; j < cols_; ++j) v[j] = (*this)(i, j);
        return v;
    }

    Vector col(std::size_t j) const {
        Vector v(rows_);
        for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
        return v;
    }

    void set_row(std::size_t i, const Vector& v) {
        if (v.size() != cols_) throw ShapeError("set_row: length mismatch");
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool all_finite() const {
        for (double v : d_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : d_) m = std::max(m, std::abs(v));
        return m;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.d_ == b.d_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> d_;
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace midl
