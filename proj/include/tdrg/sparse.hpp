#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdrg/errors.hpp"

namespace tdrg {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

// Coordinate-list complex matrix. Entries are kept sorted by (row, col) with
// duplicates summed and exact zeros removed; a CSR row index is derived for
// the matrix-vector hot path.
class SparseComplexOperator {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        cplx value;
    };

    SparseComplexOperator() = default;

    SparseComplexOperator(std::size_t rows, std::size_t cols, std::vector<Entry> entries = {})
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (rows_ == 0 || cols_ == 0) throw ConfigError("sparse operator dimensions must be positive");
        for (const auto& e : entries_) {
            if (e.row >= rows_ || e.col >= cols_)
                throw ConfigError("sparse entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                                  ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        std::vector<Entry> merged;
        merged.reserve(entries_.size());
        for (const auto& e : entries_) {
            if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
                merged.back().value += e.value;
            else
                merged.push_back(e);
        }
        std::erase_if(merged, [](const Entry& e) { return e.value == cplx(0.0, 0.0); });
        entries_ = std::move(merged);
        build_rows();
    }

    static SparseComplexOperator identity(std::size_t n) {
        std::vector<Entry> e;
        e.reserve(n);
        for (std::size_t i = 0; i < n; ++i) e.push_back({i, i, 1.0});
        return {n, n, std::move(e)};
    }

    static SparseComplexOperator diagonal(const CVec& d) {
        std::vector<Entry> e;
        for (std::size_t i = 0; i < d.size(); ++i) e.push_back({i, i, d[i]});
        return {d.size(), d.size(), std::move(e)};
    }

    static SparseComplexOperator from_dense(const Eigen::MatrixXcd& m) {
        std::vector<Entry> e;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                if (m(r, c) != cplx(0.0, 0.0))
                    e.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c)});
        return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), std::move(e)};
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    cplx at(std::size_t r, std::size_t c) const {
        if (r >= rows_ || c >= cols_) throw ConfigError("sparse index out of range");
        auto first = entries_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
        auto last = entries_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
        auto it = std::lower_bound(first, last, c, [](const Entry& e, std::size_t col) { return e.col < col; });
        return (it != last && it->col == c) ? it->value : cplx(0.0, 0.0);
    }

    Eigen::MatrixXcd to_dense() const {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
        for (const auto& e : entries_) m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
        return m;
    }

    // y = A x
    void apply(const cplx* x, cplx* y) const {
        for (std::size_t r = 0; r < rows_; ++r) {
            cplx acc = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += entries_[k].value * x[entries_[k].col];
            y[r] = acc;
        }
    }

    // y += alpha A x
    void apply_add(cplx alpha, const cplx* x, cplx* y) const {
        for (std::size_t r = 0; r < rows_; ++r) {
            cplx acc = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += entries_[k].value * x[entries_[k].col];
            y[r] += alpha * acc;
        }
    }

    CVec operator*(const CVec& x) const {
        if (x.size() != cols_) throw ConfigError("matrix-vector dimension mismatch");
        CVec y(rows_);
        apply(x.data(), y.data());
        return y;
    }

    SparseComplexOperator transpose() const {
        std::vector<Entry> e;
        e.reserve(entries_.size());
        for (const auto& x : entries_) e.push_back({x.col, x.row, x.value});
        return {cols_, rows_, std::move(e)};
    }

    SparseComplexOperator conj() const {
        auto e = entries_;
        for (auto& x : e) x.value = std::conj(x.value);
        return {rows_, cols_, std::move(e)};
    }

    SparseComplexOperator adjoint() const { return transpose().conj(); }

    double max_abs() const {
        double m = 0.0;
        for (const auto& e : entries_) m = std::max(m, std::abs(e.value));
        return m;
    }

    friend SparseComplexOperator operator+(const SparseComplexOperator& a, const SparseComplexOperator& b) {
        check_same(a, b, "addition");
        auto e = a.entries_;
        e.insert(e.end(), b.entries_.begin(), b.entries_.end());
        return {a.rows_, a.cols_, std::move(e)};
    }

    friend SparseComplexOperator operator-(const SparseComplexOperator& a, const SparseComplexOperator& b) {
        return a + (-1.0) * b;
    }

    friend SparseComplexOperator operator*(cplx s, const SparseComplexOperator& a) {
        auto e = a.entries_;
        for (auto& x : e) x.value *= s;
        return {a.rows_, a.cols_, std::move(e)};
    }

    friend SparseComplexOperator operator*(const SparseComplexOperator& a, const SparseComplexOperator& b) {
        if (a.cols_ != b.rows_)
            throw ConfigError("matrix product dimension mismatch: " + std::to_string(a.cols_) + " vs " +
                              std::to_string(b.rows_));
        std::vector<Entry> e;
        for (const auto& x : a.entries_)
            for (std::size_t k = b.row_ptr_[x.col]; k < b.row_ptr_[x.col + 1]; ++k)
                e.push_back({x.row, b.entries_[k].col, x.value * b.entries_[k].value});
        return {a.rows_, b.cols_, std::move(e)};
    }

    friend SparseComplexOperator kron(const SparseComplexOperator& a, const SparseComplexOperator& b) {
        std::vector<Entry> e;
        e.reserve(a.nnz() * b.nnz());
        for (const auto& x : a.entries_)
            for (const auto& y : b.entries_)
                e.push_back({x.row * b.rows_ + y.row, x.col * b.cols_ + y.col, x.value * y.value});
        return {a.rows_ * b.rows_, a.cols_ * b.cols_, std::move(e)};
    }

    friend SparseComplexOperator commutator(const SparseComplexOperator& a, const SparseComplexOperator& b) {
        return a * b - b * a;
    }

private:
    static void check_same(const SparseComplexOperator& a, const SparseComplexOperator& b, const char* what) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw ConfigError(std::string("dimension mismatch in ") + what);
    }

    void build_rows() {
        row_ptr_.assign(rows_ + 1, 0);
        for (const auto& e : entries_) ++row_ptr_[e.row + 1];
        for (std::size_t r = 0; r < rows_; ++r) row_ptr_[r + 1] += row_ptr_[r];
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Entry> entries_;
    std::vector<std::size_t> row_ptr_{0};
};

}  // namespace tdrg
