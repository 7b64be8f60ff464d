#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace wlrbg {

using Index = std::int64_t;

// Dense real matrix, column-major storage. Frame sequences use the
// frames-as-columns convention: column j holds the vectorized frame j.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols);
    DenseMatrix(Index rows, Index cols, std::vector<double> data);

    static DenseMatrix constant(Index rows, Index cols, double value);
    static DenseMatrix identity(Index n);
    static DenseMatrix ones(Index rows, Index cols);
    static DenseMatrix diagonal(std::span<const double> values);
    static DenseMatrix random_normal(Index rows, Index cols, std::mt19937_64& rng);
    static DenseMatrix random_uniform(Index rows, Index cols, double lo, double hi,
                                      std::mt19937_64& rng);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const { return rows_ * cols_; }
    bool empty() const { return size() == 0; }

    double& operator()(Index i, Index j) { return data_[j * rows_ + i]; }
    double operator()(Index i, Index j) const { return data_[j * rows_ + i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> col_span(Index j) {
        return {data_.data() + j * rows_, static_cast<std::size_t>(rows_)};
    }
    std::span<const double> col_span(Index j) const {
        return {data_.data() + j * rows_, static_cast<std::size_t>(rows_)};
    }

    DenseMatrix col(Index j) const;
    DenseMatrix cols(Index first, Index count) const;
    void set_col(Index j, const DenseMatrix& column);
    void set_col(Index j, std::span<const double> values);

    bool all_finite() const;

    bool operator==(const DenseMatrix& other) const = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<double> data_;
};

// Elementwise and BLAS-level operations. Shape mismatches throw.
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a);
DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double dot(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace wlrbg
