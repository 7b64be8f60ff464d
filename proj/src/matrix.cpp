#include "wlrbg/matrix.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "wlrbg/errors.hpp"

namespace wlrbg {

namespace {

using EigenMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

ConstMap map(const DenseMatrix& m) {
    return ConstMap(m.data(), m.rows(), m.cols());
}

EigenMap map(DenseMatrix& m) {
    return EigenMap(m.data(), m.rows(), m.cols());
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ConfigError(std::string(op) + ": shape mismatch " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

}  // namespace

DenseMatrix::DenseMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), 0.0) {
    if (rows < 0 || cols < 0) throw ConfigError("DenseMatrix: negative dimension");
}

DenseMatrix::DenseMatrix(Index rows, Index cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 0 || cols < 0) throw ConfigError("DenseMatrix: negative dimension");
    if (static_cast<Index>(data_.size()) != rows * cols) {
        throw ConfigError("DenseMatrix: data length does not match rows*cols");
    }
}

DenseMatrix DenseMatrix::constant(Index rows, Index cols, double value) {
    DenseMatrix m(rows, cols);
    std::fill(m.data_.begin(), m.data_.end(), value);
    return m;
}

DenseMatrix DenseMatrix::identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::ones(Index rows, Index cols) {
    return constant(rows, cols, 1.0);
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
    const Index n = static_cast<Index>(values.size());
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = values[static_cast<std::size_t>(i)];
    return m;
}

DenseMatrix DenseMatrix::random_normal(Index rows, Index cols, std::mt19937_64& rng) {
    DenseMatrix m(rows, cols);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : m.data_) v = dist(rng);
    return m;
}

DenseMatrix DenseMatrix::random_uniform(Index rows, Index cols, double lo, double hi,
                                        std::mt19937_64& rng) {
    if (hi < lo) throw ConfigError("random_uniform: hi < lo");
    DenseMatrix m(rows, cols);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : m.data_) v = dist(rng);
    return m;
}

DenseMatrix DenseMatrix::col(Index j) const {
    return cols(j, 1);
}

DenseMatrix DenseMatrix::cols(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > cols_) {
        throw ConfigError("DenseMatrix::cols: column range out of bounds");
    }
    DenseMatrix out(rows_, count);
    std::copy(data_.begin() + first * rows_, data_.begin() + (first + count) * rows_,
              out.data_.begin());
    return out;
}

void DenseMatrix::set_col(Index j, const DenseMatrix& column) {
    if (column.rows() != rows_ || column.cols() != 1) {
        throw ConfigError("DenseMatrix::set_col: column shape mismatch");
    }
    set_col(j, column.col_span(0));
}

void DenseMatrix::set_col(Index j, std::span<const double> values) {
    if (static_cast<Index>(values.size()) != rows_) {
        throw ConfigError("DenseMatrix::set_col: column length mismatch");
    }
    std::copy(values.begin(), values.end(), data_.begin() + j * rows_);
}

bool DenseMatrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator+");
    DenseMatrix out(a.rows(), a.cols());
    map(out) = map(a) + map(b);
    return out;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator-");
    DenseMatrix out(a.rows(), a.cols());
    map(out) = map(a) - map(b);
    return out;
}

DenseMatrix operator-(const DenseMatrix& a) {
    DenseMatrix out(a.rows(), a.cols());
    map(out) = -map(a);
    return out;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw ConfigError("operator*: inner dimensions do not match");
    }
    DenseMatrix out(a.rows(), b.cols());
    map(out).noalias() = map(a) * map(b);
    return out;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
    DenseMatrix out(a.rows(), a.cols());
    map(out) = s * map(a);
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "hadamard");
    DenseMatrix out(a.rows(), a.cols());
    map(out) = map(a).cwiseProduct(map(b));
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    map(out) = map(a).transpose();
    return out;
}

DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.empty() && a.rows() == 0) return b;
    if (b.empty() && b.rows() == 0) return a;
    if (a.rows() != b.rows()) throw ConfigError("hcat: row count mismatch");
    DenseMatrix out(a.rows(), a.cols() + b.cols());
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

double frobenius_norm(const DenseMatrix& a) {
    return map(a).norm();
}

double max_abs(const DenseMatrix& a) {
    if (a.empty()) return 0.0;
    return map(a).cwiseAbs().maxCoeff();
}

double dot(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "dot");
    return map(a).cwiseProduct(map(b)).sum();
}

}  // namespace wlrbg
