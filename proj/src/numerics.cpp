#include "wlrbg/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "wlrbg/errors.hpp"

namespace wlrbg {

namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

ConstMap map(const DenseMatrix& m) {
    return ConstMap(m.data(), m.rows(), m.cols());
}

DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
    DenseMatrix out(e.rows(), e.cols());
    Eigen::Map<Eigen::MatrixXd>(out.data(), out.rows(), out.cols()) = e;
    return out;
}

}  // namespace

SvdFactors svd(const DenseMatrix& a) {
    if (!a.all_finite()) throw SolverError("svd: input contains NaN or Inf");
    const Index p = std::min(a.rows(), a.cols());
    if (p == 0) {
        return {DenseMatrix(a.rows(), 0), {}, DenseMatrix(a.cols(), 0)};
    }
    Eigen::BDCSVD<Eigen::MatrixXd> dec(map(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) {
        throw SolverError("svd: decomposition did not converge");
    }
    SvdFactors f;
    f.u = from_eigen(dec.matrixU());
    f.v = from_eigen(dec.matrixV());
    f.s.assign(dec.singularValues().data(), dec.singularValues().data() + p);
    return f;
}

DenseMatrix truncate_rank(const SvdFactors& factors, Index r) {
    if (r < 0) throw ConfigError("truncate_rank: r must be nonnegative");
    const Index p = static_cast<Index>(factors.s.size());
    const Index keep = std::min(r, p);
    const Index m = factors.u.rows();
    const Index n = factors.v.rows();
    if (keep == 0) return DenseMatrix(m, n);
    Eigen::MatrixXd us = map(factors.u).leftCols(keep);
    for (Index j = 0; j < keep; ++j) us.col(j) *= factors.s[static_cast<std::size_t>(j)];
    return from_eigen(us * map(factors.v).leftCols(keep).transpose());
}

DenseMatrix truncate_rank(const DenseMatrix& a, Index r) {
    return truncate_rank(svd(a), r);
}

DenseMatrix soft_threshold(const DenseMatrix& a, double tau) {
    if (tau < 0) throw ConfigError("soft_threshold: tau must be nonnegative");
    DenseMatrix out(a.rows(), a.cols());
    const double* src = a.data();
    double* dst = out.data();
    for (Index i = 0; i < a.size(); ++i) {
        const double v = src[i];
        const double mag = std::abs(v) - tau;
        dst[i] = mag > 0 ? (v < 0 ? -mag : mag) : 0.0;
    }
    return out;
}

std::vector<double> soft_threshold(const std::vector<double>& v, double tau) {
    if (tau < 0) throw ConfigError("soft_threshold: tau must be nonnegative");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]) - tau;
        out[i] = mag > 0 ? (v[i] < 0 ? -mag : mag) : 0.0;
    }
    return out;
}

DenseMatrix svt(const DenseMatrix& a, double tau) {
    if (tau < 0) throw ConfigError("svt: tau must be nonnegative");
    SvdFactors f = svd(a);
    f.s = soft_threshold(f.s, tau);
    Index keep = 0;
    while (keep < static_cast<Index>(f.s.size()) && f.s[static_cast<std::size_t>(keep)] > 0) {
        ++keep;
    }
    return truncate_rank(f, keep);
}

DenseMatrix gaussian_window(Index side, double sigma) {
    if (side <= 0 || side % 2 == 0) {
        throw ConfigError("gaussian_window: side must be odd and positive");
    }
    if (!(sigma > 0)) throw ConfigError("gaussian_window: sigma must be positive");
    DenseMatrix w(side, side);
    const Index c = side / 2;
    double sum = 0.0;
    for (Index j = 0; j < side; ++j) {
        for (Index i = 0; i < side; ++i) {
            const double dx = static_cast<double>(i - c);
            const double dy = static_cast<double>(j - c);
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            w(i, j) = v;
            sum += v;
        }
    }
    for (Index j = 0; j < side; ++j) {
        for (Index i = 0; i < side; ++i) w(i, j) /= sum;
    }
    return w;
}

double spectral_norm(const DenseMatrix& a) {
    if (a.empty()) return 0.0;
    const SvdFactors f = svd(a);
    return f.s.empty() ? 0.0 : f.s.front();
}

Index numerical_rank(const SvdFactors& factors, double rel_tol) {
    if (factors.s.empty()) return 0;
    if (rel_tol < 0) {
        rel_tol = static_cast<double>(std::max(factors.u.rows(), factors.v.rows())) *
                  std::numeric_limits<double>::epsilon();
    }
    const double cutoff = rel_tol * factors.s.front();
    Index rank = 0;
    for (double s : factors.s) {
        if (s > cutoff) ++rank;
    }
    return rank;
}

}  // namespace wlrbg
