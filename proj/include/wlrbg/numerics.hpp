#pragma once

#include <vector>

#include "wlrbg/matrix.hpp"

namespace wlrbg {

// Thin SVD of an m x n matrix: u is m x p, v is n x p with p = min(m, n),
// s nonincreasing and nonnegative, and a = u * diag(s) * v^T.
struct SvdFactors {
    DenseMatrix u;
    std::vector<double> s;
    DenseMatrix v;
};

SvdFactors svd(const DenseMatrix& a);

// Best rank-r approximation assembled from the leading r singular triplets.
// r past the number of factors reproduces the full input.
DenseMatrix truncate_rank(const SvdFactors& factors, Index r);
DenseMatrix truncate_rank(const DenseMatrix& a, Index r);

// Elementwise shrinkage sign(x) * max(|x| - tau, 0).
DenseMatrix soft_threshold(const DenseMatrix& a, double tau);
std::vector<double> soft_threshold(const std::vector<double>& v, double tau);

// Singular value thresholding: u * diag(soft_threshold(s, tau)) * v^T.
DenseMatrix svt(const DenseMatrix& a, double tau);

// Normalized Gaussian kernel on an odd side x side grid, centered.
DenseMatrix gaussian_window(Index side, double sigma);

double spectral_norm(const DenseMatrix& a);

// Count of singular values above rel_tol * s_max (rel_tol < 0 selects the
// usual max(m, n) * machine-eps default).
Index numerical_rank(const SvdFactors& factors, double rel_tol = -1.0);

}  // namespace wlrbg
