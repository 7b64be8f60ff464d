#pragma once

#include <vector>

#include "wlrbg/decomposition.hpp"
#include "wlrbg/matrix.hpp"

namespace wlrbg::rpca {

struct RpcaConfig {
    double lambda = -1.0;   // sparsity weight; < 0 selects 1/sqrt(max(m, n))
    double mu = 1.5;        // initial penalty, applied as mu / ||A||_2
    double rho = 1.25;      // penalty growth factor
    double tol = 1e-7;      // relative residual ||A - B - F||_F / ||A||_F
    Index max_iter = 500;
};

double default_lambda(Index m, Index n);

// Per-iteration diagnostics, filled when a trace is supplied.
struct RpcaTrace {
    std::vector<double> mu_history;
    std::vector<double> residual_history;
};

// Inexact augmented Lagrange multiplier iteration: B via singular value
// thresholding, F via soft thresholding, dual update Y += mu*(A - B - F),
// mu *= rho.
Decomposition solve_iealm(const DenseMatrix& a, const RpcaConfig& config,
                          RpcaTrace* trace = nullptr);

// Accelerated proximal gradient with momentum on the relaxed objective and a
// geometric continuation schedule on the smoothing parameter.
Decomposition solve_apg(const DenseMatrix& a, const RpcaConfig& config,
                        RpcaTrace* trace = nullptr);

}  // namespace wlrbg::rpca
