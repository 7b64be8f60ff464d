#include "wlrbg/rpca.hpp"

#include <algorithm>
#include <cmath>

#include "wlrbg/errors.hpp"
#include "wlrbg/numerics.hpp"

namespace wlrbg::rpca {

namespace {

void validate(const DenseMatrix& a, const RpcaConfig& config) {
    if (!a.all_finite()) throw ConfigError("rpca: input contains NaN or Inf");
    if (a.size() == 0) throw ConfigError("rpca: input is empty");
    if (config.lambda == 0 || (config.lambda < 0 && config.lambda != -1.0)) {
        throw ConfigError("rpca: lambda must be positive (or -1 for the default)");
    }
    if (!(config.mu > 0)) throw ConfigError("rpca: mu must be positive");
    if (!(config.rho > 1)) throw ConfigError("rpca: rho must exceed 1");
    if (!(config.tol > 0)) throw ConfigError("rpca: tol must be positive");
    if (config.max_iter < 1) throw ConfigError("rpca: max_iter must be >= 1");
}

double resolve_lambda(const DenseMatrix& a, const RpcaConfig& config) {
    return config.lambda > 0 ? config.lambda : default_lambda(a.rows(), a.cols());
}

}  // namespace

double default_lambda(Index m, Index n) {
    return 1.0 / std::sqrt(static_cast<double>(std::max(m, n)));
}

Decomposition solve_iealm(const DenseMatrix& a, const RpcaConfig& config, RpcaTrace* trace) {
    validate(a, config);
    const double lambda = resolve_lambda(a, config);
    const double norm_a = frobenius_norm(a);

    Decomposition dec;
    dec.method = "iealm";
    dec.background = DenseMatrix(a.rows(), a.cols());
    dec.foreground = DenseMatrix(a.rows(), a.cols());
    if (norm_a == 0.0) {
        dec.iterations = 0;
        return dec;
    }

    // Dual scaling of Lin et al.: Y0 = A / max(||A||_2, ||A||_inf / lambda).
    const double norm2 = spectral_norm(a);
    const double scale = std::max(norm2, max_abs(a) / lambda);
    DenseMatrix y = (1.0 / scale) * a;
    DenseMatrix b(a.rows(), a.cols());
    DenseMatrix f(a.rows(), a.cols());
    // The penalty is spectrally relative so the first thresholds are
    // commensurate with the data.
    double mu = config.mu / norm2;

    dec.converged = false;
    for (Index it = 1; it <= config.max_iter; ++it) {
        b = svt(a - f + (1.0 / mu) * y, 1.0 / mu);
        ++dec.svd_count;
        f = soft_threshold(a - b + (1.0 / mu) * y, lambda / mu);
        const DenseMatrix residual = a - b - f;
        y = y + mu * residual;
        const double rel = frobenius_norm(residual) / norm_a;
        if (trace) {
            trace->mu_history.push_back(mu);
            trace->residual_history.push_back(rel);
        }
        mu *= config.rho;
        dec.iterations = it;
        dec.residual_rel = rel;
        if (rel < config.tol) {
            dec.converged = true;
            break;
        }
    }
    dec.background = std::move(b);
    dec.foreground = std::move(f);
    return dec;
}

Decomposition solve_apg(const DenseMatrix& a, const RpcaConfig& config, RpcaTrace* trace) {
    validate(a, config);
    const double lambda = resolve_lambda(a, config);
    const double norm_a = frobenius_norm(a);

    Decomposition dec;
    dec.method = "apg";
    dec.background = DenseMatrix(a.rows(), a.cols());
    dec.foreground = DenseMatrix(a.rows(), a.cols());
    if (norm_a == 0.0) {
        dec.iterations = 0;
        return dec;
    }

    const double norm2 = spectral_norm(a);
    double mu = 0.99 * norm2;
    // Floor low enough that the final soft-threshold resolution stays well
    // under the 1e-6 support cutoff used downstream.
    const double mu_floor = 1e-8 * norm2;
    const double decay = 0.9;

    DenseMatrix b(a.rows(), a.cols()), b_prev(a.rows(), a.cols());
    DenseMatrix f(a.rows(), a.cols()), f_prev(a.rows(), a.cols());
    double t = 1.0, t_prev = 1.0;

    dec.converged = false;
    for (Index it = 1; it <= config.max_iter; ++it) {
        const double momentum = (t_prev - 1.0) / t;
        const DenseMatrix yb = b + momentum * (b - b_prev);
        const DenseMatrix yf = f + momentum * (f - f_prev);
        // Gradient of 0.5*||A - B - F||_F^2 shared by both blocks; the
        // Lipschitz constant of the smooth part is 2, so the step is 1/2.
        const DenseMatrix g = 0.5 * (yb + yf - a);
        DenseMatrix b_next = svt(yb - g, mu / 2.0);
        ++dec.svd_count;
        DenseMatrix f_next = soft_threshold(yf - g, lambda * mu / 2.0);

        const double step = frobenius_norm(b_next - b) + frobenius_norm(f_next - f);
        b_prev = std::move(b);
        f_prev = std::move(f);
        b = std::move(b_next);
        f = std::move(f_next);
        t_prev = t;
        t = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;

        const double rel = frobenius_norm(a - b - f) / norm_a;
        if (trace) {
            trace->mu_history.push_back(mu);
            trace->residual_history.push_back(rel);
        }
        const bool at_floor = mu <= mu_floor;
        mu = std::max(decay * mu, mu_floor);
        dec.iterations = it;
        dec.residual_rel = rel;
        // Feasible and stationary: the proximal steps have settled, so no
        // stale shrinkage survivors remain in F.
        if (rel < config.tol && step <= 1e-9 * (1.0 + norm_a)) {
            dec.converged = true;
            break;
        }
        // Stationary at the continuation floor: no further progress possible.
        if (at_floor && step <= 1e-12 * (1.0 + norm_a)) break;
    }
    dec.background = std::move(b);
    dec.foreground = std::move(f);
    return dec;
}

}  // namespace wlrbg::rpca
