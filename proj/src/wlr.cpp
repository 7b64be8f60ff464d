#include "wlrbg/wlr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "wlrbg/errors.hpp"
#include "wlrbg/numerics.hpp"

namespace wlrbg::wlr {

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

// Minimum-norm least-squares solve of lhs * X = rhs. Directions with
// pivots below 1e-6 of the leading one are projected out instead of
// inverted; duplicate columns in A1 otherwise blow the iterates up through
// inverted roundoff.
DenseMatrix lstsq(const DenseMatrix& lhs, const Eigen::MatrixXd& rhs, bool* rank_deficient) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-6);
    cod.compute(map(lhs));
    if (rank_deficient) {
        *rank_deficient = cod.rank() < std::min(lhs.rows(), lhs.cols());
    }
    return from_eigen(cod.solve(rhs));
}

void check_w1(const DenseMatrix& w1, Index m, Index k) {
    if (w1.rows() != m || w1.cols() != k) {
        throw ConfigError("wlr: W1 shape must match A1");
    }
    for (Index i = 0; i < w1.size(); ++i) {
        if (!(w1.data()[i] > 0.0)) {
            throw ConfigError("wlr: W1 entries must be strictly positive");
        }
    }
}

void run_rows(Index m, Index threads, const std::function<void(Index, Index)>& body) {
    if (threads <= 1 || m < 2 * threads) {
        body(0, m);
        return;
    }
    std::vector<std::thread> pool;
    const Index chunk = (m + threads - 1) / threads;
    for (Index t = 0; t < threads; ++t) {
        const Index lo = t * chunk;
        const Index hi = std::min(m, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

double objective(const DenseMatrix& a1, const DenseMatrix& a2, const DenseMatrix& x1,
                 const DenseMatrix& c, const DenseMatrix& b, const DenseMatrix& d,
                 const DenseMatrix& w1) {
    if (a1.rows() != a2.rows() || x1.rows() != a1.rows() || x1.cols() != a1.cols() ||
        w1.rows() != a1.rows() || w1.cols() != a1.cols() || c.rows() != x1.cols() ||
        c.cols() != a2.cols() || b.rows() != a1.rows() || d.cols() != a2.cols() ||
        b.cols() != d.rows()) {
        throw ConfigError("wlr::objective: shapes are not conformal");
    }
    const double weighted = frobenius_norm(hadamard(a1 - x1, w1));
    const double fit = frobenius_norm(a2 - x1 * c - b * d);
    return weighted * weighted + fit * fit;
}

double objective(const DenseMatrix& a1, const DenseMatrix& a2, const WlrState& state,
                 const DenseMatrix& w1) {
    return objective(a1, a2, state.x1, state.c, state.b, state.d, w1);
}

DenseMatrix update_x1(const WlrState& state, const DenseMatrix& a1, const DenseMatrix& a2,
                      const DenseMatrix& w1, Index threads) {
    const Index m = a1.rows();
    const Index k = a1.cols();
    check_w1(w1, m, k);

    // E = A1 .* W1 .* W1 + (A2 - B*D) * C^T
    Eigen::MatrixXd e = map(a1).cwiseProduct(map(w1)).cwiseProduct(map(w1));
    if (a2.cols() > 0) {
        e.noalias() += (map(a2) - map(state.b) * map(state.d)) * map(state.c).transpose();
    }
    const Eigen::MatrixXd cct = map(state.c) * map(state.c).transpose();

    DenseMatrix x1(m, k);
    std::exception_ptr failure;
    run_rows(m, threads, [&](Index lo, Index hi) {
        Eigen::MatrixXd sys(k, k);
        for (Index i = lo; i < hi; ++i) {
            sys = cct;
            for (Index j = 0; j < k; ++j) {
                const double w = w1(i, j);
                sys(j, j) += w * w;
            }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
            if (ldlt.info() != Eigen::Success) {
                failure = std::make_exception_ptr(
                    SolverError("wlr::update_x1: singular row system"));
                return;
            }
            const Eigen::VectorXd row = ldlt.solve(e.row(i).transpose());
            for (Index j = 0; j < k; ++j) x1(i, j) = row(j);
        }
    });
    if (failure) std::rethrow_exception(failure);
    return x1;
}

DenseMatrix update_c(const WlrState& state, const DenseMatrix& a2, bool* rank_deficient) {
    if (a2.cols() == 0) {
        if (rank_deficient) *rank_deficient = false;
        return DenseMatrix(state.x1.cols(), 0);
    }
    const Eigen::MatrixXd rhs = map(a2) - map(state.b) * map(state.d);
    return lstsq(state.x1, rhs, rank_deficient);
}

DenseMatrix update_b(const WlrState& state, const DenseMatrix& a2, bool* rank_deficient) {
    const Index span = state.b.cols();
    if (rank_deficient) *rank_deficient = false;
    if (span == 0) return DenseMatrix(state.x1.rows(), 0);
    // min over B of ||R - B*D||_F with R = A2 - X1*C, solved as the
    // transposed system D^T * B^T = R^T.
    const Eigen::MatrixXd rt = (map(a2) - map(state.x1) * map(state.c)).transpose();
    return wlrbg::transpose(lstsq(wlrbg::transpose(state.d), rt, rank_deficient));
}

DenseMatrix update_d(const WlrState& state, const DenseMatrix& a2, bool* rank_deficient) {
    const Index span = state.b.cols();
    if (rank_deficient) *rank_deficient = false;
    if (span == 0) return DenseMatrix(0, a2.cols());
    const Eigen::MatrixXd rhs = map(a2) - map(state.x1) * map(state.c);
    return lstsq(state.b, rhs, rank_deficient);
}

DenseMatrix approximation(const WlrState& state) {
    return hcat(state.x1, state.x1 * state.c + state.b * state.d);
}

std::pair<WlrState, Decomposition> solve_wlr(const DenseMatrix& a1, const DenseMatrix& a2,
                                             const DenseMatrix& w1, const WlrConfig& config) {
    const Index m = a1.rows();
    const Index k = a1.cols();
    const Index n = k + a2.cols();
    if (a2.rows() != m && a2.cols() > 0) {
        throw ConfigError("solve_wlr: A1 and A2 row counts differ");
    }
    if (config.k != k) throw ConfigError("solve_wlr: config.k must equal the width of A1");
    if (!(k > 0 && k <= config.r && config.r <= std::min(m, n))) {
        throw ConfigError("solve_wlr: need 0 < k <= r <= min(m, n)");
    }
    if (!(config.epsilon > 0)) throw ConfigError("solve_wlr: epsilon must be positive");
    if (config.max_iter < 1) throw ConfigError("solve_wlr: max_iter must be >= 1");
    if (!a1.all_finite() || !a2.all_finite()) {
        throw ConfigError("solve_wlr: input contains NaN or Inf");
    }
    check_w1(w1, m, k);

    const Index span = config.r - k;
    const Index n2 = a2.cols();

    WlrState state;
    std::mt19937_64 rng(config.seed);
    state.x1 = DenseMatrix::random_normal(m, k, rng);
    state.d = DenseMatrix::random_normal(span, n2, rng);
    state.b = DenseMatrix(m, span);
    state.c = DenseMatrix(k, n2);
    state.objective_history.push_back(objective(a1, a2, state, w1));

    DenseMatrix previous = approximation(state);
    bool converged = false;
    const auto record_substep = [&] {
        if (config.record_substeps) {
            state.objective_history.push_back(objective(a1, a2, state, w1));
        }
    };

    for (Index p = 1; p <= config.max_iter; ++p) {
        bool deficient = false;
        state.x1 = update_x1(state, a1, a2, w1, config.threads);
        record_substep();
        state.c = update_c(state, a2, &deficient);
        state.rank_deficient |= deficient;
        record_substep();
        state.b = update_b(state, a2, &deficient);
        state.rank_deficient |= deficient;
        record_substep();
        state.d = update_d(state, a2, &deficient);
        state.rank_deficient |= deficient;

        state.iteration = p;
        state.objective_history.push_back(objective(a1, a2, state, w1));

        const DenseMatrix current = approximation(state);
        const double err = frobenius_norm(current - previous);
        state.error_history.push_back(err);
        const double prev_norm = frobenius_norm(previous);
        previous = current;

        if (err < config.epsilon ||
            (prev_norm >= 1e-12 && err / prev_norm < config.epsilon)) {
            converged = true;
            break;
        }
    }

    Decomposition dec;
    dec.background = previous;
    dec.foreground = hcat(a1, a2) - previous;
    dec.method = "wlr";
    dec.converged = converged;
    dec.iterations = state.iteration;
    dec.svd_count = 0;
    dec.residual_rel = 0.0;
    return {std::move(state), std::move(dec)};
}

DenseMatrix solve_gtls(const DenseMatrix& a1, const DenseMatrix& a2, double lambda, Index r) {
    if (!(lambda > 0)) throw ConfigError("solve_gtls: lambda must be positive");
    if (a1.rows() != a2.rows()) throw ConfigError("solve_gtls: row counts differ");
    const Index k = a1.cols();
    const Index n = k + a2.cols();
    if (r < 0 || r > std::min(a1.rows(), n)) {
        throw ConfigError("solve_gtls: r out of range");
    }
    DenseMatrix y = truncate_rank(hcat(lambda * a1, a2), r);
    DenseMatrix out(y.rows(), y.cols());
    Eigen::Map<Eigen::MatrixXd> o(out.data(), out.rows(), out.cols());
    o = map(y);
    o.leftCols(k) /= lambda;
    return out;
}

DenseMatrix golub_solve(const DenseMatrix& a1, const DenseMatrix& a2, Index r) {
    if (a1.rows() != a2.rows()) throw ConfigError("golub_solve: row counts differ");
    const SvdFactors f = svd(a1);
    const Index rank_a1 = numerical_rank(f);
    if (r < rank_a1) {
        throw ConfigError("golub_solve: infeasible, r < rank(A1) = " + std::to_string(rank_a1));
    }
    // Projection of A2 onto range(A1) plus the best rank-(r - rank(A1))
    // approximation of the orthogonal remainder.
    const Eigen::MatrixXd basis = map(f.u).leftCols(rank_a1);
    const Eigen::MatrixXd projected = basis * (basis.transpose() * map(a2));
    const DenseMatrix remainder = from_eigen(map(a2) - projected);
    const DenseMatrix tail = truncate_rank(remainder, r - rank_a1);
    return hcat(a1, from_eigen(projected + map(tail)));
}

}  // namespace wlrbg::wlr
