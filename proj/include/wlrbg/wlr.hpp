#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wlrbg/decomposition.hpp"
#include "wlrbg/matrix.hpp"

namespace wlrbg::wlr {

// Alternating solver for the block-weighted low-rank problem
//
//   min  ||(A1 - X1) .* W1||_F^2 + ||A2 - X1*C - B*D||_F^2
//
// over X1 (m x k), C (k x (n-k)), B (m x (r-k)), D ((r-k) x (n-k)).
// The approximation X = (X1, X1*C + B*D) has rank <= r by construction.

struct WlrConfig {
    Index r = 0;               // target rank of the assembled approximation
    Index k = 0;               // width of the weighted first block
    double epsilon = 1e-7;     // stopping threshold on iterate change
    Index max_iter = 50;
    std::uint64_t seed = 0;    // drives the X1/D random-normal initialization
    Index threads = 1;         // row solves of the X1 update run in parallel
    bool record_substeps = false;  // objective after every substep, not just sweeps
};

struct WlrState {
    DenseMatrix x1;  // m x k
    DenseMatrix c;   // k x (n-k)
    DenseMatrix b;   // m x (r-k)
    DenseMatrix d;   // (r-k) x (n-k)
    Index iteration = 0;
    std::vector<double> objective_history;
    std::vector<double> error_history;  // ||X_{p+1} - X_p||_F per sweep
    bool rank_deficient = false;        // some inner solve fell back to minimum-norm
};

double objective(const DenseMatrix& a1, const DenseMatrix& a2, const WlrState& state,
                 const DenseMatrix& w1);
double objective(const DenseMatrix& a1, const DenseMatrix& a2, const DenseMatrix& x1,
                 const DenseMatrix& c, const DenseMatrix& b, const DenseMatrix& d,
                 const DenseMatrix& w1);

// Exact minimizers of the objective over one block with the others fixed.
// Rank-deficient systems are solved in the minimum-norm sense and reported
// through the optional flag.
DenseMatrix update_x1(const WlrState& state, const DenseMatrix& a1, const DenseMatrix& a2,
                      const DenseMatrix& w1, Index threads = 1);
DenseMatrix update_c(const WlrState& state, const DenseMatrix& a2,
                     bool* rank_deficient = nullptr);
DenseMatrix update_b(const WlrState& state, const DenseMatrix& a2,
                     bool* rank_deficient = nullptr);
DenseMatrix update_d(const WlrState& state, const DenseMatrix& a2,
                     bool* rank_deficient = nullptr);

// Assembled approximation (X1, X1*C + B*D).
DenseMatrix approximation(const WlrState& state);

std::pair<WlrState, Decomposition> solve_wlr(const DenseMatrix& a1, const DenseMatrix& a2,
                                             const DenseMatrix& w1, const WlrConfig& config);

// Closed-form rank-r minimizer of lambda^2 ||A1 - B1||_F^2 + ||A2 - B2||_F^2
// via one SVD of (lambda*A1  A2).
DenseMatrix solve_gtls(const DenseMatrix& a1, const DenseMatrix& a2, double lambda, Index r);

// Closed-form solution of the constrained problem with B1 = A1 held exactly:
// (A1, P*A2 + truncate_rank((I - P)*A2, r - rank(A1))), P the projector onto
// range(A1). Requires r >= rank(A1).
DenseMatrix golub_solve(const DenseMatrix& a1, const DenseMatrix& a2, Index r);

}  // namespace wlrbg::wlr
