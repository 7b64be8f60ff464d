#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wlrbg/decomposition.hpp"
#include "wlrbg/frame_io.hpp"
#include "wlrbg/matrix.hpp"
#include "wlrbg/wlr.hpp"

namespace wlrbg::pipeline {

// End-to-end background estimation: learn the near-background frame set S
// from a crude SVT split, partition the columns, run the alternating
// weighted solver, and restore frame order.

enum class Eps1Strategy {
    kOtsu,          // two-class threshold on the |F_in| histogram
    kPercentile95,  // fixed 95th percentile of |F_in|
};

struct PipelineConfig {
    Index i1 = 2;               // k = ceil(|S| / i1)
    Index i2 = 1;               // r = k + i2
    double epsilon = 1e-7;
    Index wlr_max_iter = 50;
    double w1_low = 500.0;      // W1 entries sampled i.i.d. uniform from
    double w1_high = 1000.0;    // [w1_low, w1_high]
    Eps1Strategy eps1_strategy = Eps1Strategy::kOtsu;
    std::uint64_t seed = 0;
    Index threads = 1;
    double init_energy = 0.9;   // spectral energy kept by the initial split
};

struct FrameSelection {
    std::vector<Index> s;          // selected near-background frames, ascending
    double eps1 = 0.0;
    double eps2 = 0.0;
    std::vector<double> scores;    // per-frame percentage scores
    Index k = 0;
    Index r = 0;
    std::vector<Index> permutation;  // rearranged slot -> original frame
    std::vector<Index> inverse;      // original frame -> rearranged slot
};

struct PipelineResult {
    Decomposition decomposition;          // background X, foreground A - X
    DenseMatrix foreground_thresholded;   // entries with |F| <= eps1 zeroed
    FrameSelection selection;
    wlr::WlrState state;
};

// Crude split A = B_in + F_in by singular value thresholding at the first
// singular value outside the given spectral energy fraction.
std::pair<DenseMatrix, DenseMatrix> initial_decompose(const DenseMatrix& a,
                                                      double energy_fraction = 0.9);

// Threshold separating near-zero residual mass from foreground mass in
// |f_in|; 0 for a constant input.
double select_eps1(const DenseMatrix& f_in, Eps1Strategy strategy = Eps1Strategy::kOtsu);

// lf = [|f_in| > eps1], lb = [|b_in| > 1e-12], as 0/1 matrices.
std::pair<DenseMatrix, DenseMatrix> binarize(const DenseMatrix& f_in, const DenseMatrix& b_in,
                                             double eps1);

// score_j = 100 * (on pixels of lf column j) / (on pixels of lb column j);
// +inf when the lb column is all zero.
std::vector<double> percentage_scores(const DenseMatrix& lf, const DenseMatrix& lb);

// eps2 = mode of the exact scores (ties toward the smaller value);
// S = frames with score <= eps2.
std::pair<std::vector<Index>, double> select_frames(const std::vector<double>& scores);

PipelineResult run_pipeline(const io::Dataset& dataset, const PipelineConfig& config);

}  // namespace wlrbg::pipeline
