#include "wlrbg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "wlrbg/errors.hpp"
#include "wlrbg/numerics.hpp"

namespace wlrbg::pipeline {

namespace {

constexpr double kLogicalEps = 1e-12;  // nonzero test for the B_in logical matrix

double otsu_threshold(const std::vector<double>& values, double vmax) {
    constexpr int kBins = 256;
    const double bin_width = vmax / kBins;
    std::vector<double> hist(kBins, 0.0);
    for (double v : values) {
        const int at = std::min(kBins - 1, static_cast<int>(v / bin_width));
        hist[static_cast<std::size_t>(at)] += 1.0;
    }
    const double total = static_cast<double>(values.size());
    double total_mean = 0.0;
    for (int i = 0; i < kBins; ++i) total_mean += i * hist[static_cast<std::size_t>(i)];
    total_mean /= total;

    double best_var = -1.0;
    int best_t = 0;
    double w0 = 0.0, sum0 = 0.0;
    for (int t = 0; t < kBins - 1; ++t) {
        w0 += hist[static_cast<std::size_t>(t)];
        sum0 += t * hist[static_cast<std::size_t>(t)];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (total_mean * total - sum0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {
            best_var = between;
            best_t = t;
        }
    }
    return bin_width * (best_t + 1);
}

}  // namespace

std::pair<DenseMatrix, DenseMatrix> initial_decompose(const DenseMatrix& a,
                                                      double energy_fraction) {
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0)) {
        throw ConfigError("initial_decompose: energy fraction must be in (0, 1]");
    }
    SvdFactors f = svd(a);
    double total = 0.0;
    for (double s : f.s) total += s * s;
    if (total == 0.0) {
        return {DenseMatrix(a.rows(), a.cols()), DenseMatrix(a.rows(), a.cols())};
    }
    const Index p = static_cast<Index>(f.s.size());
    Index keep = 0;
    double cum = 0.0;
    while (keep < p && cum < energy_fraction * total) {
        cum += f.s[static_cast<std::size_t>(keep)] * f.s[static_cast<std::size_t>(keep)];
        ++keep;
    }
    const double tau = keep < p ? f.s[static_cast<std::size_t>(keep)] : 0.0;
    f.s = soft_threshold(f.s, tau);
    DenseMatrix b_in = truncate_rank(f, keep);
    DenseMatrix f_in = a - b_in;
    // A residual at reconstruction-roundoff level is an exact split; keeping
    // the noise would let the threshold search segment pure float dust.
    if (frobenius_norm(f_in) <= 1e-12 * frobenius_norm(a)) {
        return {a, DenseMatrix(a.rows(), a.cols())};
    }
    return {std::move(b_in), std::move(f_in)};
}

double select_eps1(const DenseMatrix& f_in, Eps1Strategy strategy) {
    if (f_in.size() == 0) throw ConfigError("select_eps1: empty input");
    std::vector<double> values(static_cast<std::size_t>(f_in.size()));
    for (Index i = 0; i < f_in.size(); ++i) values[static_cast<std::size_t>(i)] =
        std::abs(f_in.data()[i]);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*hi == *lo) return 0.0;

    switch (strategy) {
        case Eps1Strategy::kOtsu:
            return otsu_threshold(values, *hi);
        case Eps1Strategy::kPercentile95: {
            const std::size_t at = static_cast<std::size_t>(
                std::min<double>(static_cast<double>(values.size()) - 1,
                                 std::ceil(0.95 * static_cast<double>(values.size())) - 1));
            std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(at),
                             values.end());
            return values[at];
        }
    }
    throw ConfigError("select_eps1: unknown strategy");
}

std::pair<DenseMatrix, DenseMatrix> binarize(const DenseMatrix& f_in, const DenseMatrix& b_in,
                                             double eps1) {
    if (eps1 < 0) throw ConfigError("binarize: eps1 must be nonnegative");
    if (f_in.rows() != b_in.rows() || f_in.cols() != b_in.cols()) {
        throw ConfigError("binarize: F_in and B_in shapes differ");
    }
    DenseMatrix lf(f_in.rows(), f_in.cols());
    DenseMatrix lb(f_in.rows(), f_in.cols());
    for (Index i = 0; i < f_in.size(); ++i) {
        lf.data()[i] = std::abs(f_in.data()[i]) > eps1 ? 1.0 : 0.0;
        lb.data()[i] = std::abs(b_in.data()[i]) > kLogicalEps ? 1.0 : 0.0;
    }
    return {std::move(lf), std::move(lb)};
}

std::vector<double> percentage_scores(const DenseMatrix& lf, const DenseMatrix& lb) {
    if (lf.rows() != lb.rows() || lf.cols() != lb.cols()) {
        throw ConfigError("percentage_scores: shapes differ");
    }
    std::vector<double> scores(static_cast<std::size_t>(lf.cols()));
    for (Index j = 0; j < lf.cols(); ++j) {
        double on_f = 0.0, on_b = 0.0;
        for (Index i = 0; i < lf.rows(); ++i) {
            on_f += lf(i, j);
            on_b += lb(i, j);
        }
        scores[static_cast<std::size_t>(j)] =
            on_b > 0.0 ? 100.0 * on_f / on_b : std::numeric_limits<double>::infinity();
    }
    return scores;
}

std::pair<std::vector<Index>, double> select_frames(const std::vector<double>& scores) {
    if (scores.empty()) throw ConfigError("select_frames: scores are empty");
    // Scores are exact rationals (integer pixel counts over integer column
    // sums), so equal frames collide exactly and the mode is well defined
    // without quantization.
    std::map<double, Index> counts;
    for (double s : scores) {
        if (std::isfinite(s)) ++counts[s];
    }
    if (counts.empty()) {
        throw DataError("select_frames: no usable background evidence (all scores infinite)");
    }
    double mode = counts.begin()->first;
    Index best = counts.begin()->second;
    for (const auto& [value, count] : counts) {
        if (count > best) {  // ties keep the smaller value
            best = count;
            mode = value;
        }
    }
    std::vector<Index> s;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (std::isfinite(scores[i]) && scores[i] <= mode) {
            s.push_back(static_cast<Index>(i));
        }
    }
    return {std::move(s), mode};
}

namespace {

// Orders frame indices by column content (then index). Keyed on content so
// that the seeded subset choice commutes with input column permutations.
std::vector<Index> sort_by_content(const DenseMatrix& a, std::vector<Index> idx) {
    std::sort(idx.begin(), idx.end(), [&](Index lhs, Index rhs) {
        const auto l = a.col_span(lhs);
        const auto r = a.col_span(rhs);
        const auto mismatch = std::mismatch(l.begin(), l.end(), r.begin());
        if (mismatch.first != l.end()) return *mismatch.first < *mismatch.second;
        return lhs < rhs;
    });
    return idx;
}

}  // namespace

PipelineResult run_pipeline(const io::Dataset& dataset, const PipelineConfig& config) {
    const DenseMatrix& a = dataset.frames;
    const Index m = a.rows();
    const Index n = a.cols();
    if (n < 1 || m < 1) throw DataError("run_pipeline: dataset is empty");
    if (config.i1 < 1 || config.i2 < 0) {
        throw ConfigError("run_pipeline: need i1 >= 1 and i2 >= 0");
    }
    if (!(config.w1_low > 0) || config.w1_high < config.w1_low) {
        throw ConfigError("run_pipeline: need 0 < w1_low <= w1_high");
    }

    auto [b_in, f_in] = initial_decompose(a, config.init_energy);
    const double eps1 = select_eps1(f_in, config.eps1_strategy);
    const auto [lf, lb] = binarize(f_in, b_in, eps1);
    std::vector<double> scores = percentage_scores(lf, lb);
    auto [selected, eps2] = select_frames(scores);

    const Index cardinality = static_cast<Index>(selected.size());
    const Index k = (cardinality + config.i1 - 1) / config.i1;
    const Index r = k + config.i2;
    if (r > std::min(m, n)) {
        throw ConfigError("run_pipeline: r = k + i2 exceeds min(m, n); lower i2 or raise i1");
    }

    // Rearranged block order. A1 slots are a seeded uniform draw from S
    // without replacement; remaining frames fill A2. Both use the canonical
    // content order.
    std::vector<Index> pool = sort_by_content(a, selected);
    std::mt19937_64 rng_select(config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, cardinality - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng_select))]);
    }
    std::vector<Index> permutation(pool.begin(), pool.begin() + k);
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    for (Index idx : permutation) chosen[static_cast<std::size_t>(idx)] = true;
    std::vector<Index> rest;
    for (Index j = 0; j < n; ++j) {
        if (!chosen[static_cast<std::size_t>(j)]) rest.push_back(j);
    }
    rest = sort_by_content(a, std::move(rest));
    permutation.insert(permutation.end(), rest.begin(), rest.end());

    DenseMatrix a1(m, k), a2(m, n - k);
    for (Index slot = 0; slot < n; ++slot) {
        const auto src = a.col_span(permutation[static_cast<std::size_t>(slot)]);
        if (slot < k) {
            a1.set_col(slot, src);
        } else {
            a2.set_col(slot - k, src);
        }
    }

    std::mt19937_64 rng_w1(config.seed ^ 0xd1b54a32d192ed03ULL);
    const DenseMatrix w1 =
        DenseMatrix::random_uniform(m, k, config.w1_low, config.w1_high, rng_w1);

    wlr::WlrConfig wcfg;
    wcfg.r = r;
    wcfg.k = k;
    wcfg.epsilon = config.epsilon;
    wcfg.max_iter = config.wlr_max_iter;
    wcfg.seed = config.seed;
    wcfg.threads = config.threads;
    auto [state, solved] = wlr::solve_wlr(a1, a2, w1, wcfg);

    // Restore original frame order.
    DenseMatrix background(m, n);
    std::vector<Index> inverse(static_cast<std::size_t>(n), 0);
    for (Index slot = 0; slot < n; ++slot) {
        const Index original = permutation[static_cast<std::size_t>(slot)];
        background.set_col(original, solved.background.col_span(slot));
        inverse[static_cast<std::size_t>(original)] = slot;
    }
    DenseMatrix foreground = a - background;
    DenseMatrix thresholded(m, n);
    for (Index i = 0; i < foreground.size(); ++i) {
        const double v = foreground.data()[i];
        thresholded.data()[i] = std::abs(v) > eps1 ? v : 0.0;
    }

    PipelineResult result;
    result.decomposition.background = std::move(background);
    result.decomposition.foreground = std::move(foreground);
    result.decomposition.method = "wlr-pipeline";
    result.decomposition.converged = solved.converged;
    result.decomposition.iterations = solved.iterations;
    result.decomposition.svd_count = 1;  // the initial SVT split
    result.decomposition.residual_rel = 0.0;
    result.foreground_thresholded = std::move(thresholded);
    std::sort(selected.begin(), selected.end());
    result.selection.s = std::move(selected);
    result.selection.eps1 = eps1;
    result.selection.eps2 = eps2;
    result.selection.scores = std::move(scores);
    result.selection.k = k;
    result.selection.r = r;
    result.selection.permutation = std::move(permutation);
    result.selection.inverse = std::move(inverse);
    result.state = std::move(state);
    return result;
}

}  // namespace wlrbg::pipeline
