#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "test_support.hpp"
#include "wlrbg/errors.hpp"
#include "wlrbg/numerics.hpp"
#include "wlrbg/synth.hpp"
#include "wlrbg/wlr.hpp"

using namespace wlrbg;
using test_support::random_matrix;
using test_support::random_low_rank;
using test_support::rel_err;

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
    return Eigen::Map<const Eigen::MatrixXd>(m.data(), m.rows(), m.cols());
}

DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
    DenseMatrix out(e.rows(), e.cols());
    Eigen::Map<Eigen::MatrixXd>(out.data(), out.rows(), out.cols()) = e;
    return out;
}

struct Instance {
    DenseMatrix a1, a2, w1;
    wlr::WlrState state;
};

// Random problem with random (nonzero) iterate blocks.
Instance random_instance(Index m, Index n, Index k, Index r, std::uint64_t seed,
                         double w_lo = 0.5, double w_hi = 3.0) {
    std::mt19937_64 rng(seed);
    Instance inst;
    inst.a1 = DenseMatrix::random_normal(m, k, rng);
    inst.a2 = DenseMatrix::random_normal(m, n - k, rng);
    inst.w1 = DenseMatrix::random_uniform(m, k, w_lo, w_hi, rng);
    inst.state.x1 = DenseMatrix::random_normal(m, k, rng);
    inst.state.c = DenseMatrix::random_normal(k, n - k, rng);
    inst.state.b = DenseMatrix::random_normal(m, r - k, rng);
    inst.state.d = DenseMatrix::random_normal(r - k, n - k, rng);
    return inst;
}

// Stacked least-squares oracle for the X1 row subproblem: minimize
// ||diag(w_i)(a1_i - x)|| and ||a2_i - B_i D - x C|| jointly via QR of the
// stacked design, independently of the production normal-equation route.
DenseMatrix oracle_x1(const Instance& inst) {
    const Index m = inst.a1.rows();
    const Index k = inst.a1.cols();
    const Index n2 = inst.a2.cols();
    const Eigen::MatrixXd c = to_eigen(inst.state.c);
    const Eigen::MatrixXd bd = to_eigen(inst.state.b) * to_eigen(inst.state.d);
    DenseMatrix out(m, k);
    for (Index i = 0; i < m; ++i) {
        Eigen::MatrixXd design(k + n2, k);
        Eigen::VectorXd rhs(k + n2);
        design.setZero();
        for (Index j = 0; j < k; ++j) {
            design(j, j) = inst.w1(i, j);
            rhs(j) = inst.w1(i, j) * inst.a1(i, j);
        }
        design.bottomRows(n2) = c.transpose();
        for (Index j = 0; j < n2; ++j) rhs(k + j) = inst.a2(i, j) - bd(i, j);
        const Eigen::VectorXd x = design.householderQr().solve(rhs);
        for (Index j = 0; j < k; ++j) out(i, j) = x(j);
    }
    return out;
}

DenseMatrix oracle_c(const Instance& inst) {
    const Eigen::MatrixXd rhs =
        to_eigen(inst.a2) - to_eigen(inst.state.b) * to_eigen(inst.state.d);
    return from_eigen(to_eigen(inst.state.x1).householderQr().solve(rhs));
}

DenseMatrix oracle_b(const Instance& inst) {
    const Eigen::MatrixXd residual =
        to_eigen(inst.a2) - to_eigen(inst.state.x1) * to_eigen(inst.state.c);
    const Eigen::MatrixXd dt = to_eigen(inst.state.d).transpose();
    return from_eigen(dt.householderQr().solve(residual.transpose()).transpose());
}

DenseMatrix oracle_d(const Instance& inst) {
    const Eigen::MatrixXd residual =
        to_eigen(inst.a2) - to_eigen(inst.state.x1) * to_eigen(inst.state.c);
    return from_eigen(to_eigen(inst.state.b).householderQr().solve(residual));
}

}  // namespace

TEST_CASE("objective matches a scalar double-loop oracle") {
    const Instance inst = random_instance(6, 9, 2, 4, 5);
    double weighted = 0.0;
    for (Index j = 0; j < inst.a1.cols(); ++j) {
        for (Index i = 0; i < inst.a1.rows(); ++i) {
            const double d = (inst.a1(i, j) - inst.state.x1(i, j)) * inst.w1(i, j);
            weighted += d * d;
        }
    }
    const DenseMatrix model = inst.state.x1 * inst.state.c + inst.state.b * inst.state.d;
    double fit = 0.0;
    for (Index j = 0; j < inst.a2.cols(); ++j) {
        for (Index i = 0; i < inst.a2.rows(); ++i) {
            const double d = inst.a2(i, j) - model(i, j);
            fit += d * d;
        }
    }
    const double got = wlr::objective(inst.a1, inst.a2, inst.state, inst.w1);
    CHECK(got == doctest::Approx(weighted + fit).epsilon(1e-12));
    CHECK(got >= 0.0);
}

TEST_CASE("objective is zero when the model interpolates") {
    Instance inst = random_instance(5, 8, 2, 4, 6);
    inst.state.x1 = inst.a1;
    inst.state.c = DenseMatrix(2, 6);
    inst.state.b = inst.a2;  // B*D = A2 with D = I
    inst.state.d = DenseMatrix::identity(6);
    CHECK(wlr::objective(inst.a1, inst.a2, inst.state, inst.w1) ==
          doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("objective with all factors zero") {
    Instance inst = random_instance(5, 8, 2, 4, 7);
    inst.state.x1 = DenseMatrix(5, 2);
    inst.state.c = DenseMatrix(2, 6);
    inst.state.b = DenseMatrix(5, 2);
    inst.state.d = DenseMatrix(2, 6);
    const double w = frobenius_norm(hadamard(inst.a1, inst.w1));
    const double f = frobenius_norm(inst.a2);
    CHECK(wlr::objective(inst.a1, inst.a2, inst.state, inst.w1) ==
          doctest::Approx(w * w + f * f).epsilon(1e-12));
}

TEST_CASE("objective rejects non-conformal shapes") {
    Instance inst = random_instance(5, 8, 2, 4, 8);
    inst.state.c = DenseMatrix(3, 6);
    CHECK_THROWS_AS(wlr::objective(inst.a1, inst.a2, inst.state, inst.w1), ConfigError);
}

TEST_CASE("update_x1 with C = 0 returns A1 regardless of weights") {
    Instance inst = random_instance(7, 10, 3, 5, 9, 0.5, 100.0);
    inst.state.c = DenseMatrix(3, 7);
    const DenseMatrix x1 = wlr::update_x1(inst.state, inst.a1, inst.a2, inst.w1);
    CHECK(rel_err(x1, inst.a1) <= 1e-12);
}

TEST_CASE("update_x1 matches the stacked least-squares oracle") {
    for (int trial = 0; trial < 10; ++trial) {
        const Instance inst = random_instance(5, 9, 3, 5, 300 + trial);
        const DenseMatrix got = wlr::update_x1(inst.state, inst.a1, inst.a2, inst.w1);
        CHECK(rel_err(got, oracle_x1(inst)) <= 1e-8);
    }
}

TEST_CASE("update_x1 is consistent across thread counts") {
    const Instance inst = random_instance(64, 30, 4, 6, 10);
    const DenseMatrix serial = wlr::update_x1(inst.state, inst.a1, inst.a2, inst.w1, 1);
    const DenseMatrix parallel = wlr::update_x1(inst.state, inst.a1, inst.a2, inst.w1, 4);
    CHECK(frobenius_norm(serial - parallel) <= 1e-9);
}

TEST_CASE("update_x1 rejects nonpositive weights") {
    Instance inst = random_instance(4, 6, 2, 3, 11);
    inst.w1(1, 1) = 0.0;
    CHECK_THROWS_AS(wlr::update_x1(inst.state, inst.a1, inst.a2, inst.w1), ConfigError);
}

TEST_CASE("update_c special cases") {
    Instance inst = random_instance(6, 10, 3, 5, 12);
    // B*D = A2 exactly: C = 0.
    inst.state.b = inst.a2;
    inst.state.d = DenseMatrix::identity(7);
    CHECK(frobenius_norm(wlr::update_c(inst.state, inst.a2)) <= 1e-10);

    // Orthonormal X1, B*D = 0: projection C = X1^T A2.
    Instance proj = random_instance(6, 10, 3, 5, 13);
    const auto f = svd(proj.state.x1);
    proj.state.x1 = f.u;
    proj.state.b = DenseMatrix(6, 2);
    proj.state.d = DenseMatrix(2, 7);
    const DenseMatrix c = wlr::update_c(proj.state, proj.a2);
    CHECK(rel_err(c, transpose(proj.state.x1) * proj.a2) <= 1e-10);
}

TEST_CASE("update_c/update_b/update_d match least-squares oracles") {
    for (int trial = 0; trial < 10; ++trial) {
        const Instance inst = random_instance(6, 10, 3, 5, 400 + trial);
        CHECK(rel_err(wlr::update_c(inst.state, inst.a2), oracle_c(inst)) <= 1e-8);
        CHECK(rel_err(wlr::update_b(inst.state, inst.a2), oracle_b(inst)) <= 1e-8);
        CHECK(rel_err(wlr::update_d(inst.state, inst.a2), oracle_d(inst)) <= 1e-8);
    }
}

TEST_CASE("update_b returns zero when the residual vanishes") {
    Instance inst = random_instance(6, 10, 3, 5, 14);
    inst.a2 = inst.state.x1 * inst.state.c;
    const DenseMatrix b = wlr::update_b(inst.state, inst.a2);
    CHECK(frobenius_norm(b) <= 1e-10);
}

TEST_CASE("update_b with a single extra direction matches scalar least squares") {
    const Instance inst = random_instance(6, 10, 3, 4, 15);  // r - k = 1
    const DenseMatrix got = wlr::update_b(inst.state, inst.a2);
    const DenseMatrix residual = inst.a2 - inst.state.x1 * inst.state.c;
    // Row-wise scalar least squares against the single D row.
    double dd = 0.0;
    for (Index j = 0; j < inst.state.d.cols(); ++j) dd += inst.state.d(0, j) * inst.state.d(0, j);
    for (Index i = 0; i < 6; ++i) {
        double rd = 0.0;
        for (Index j = 0; j < residual.cols(); ++j) rd += residual(i, j) * inst.state.d(0, j);
        CHECK(got(i, 0) == doctest::Approx(rd / dd).epsilon(1e-8));
    }
}

TEST_CASE("every update decreases or preserves the objective") {
    for (int trial = 0; trial < 50; ++trial) {
        Instance inst = random_instance(5, 9, 2, 4, 500 + trial);
        double current = wlr::objective(inst.a1, inst.a2, inst.state, inst.w1);
        inst.state.x1 = wlr::update_x1(inst.state, inst.a1, inst.a2, inst.w1);
        double next = wlr::objective(inst.a1, inst.a2, inst.state, inst.w1);
        CHECK(next <= current + 1e-10);
        current = next;
        inst.state.c = wlr::update_c(inst.state, inst.a2);
        next = wlr::objective(inst.a1, inst.a2, inst.state, inst.w1);
        CHECK(next <= current + 1e-10);
        current = next;
        inst.state.b = wlr::update_b(inst.state, inst.a2);
        next = wlr::objective(inst.a1, inst.a2, inst.state, inst.w1);
        CHECK(next <= current + 1e-10);
        current = next;
        inst.state.d = wlr::update_d(inst.state, inst.a2);
        next = wlr::objective(inst.a1, inst.a2, inst.state, inst.w1);
        CHECK(next <= current + 1e-10);
    }
}

TEST_CASE("each update is a local minimizer over its own block") {
    std::mt19937_64 rng(99);
    Instance inst = random_instance(5, 9, 2, 4, 16);
    const auto check_perturbations = [&](auto mutate) {
        const double optimal = wlr::objective(inst.a1, inst.a2, inst.state, inst.w1);
        for (int p = 0; p < 20; ++p) {
            wlr::WlrState perturbed = inst.state;
            mutate(perturbed);
            CHECK(wlr::objective(inst.a1, inst.a2, perturbed, inst.w1) >= optimal - 1e-9);
        }
    };

    inst.state.x1 = wlr::update_x1(inst.state, inst.a1, inst.a2, inst.w1);
    check_perturbations([&](wlr::WlrState& s) {
        s.x1 = s.x1 + 1e-3 * DenseMatrix::random_normal(5, 2, rng);
    });
    inst.state.c = wlr::update_c(inst.state, inst.a2);
    check_perturbations([&](wlr::WlrState& s) {
        s.c = s.c + 1e-3 * DenseMatrix::random_normal(2, 7, rng);
    });
    inst.state.b = wlr::update_b(inst.state, inst.a2);
    check_perturbations([&](wlr::WlrState& s) {
        s.b = s.b + 1e-3 * DenseMatrix::random_normal(5, 2, rng);
    });
    inst.state.d = wlr::update_d(inst.state, inst.a2);
    check_perturbations([&](wlr::WlrState& s) {
        s.d = s.d + 1e-3 * DenseMatrix::random_normal(2, 7, rng);
    });
}

TEST_CASE("solve_wlr drives the objective to zero on exact rank-r data") {
    const Index m = 10, n = 14, k = 3, r = 5;
    const DenseMatrix a = random_low_rank(m, n, r, 21);
    const DenseMatrix a1 = a.cols(0, k);
    const DenseMatrix a2 = a.cols(k, n - k);
    wlr::WlrConfig cfg;
    cfg.r = r;
    cfg.k = k;
    cfg.epsilon = 1e-12;
    cfg.max_iter = 200;
    cfg.seed = 3;
    const auto [state, dec] = wlr::solve_wlr(a1, a2, DenseMatrix::ones(m, k), cfg);
    const double na = frobenius_norm(a);
    CHECK(state.objective_history.back() <= 1e-6 * na * na);
}

TEST_CASE("solve_wlr objective history is nonincreasing") {
    for (int trial = 0; trial < 10; ++trial) {
        const Index m = 8, n = 11, k = 2, r = 4;
        std::mt19937_64 rng(700 + trial);
        const DenseMatrix a1 = DenseMatrix::random_normal(m, k, rng);
        const DenseMatrix a2 = DenseMatrix::random_normal(m, n - k, rng);
        const DenseMatrix w1 = DenseMatrix::random_uniform(m, k, 0.5, 5.0, rng);
        wlr::WlrConfig cfg;
        cfg.r = r;
        cfg.k = k;
        cfg.max_iter = 30;
        cfg.seed = trial;
        cfg.record_substeps = true;
        const auto [state, dec] = wlr::solve_wlr(a1, a2, w1, cfg);
        for (std::size_t i = 1; i < state.objective_history.size(); ++i) {
            CHECK(state.objective_history[i] <= state.objective_history[i - 1] + 1e-10);
        }
    }
}

TEST_CASE("large weights pin X1 to A1") {
    const Index m = 12, n = 16, k = 3, r = 5;
    std::mt19937_64 rng(31);
    const DenseMatrix a1 = DenseMatrix::random_uniform(m, k, 0.0, 1.0, rng);
    const DenseMatrix a2 = DenseMatrix::random_uniform(m, n - k, 0.0, 1.0, rng);
    const DenseMatrix w1 = DenseMatrix::random_uniform(m, k, 1e6, 2e6, rng);
    wlr::WlrConfig cfg;
    cfg.r = r;
    cfg.k = k;
    cfg.max_iter = 100;
    cfg.seed = 5;
    const auto [state, dec] = wlr::solve_wlr(a1, a2, w1, cfg);
    CHECK(rel_err(state.x1, a1) < 1e-3);
}

TEST_CASE("assembled approximation has rank at most r") {
    const Index m = 9, n = 12, k = 2, r = 4;
    std::mt19937_64 rng(32);
    const DenseMatrix a1 = DenseMatrix::random_normal(m, k, rng);
    const DenseMatrix a2 = DenseMatrix::random_normal(m, n - k, rng);
    wlr::WlrConfig cfg;
    cfg.r = r;
    cfg.k = k;
    cfg.max_iter = 20;
    const auto [state, dec] = wlr::solve_wlr(a1, a2, DenseMatrix::ones(m, k), cfg);
    const auto f = svd(dec.background);
    for (std::size_t i = r; i < f.s.size(); ++i) CHECK(f.s[i] <= 1e-8 * f.s[0]);
}

TEST_CASE("unweighted solve approaches the unconstrained truncation optimum") {
    const Index m = 10, n = 13, k = 3, r = 4;
    // Well-conditioned instance: a rank-r matrix plus small noise.
    const DenseMatrix a =
        random_low_rank(m, n, r, 33) + 0.01 * test_support::random_matrix(m, n, 34);
    const DenseMatrix a1 = a.cols(0, k);
    const DenseMatrix a2 = a.cols(k, n - k);
    wlr::WlrConfig cfg;
    cfg.r = r;
    cfg.k = k;
    cfg.epsilon = 1e-12;
    cfg.max_iter = 2000;
    cfg.seed = 8;
    const auto [state, dec] = wlr::solve_wlr(a1, a2, DenseMatrix::ones(m, k), cfg);
    const double optimum = std::pow(frobenius_norm(a - truncate_rank(a, r)), 2);
    CHECK(state.objective_history.back() <= 1.01 * optimum + 1e-12);
}

TEST_CASE("degenerate r = k keeps empty side blocks") {
    const Index m = 8, n = 10, k = 3;
    std::mt19937_64 rng(35);
    const DenseMatrix a1 = DenseMatrix::random_normal(m, k, rng);
    const DenseMatrix a2 = DenseMatrix::random_normal(m, n - k, rng);
    wlr::WlrConfig cfg;
    cfg.r = k;
    cfg.k = k;
    cfg.max_iter = 15;
    const auto [state, dec] = wlr::solve_wlr(a1, a2, DenseMatrix::ones(m, k), cfg);
    CHECK(state.b.cols() == 0);
    CHECK(state.d.rows() == 0);
    CHECK(dec.background.cols() == n);
    for (std::size_t i = 1; i < state.objective_history.size(); ++i) {
        CHECK(state.objective_history[i] <= state.objective_history[i - 1] + 1e-10);
    }
}

TEST_CASE("solve_wlr validates its configuration") {
    const DenseMatrix a1 = random_matrix(5, 2, 36);
    const DenseMatrix a2 = random_matrix(5, 4, 37);
    wlr::WlrConfig cfg;
    cfg.r = 1;  // r < k
    cfg.k = 2;
    CHECK_THROWS_AS(wlr::solve_wlr(a1, a2, DenseMatrix::ones(5, 2), cfg), ConfigError);
    cfg.r = 99;
    CHECK_THROWS_AS(wlr::solve_wlr(a1, a2, DenseMatrix::ones(5, 2), cfg), ConfigError);
}

TEST_CASE("solve_gtls at lambda = 1 is plain truncation") {
    const DenseMatrix a1 = random_matrix(7, 3, 41);
    const DenseMatrix a2 = random_matrix(7, 5, 42);
    const DenseMatrix got = wlr::solve_gtls(a1, a2, 1.0, 4);
    CHECK(frobenius_norm(got - truncate_rank(hcat(a1, a2), 4)) <= 1e-9);
}

TEST_CASE("solve_gtls approaches the constrained solution as lambda grows") {
    const DenseMatrix a1 = random_matrix(8, 2, 43);
    const DenseMatrix a2 = random_matrix(8, 6, 44);
    const Index r = 4;
    const DenseMatrix limit = wlr::golub_solve(a1, a2, r);
    const DenseMatrix got = wlr::solve_gtls(a1, a2, 1e8, r);
    CHECK(rel_err(got.cols(0, 2), limit.cols(0, 2)) <= 1e-5);
}

TEST_CASE("solve_gtls beats random rank-r competitors on its objective") {
    const DenseMatrix a1 = random_matrix(7, 2, 45);
    const DenseMatrix a2 = random_matrix(7, 5, 46);
    const double lambda = 3.0;
    const Index r = 3;
    const auto objective = [&](const DenseMatrix& b) {
        const double e1 = frobenius_norm(b.cols(0, 2) - a1);
        const double e2 = frobenius_norm(b.cols(2, 5) - a2);
        return lambda * lambda * e1 * e1 + e2 * e2;
    };
    const double best = objective(wlr::solve_gtls(a1, a2, lambda, r));
    for (int trial = 0; trial < 100; ++trial) {
        CHECK(best <= objective(random_low_rank(7, 7, r, 4000 + trial)) + 1e-9);
    }
}

TEST_CASE("solve_gtls objective is continuous in lambda") {
    const DenseMatrix a1 = random_matrix(6, 2, 47);
    const DenseMatrix a2 = random_matrix(6, 5, 48);
    const Index r = 3;
    for (double lambda : {0.5, 2.0, 10.0, 1e3}) {
        const auto objective = [&](double l, const DenseMatrix& b) {
            const double e1 = frobenius_norm(b.cols(0, 2) - a1);
            const double e2 = frobenius_norm(b.cols(2, 5) - a2);
            return l * l * e1 * e1 + e2 * e2;
        };
        const double at = objective(lambda, wlr::solve_gtls(a1, a2, lambda, r));
        const double near = objective(1.0001 * lambda, wlr::solve_gtls(a1, a2, 1.0001 * lambda, r));
        CHECK(std::abs(at - near) <= 1e-3 * at);
    }
}

TEST_CASE("golub_solve keeps A1 and handles the trivial cases") {
    const DenseMatrix a1 = random_matrix(8, 3, 51);
    // A2 inside range(A1): solution is (A1, A2) for any feasible r.
    const DenseMatrix mix = random_matrix(3, 4, 52);
    const DenseMatrix a2 = a1 * mix;
    const DenseMatrix got = wlr::golub_solve(a1, a2, 3);
    CHECK(rel_err(got, hcat(a1, a2)) <= 1e-10);

    // Zero A1 reduces to unconstrained truncation.
    const DenseMatrix zero(8, 2);
    const DenseMatrix b2 = random_matrix(8, 5, 53);
    const DenseMatrix reduced = wlr::golub_solve(zero, b2, 3);
    CHECK(rel_err(reduced.cols(2, 5), truncate_rank(b2, 3)) <= 1e-10);

    CHECK_THROWS_AS(wlr::golub_solve(a1, a2, 1), ConfigError);
}

TEST_CASE("golub_solve beats random feasible competitors") {
    const DenseMatrix a1 = random_matrix(6, 2, 54);
    const DenseMatrix a2 = random_matrix(6, 5, 55);
    const Index r = 3;
    const DenseMatrix best = wlr::golub_solve(a1, a2, r);
    const double best_err = frobenius_norm(best.cols(2, 5) - a2);
    std::mt19937_64 rng(56);
    for (int trial = 0; trial < 100; ++trial) {
        // Feasible competitor: first block A1, second block rank-correction
        // that keeps total rank <= r.
        const DenseMatrix mix = DenseMatrix::random_normal(2, 5, rng);
        const DenseMatrix extra = random_low_rank(6, 5, r - 2, 5700 + trial);
        const DenseMatrix candidate = a1 * mix + extra;
        CHECK(best_err <= frobenius_norm(candidate - a2) + 1e-9);
    }
}

TEST_CASE("error curve decreases on a frame-sequence instance") {
    synth::SynthSpec spec;
    spec.height = 24;
    spec.width = 30;
    spec.n_frames = 40;
    spec.sprite_size = 6;
    spec.empty_ranges = {{2, 4}, {30, 34}};
    spec.static_range = {38, 40};
    const auto ds = synth::generate(spec);
    const Index k = 8;
    wlr::WlrConfig cfg;
    cfg.k = k;
    cfg.r = k + 1;
    cfg.epsilon = 1e-7;
    cfg.max_iter = 50;
    std::mt19937_64 rng(77);
    const DenseMatrix w1 =
        DenseMatrix::random_uniform(ds.frames.rows(), k, 500.0, 1000.0, rng);
    const auto [state, dec] = wlr::solve_wlr(ds.frames.cols(0, k),
                                             ds.frames.cols(k, ds.n_frames() - k), w1, cfg);
    REQUIRE(state.error_history.size() >= 10);
    // Qualitative shape: the iterate-change curve decays by orders of
    // magnitude from the first sweep to the last.
    CHECK(state.error_history.back() < 1e-2 * state.error_history.front());
    Index decreasing = 0;
    for (std::size_t i = 1; i < state.error_history.size(); ++i) {
        if (state.error_history[i] <= state.error_history[i - 1]) ++decreasing;
    }
    CHECK(decreasing * 10 >= static_cast<Index>(state.error_history.size() - 1) * 8);
}
