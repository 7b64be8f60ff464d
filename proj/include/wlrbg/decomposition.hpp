#pragma once

#include <string>

#include "wlrbg/matrix.hpp"

namespace wlrbg {

// Background/foreground split produced by any solver. For the low-rank
// solvers foreground = input - background exactly; the RPCA methods emit
// their sparse iterate as foreground and report the leftover residual.
struct Decomposition {
    DenseMatrix background;
    DenseMatrix foreground;
    std::string method;
    bool converged = true;
    Index iterations = 0;
    Index svd_count = 0;
    double residual_rel = 0.0;  // ||A - B - F||_F / ||A||_F
};

}  // namespace wlrbg
