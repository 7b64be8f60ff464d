#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "wlrbg/matrix.hpp"

namespace wlrbg::metrics {

struct RocPoint {
    double threshold = 0.0;
    long long tp = 0, fp = 0, tn = 0, fn = 0;
    double tpr = 0.0, fpr = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;  // one per threshold, pooled over all pixels
    double auc = 0.0;              // trapezoid over (fpr, tpr) with (0,0)/(1,1) closure
};

// Pixel-level sweep of |foreground| > t for t in linspace(0, 255, n_thresholds),
// against a binary mask (nonzero = positive). Errors when the mask has no
// positive pixels.
RocResult roc_sweep(const DenseMatrix& foreground, const DenseMatrix& ground_truth,
                    int n_thresholds = 100);

// Per-frame mean squared pixel difference and 10*log10(255^2 / mse); psnr is
// +infinity when mse is zero.
double mse(std::span<const double> f, std::span<const double> g);
double psnr(std::span<const double> f, std::span<const double> g);
double psnr_from_mse(double mse_value);

std::vector<double> per_frame_mse(const DenseMatrix& f, const DenseMatrix& g);
std::vector<double> per_frame_psnr(const DenseMatrix& f, const DenseMatrix& g);

// Structural similarity over a Gaussian-weighted sliding window, valid region
// only: an h x w pair yields an (h-side+1) x (w-side+1) map.
DenseMatrix ssim_map(const DenseMatrix& x, const DenseMatrix& y, Index side = 11,
                     double sigma = 1.5);
double mssim(const DenseMatrix& x, const DenseMatrix& y, Index side = 11, double sigma = 1.5);

// Per-frame true/false positive counts of |foreground| > eps1 vs the mask.
std::vector<std::pair<long long, long long>> tp_fp_counts(const DenseMatrix& foreground,
                                                          const DenseMatrix& ground_truth,
                                                          double eps1);

struct MetricsReport {
    std::vector<RocPoint> roc;
    double auc = 0.0;
    std::vector<double> frame_mse;
    std::vector<double> frame_psnr;
    std::vector<double> frame_mssim;
    std::vector<DenseMatrix> ssim_maps;  // filled only on request
};

// Full report: ROC from the raw foreground, MSE/PSNR/MSSIM from the
// quality foreground (thresholded upstream when applicable).
MetricsReport evaluate_foreground(const DenseMatrix& foreground_raw,
                                  const DenseMatrix& foreground_quality,
                                  const DenseMatrix& ground_truth, Index height, Index width,
                                  bool keep_ssim_maps = false);

void write_roc_csv(const std::filesystem::path& file, const RocResult& roc);
void write_per_frame_csv(const std::filesystem::path& file, const MetricsReport& report);

}  // namespace wlrbg::metrics
