#include "wlrbg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "wlrbg/errors.hpp"
#include "wlrbg/frame_io.hpp"
#include "wlrbg/numerics.hpp"

namespace wlrbg::metrics {

namespace {

constexpr double kMaxPixel = 255.0;
// Stabilizers (K1*255)^2 and (K2*255)^2 with the usual K1=0.01, K2=0.03.
constexpr double kSsimC1 = 6.5025;
constexpr double kSsimC2 = 58.5225;

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> gaussian_kernel_1d(Index side, double sigma) {
    std::vector<double> g(static_cast<std::size_t>(side));
    const Index c = side / 2;
    double sum = 0.0;
    for (Index i = 0; i < side; ++i) {
        const double d = static_cast<double>(i - c);
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[static_cast<std::size_t>(i)];
    }
    for (auto& v : g) v /= sum;
    return g;
}

// Valid-region separable convolution with a normalized 1-D kernel applied
// along both axes.
DenseMatrix conv2_valid(const DenseMatrix& img, const std::vector<double>& g) {
    const Index side = static_cast<Index>(g.size());
    const Index h = img.rows(), w = img.cols();
    DenseMatrix tmp(h, w - side + 1);
    for (Index c = 0; c < tmp.cols(); ++c) {
        for (Index r = 0; r < h; ++r) {
            double acc = 0.0;
            for (Index v = 0; v < side; ++v) acc += g[static_cast<std::size_t>(v)] * img(r, c + v);
            tmp(r, c) = acc;
        }
    }
    DenseMatrix out(h - side + 1, w - side + 1);
    for (Index c = 0; c < out.cols(); ++c) {
        for (Index r = 0; r < out.rows(); ++r) {
            double acc = 0.0;
            for (Index u = 0; u < side; ++u) acc += g[static_cast<std::size_t>(u)] * tmp(r + u, c);
            out(r, c) = acc;
        }
    }
    return out;
}

}  // namespace

RocResult roc_sweep(const DenseMatrix& foreground, const DenseMatrix& ground_truth,
                    int n_thresholds) {
    if (foreground.rows() != ground_truth.rows() || foreground.cols() != ground_truth.cols()) {
        throw ConfigError("roc_sweep: foreground and ground truth shapes differ");
    }
    if (n_thresholds < 2) throw ConfigError("roc_sweep: need at least 2 thresholds");

    long long positives = 0;
    for (Index i = 0; i < ground_truth.size(); ++i) {
        if (ground_truth.data()[i] != 0.0) ++positives;
    }
    const long long negatives = static_cast<long long>(ground_truth.size()) - positives;
    if (positives == 0) {
        throw DataError("roc_sweep: ROC undefined, ground truth has no positive pixels");
    }

    // Sort |F| descending, positives flagged, so each threshold is a prefix.
    std::vector<std::pair<double, bool>> scored(static_cast<std::size_t>(foreground.size()));
    for (Index i = 0; i < foreground.size(); ++i) {
        scored[static_cast<std::size_t>(i)] = {std::abs(foreground.data()[i]),
                                               ground_truth.data()[i] != 0.0};
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<long long> tp_prefix(scored.size() + 1, 0);
    for (std::size_t i = 0; i < scored.size(); ++i) {
        tp_prefix[i + 1] = tp_prefix[i] + (scored[i].second ? 1 : 0);
    }

    RocResult result;
    result.points.reserve(static_cast<std::size_t>(n_thresholds));
    for (int t = 0; t < n_thresholds; ++t) {
        const double threshold = kMaxPixel * static_cast<double>(t) / (n_thresholds - 1);
        // Predicted positive = |F| > threshold = count of sorted entries above it.
        const auto above = std::lower_bound(
            scored.begin(), scored.end(), threshold,
            [](const auto& entry, double th) { return entry.first > th; });
        const long long predicted = static_cast<long long>(above - scored.begin());
        RocPoint p;
        p.threshold = threshold;
        p.tp = tp_prefix[static_cast<std::size_t>(predicted)];
        p.fp = predicted - p.tp;
        p.fn = positives - p.tp;
        p.tn = negatives - p.fp;
        p.tpr = static_cast<double>(p.tp) / static_cast<double>(positives);
        p.fpr = negatives > 0 ? static_cast<double>(p.fp) / static_cast<double>(negatives) : 0.0;
        result.points.push_back(p);
    }

    std::vector<std::pair<double, double>> curve;
    curve.reserve(result.points.size() + 2);
    curve.emplace_back(0.0, 0.0);
    for (const auto& p : result.points) curve.emplace_back(p.fpr, p.tpr);
    curve.emplace_back(1.0, 1.0);
    std::sort(curve.begin(), curve.end());
    double auc = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        auc += (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second) / 2.0;
    }
    result.auc = std::clamp(auc, 0.0, 1.0);
    return result;
}

double mse(std::span<const double> f, std::span<const double> g) {
    if (f.size() != g.size() || f.empty()) {
        throw ConfigError("mse: spans must be nonempty and of equal length");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = f[i] - g[i];
        acc += d * d;
    }
    return acc / static_cast<double>(f.size());
}

double psnr_from_mse(double mse_value) {
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(kMaxPixel * kMaxPixel / mse_value);
}

double psnr(std::span<const double> f, std::span<const double> g) {
    return psnr_from_mse(mse(f, g));
}

std::vector<double> per_frame_mse(const DenseMatrix& f, const DenseMatrix& g) {
    if (f.rows() != g.rows() || f.cols() != g.cols()) {
        throw ConfigError("per_frame_mse: shapes differ");
    }
    std::vector<double> out(static_cast<std::size_t>(f.cols()));
    for (Index j = 0; j < f.cols(); ++j) {
        out[static_cast<std::size_t>(j)] = mse(f.col_span(j), g.col_span(j));
    }
    return out;
}

std::vector<double> per_frame_psnr(const DenseMatrix& f, const DenseMatrix& g) {
    std::vector<double> out = per_frame_mse(f, g);
    for (auto& v : out) v = psnr_from_mse(v);
    return out;
}

DenseMatrix ssim_map(const DenseMatrix& x, const DenseMatrix& y, Index side, double sigma) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw ConfigError("ssim_map: frame shapes differ");
    }
    if (side <= 0 || side % 2 == 0) throw ConfigError("ssim_map: window side must be odd");
    if (x.rows() < side || x.cols() < side) {
        throw ConfigError("ssim_map: frame smaller than the window");
    }
    const auto g = gaussian_kernel_1d(side, sigma);

    DenseMatrix xx(x.rows(), x.cols()), yy(x.rows(), x.cols()), xy(x.rows(), x.cols());
    for (Index i = 0; i < x.size(); ++i) {
        xx.data()[i] = x.data()[i] * x.data()[i];
        yy.data()[i] = y.data()[i] * y.data()[i];
        xy.data()[i] = x.data()[i] * y.data()[i];
    }
    const DenseMatrix mu_x = conv2_valid(x, g);
    const DenseMatrix mu_y = conv2_valid(y, g);
    const DenseMatrix m_xx = conv2_valid(xx, g);
    const DenseMatrix m_yy = conv2_valid(yy, g);
    const DenseMatrix m_xy = conv2_valid(xy, g);

    DenseMatrix map(mu_x.rows(), mu_x.cols());
    for (Index i = 0; i < map.size(); ++i) {
        const double mx = mu_x.data()[i];
        const double my = mu_y.data()[i];
        const double var_x = m_xx.data()[i] - mx * mx;
        const double var_y = m_yy.data()[i] - my * my;
        const double cov = m_xy.data()[i] - mx * my;
        map.data()[i] = ((2.0 * mx * my + kSsimC1) * (2.0 * cov + kSsimC2)) /
                        ((mx * mx + my * my + kSsimC1) * (var_x + var_y + kSsimC2));
    }
    return map;
}

double mssim(const DenseMatrix& x, const DenseMatrix& y, Index side, double sigma) {
    const DenseMatrix map = ssim_map(x, y, side, sigma);
    double acc = 0.0;
    for (Index i = 0; i < map.size(); ++i) acc += map.data()[i];
    return acc / static_cast<double>(map.size());
}

std::vector<std::pair<long long, long long>> tp_fp_counts(const DenseMatrix& foreground,
                                                          const DenseMatrix& ground_truth,
                                                          double eps1) {
    if (foreground.rows() != ground_truth.rows() || foreground.cols() != ground_truth.cols()) {
        throw ConfigError("tp_fp_counts: shapes differ");
    }
    if (eps1 < 0) throw ConfigError("tp_fp_counts: eps1 must be nonnegative");
    std::vector<std::pair<long long, long long>> out(static_cast<std::size_t>(foreground.cols()));
    for (Index j = 0; j < foreground.cols(); ++j) {
        long long tp = 0, fp = 0;
        for (Index i = 0; i < foreground.rows(); ++i) {
            const bool predicted = std::abs(foreground(i, j)) > eps1;
            if (!predicted) continue;
            if (ground_truth(i, j) != 0.0) {
                ++tp;
            } else {
                ++fp;
            }
        }
        out[static_cast<std::size_t>(j)] = {tp, fp};
    }
    return out;
}

MetricsReport evaluate_foreground(const DenseMatrix& foreground_raw,
                                  const DenseMatrix& foreground_quality,
                                  const DenseMatrix& ground_truth, Index height, Index width,
                                  bool keep_ssim_maps) {
    if (height * width != foreground_raw.rows()) {
        throw ConfigError("evaluate_foreground: geometry does not match row count");
    }
    MetricsReport report;
    RocResult roc = roc_sweep(foreground_raw, ground_truth);
    report.roc = std::move(roc.points);
    report.auc = roc.auc;
    report.frame_mse = per_frame_mse(foreground_quality, ground_truth);
    report.frame_psnr = per_frame_psnr(foreground_quality, ground_truth);
    report.frame_mssim.resize(static_cast<std::size_t>(foreground_quality.cols()));
    for (Index j = 0; j < foreground_quality.cols(); ++j) {
        const DenseMatrix f = io::devectorize(foreground_quality.col(j), height, width);
        const DenseMatrix g = io::devectorize(ground_truth.col(j), height, width);
        if (keep_ssim_maps) {
            DenseMatrix map = ssim_map(f, g);
            double acc = 0.0;
            for (Index i = 0; i < map.size(); ++i) acc += map.data()[i];
            report.frame_mssim[static_cast<std::size_t>(j)] =
                acc / static_cast<double>(map.size());
            report.ssim_maps.push_back(std::move(map));
        } else {
            report.frame_mssim[static_cast<std::size_t>(j)] = mssim(f, g);
        }
    }
    return report;
}

void write_roc_csv(const std::filesystem::path& file, const RocResult& roc) {
    std::ofstream out(file);
    if (!out) throw DataError(file.string() + ": cannot open for writing");
    out << "threshold,tp,fp,tn,fn,tpr,fpr\n";
    for (const auto& p : roc.points) {
        out << format_double(p.threshold) << "," << p.tp << "," << p.fp << "," << p.tn << ","
            << p.fn << "," << format_double(p.tpr) << "," << format_double(p.fpr) << "\n";
    }
}

void write_per_frame_csv(const std::filesystem::path& file, const MetricsReport& report) {
    std::ofstream out(file);
    if (!out) throw DataError(file.string() + ": cannot open for writing");
    out << "frame,mse,psnr,mssim\n";
    for (std::size_t j = 0; j < report.frame_mse.size(); ++j) {
        out << j << "," << format_double(report.frame_mse[j]) << ","
            << format_double(report.frame_psnr[j]) << "," << format_double(report.frame_mssim[j])
            << "\n";
    }
}

}  // namespace wlrbg::metrics
