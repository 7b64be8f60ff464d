#include "wlrbg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "wlrbg/errors.hpp"

namespace wlrbg::synth {

namespace {

void validate(const SynthSpec& spec) {
    if (spec.height <= 0 || spec.width <= 0 || spec.n_frames <= 0) {
        throw ConfigError("synth: geometry and frame count must be positive");
    }
    if (spec.sprite_size < 1) throw ConfigError("synth: sprite_size must be >= 1");
    if (spec.sprite_size > spec.height || spec.sprite_size > spec.width) {
        throw ConfigError("synth: sprite larger than frame");
    }
    if (spec.noise_sigma < 0) throw ConfigError("synth: noise_sigma must be >= 0");

    std::vector<FrameRange> ranges = spec.empty_ranges;
    if (spec.static_range.first <= spec.static_range.second) {
        ranges.push_back(spec.static_range);
    }
    for (const auto& [lo, hi] : ranges) {
        if (lo < 1 || hi > spec.n_frames || lo > hi) {
            throw ConfigError("synth: frame range outside [1, n_frames]");
        }
    }
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i) {
        if (ranges[i].first <= ranges[i - 1].second) {
            throw ConfigError("synth: frame ranges must be pairwise disjoint");
        }
    }
}

bool in_range(Index frame, const FrameRange& r) {
    return frame >= r.first && frame <= r.second;
}

bool is_empty_frame(const SynthSpec& spec, Index frame) {
    return std::any_of(spec.empty_ranges.begin(), spec.empty_ranges.end(),
                       [&](const FrameRange& r) { return in_range(frame, r); });
}

// Raster sweep over all valid top-left positions, wrapping around; the
// coprime-ish strides spread visits over the frame.
std::pair<Index, Index> sprite_position(const SynthSpec& spec, Index frame) {
    Index t = frame - 1;
    if (spec.static_range.first <= spec.static_range.second &&
        in_range(frame, spec.static_range)) {
        t = spec.static_range.first - 1;
    }
    const Index nx = spec.width - spec.sprite_size + 1;
    const Index ny = spec.height - spec.sprite_size + 1;
    return {(3 * t) % ny, (7 * t) % nx};
}

double sprite_value(const SynthSpec& spec, Index u, Index v) {
    const Index s = spec.sprite_size;
    if (s == 1) return 255.0;
    // Intensity ramp across the sprite; parts of it blend with the
    // background so per-frame contrast varies along the path.
    const double frac = static_cast<double>(u * s + v) / static_cast<double>(s * s - 1);
    return 40.0 + 215.0 * frac;
}

}  // namespace

DenseMatrix background_image(const SynthSpec& spec) {
    DenseMatrix bg(spec.height, spec.width);
    constexpr double tau = 2.0 * std::numbers::pi;
    for (Index c = 0; c < spec.width; ++c) {
        for (Index r = 0; r < spec.height; ++r) {
            bg(r, c) = 110.0 + 70.0 * std::sin(tau * static_cast<double>(c) / spec.width) *
                                   std::sin(tau * static_cast<double>(r) / spec.height);
        }
    }
    return bg;
}

io::Dataset generate(const SynthSpec& spec) {
    validate(spec);
    const DenseMatrix bg = background_image(spec);
    const Index m = spec.height * spec.width;

    io::Dataset ds;
    ds.height = spec.height;
    ds.width = spec.width;
    ds.frames = DenseMatrix(m, spec.n_frames);
    DenseMatrix gt(m, spec.n_frames);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);

    for (Index frame = 1; frame <= spec.n_frames; ++frame) {
        DenseMatrix img = bg;
        if (spec.illumination != 0.0 && spec.n_frames > 1) {
            const double factor = 1.0 + spec.illumination * static_cast<double>(frame - 1) /
                                            static_cast<double>(spec.n_frames - 1);
            for (Index i = 0; i < img.size(); ++i) img.data()[i] *= factor;
        }
        DenseMatrix mask(spec.height, spec.width);
        if (!is_empty_frame(spec, frame)) {
            const auto [top, left] = sprite_position(spec, frame);
            for (Index u = 0; u < spec.sprite_size; ++u) {
                for (Index v = 0; v < spec.sprite_size; ++v) {
                    img(top + u, left + v) = sprite_value(spec, u, v);
                    mask(top + u, left + v) = 255.0;
                }
            }
        }
        if (spec.noise_sigma > 0) {
            for (Index i = 0; i < img.size(); ++i) {
                img.data()[i] = std::clamp(img.data()[i] + noise(rng), 0.0, 255.0);
            }
        }
        ds.frames.set_col(frame - 1, io::vectorize(img).col_span(0));
        gt.set_col(frame - 1, io::vectorize(mask).col_span(0));
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06lld", static_cast<long long>(frame));
        ds.names.emplace_back(name);
    }
    ds.ground_truth = std::move(gt);
    return ds;
}

}  // namespace wlrbg::synth
