#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wlrbg/frame_io.hpp"
#include "wlrbg/matrix.hpp"

namespace wlrbg::synth {

// Frame intervals are 1-based and inclusive, mirroring how test sequences
// are usually described.
using FrameRange = std::pair<Index, Index>;

struct SynthSpec {
    Index height = 64;
    Index width = 80;
    Index n_frames = 120;
    Index sprite_size = 12;
    std::vector<FrameRange> empty_ranges = {{2, 5}, {90, 100}};
    FrameRange static_range = {110, 120};
    double noise_sigma = 0.0;
    double illumination = 0.0;  // background scale ramps from 1 to 1+illumination
    std::uint64_t seed = 0;
};

// Deterministic scene: a fixed smooth background, an intensity-ramp sprite
// translating on a raster path (absent in empty ranges, frozen in the static
// range), exact ground-truth masks, optional Gaussian noise after
// compositing.
io::Dataset generate(const SynthSpec& spec);

// The noise-free background image the generator composites onto.
DenseMatrix background_image(const SynthSpec& spec);

}  // namespace wlrbg::synth
