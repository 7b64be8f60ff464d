#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wlrbg/matrix.hpp"

namespace wlrbg::io {

// Ordered grayscale frame sequence with frames-as-columns storage plus the
// optional ground-truth masks (entries 0 or 255) in matching geometry.
struct Dataset {
    Index height = 0;
    Index width = 0;
    DenseMatrix frames;                      // (height*width) x n
    std::optional<DenseMatrix> ground_truth;
    std::vector<std::string> names;

    Index n_frames() const { return frames.cols(); }
    Index pixels() const { return height * width; }
};

// Binary PGM (P5, maxval <= 255) and binary PPM (P6, converted to BT.601
// luma). Pixel values come back as doubles in [0, 255].
DenseMatrix read_image(const std::filesystem::path& file);
void write_pgm(const DenseMatrix& image, const std::filesystem::path& file);

DenseMatrix resize_bilinear(const DenseMatrix& image, Index out_h, Index out_w);
DenseMatrix resize_nearest(const DenseMatrix& image, Index out_h, Index out_w);

// Column-major frame <-> column vector bijection: (row, col) <-> col*h + row.
DenseMatrix vectorize(const DenseMatrix& frame);
DenseMatrix devectorize(const DenseMatrix& column, Index height, Index width);

// Frames sorted lexicographically by filename, resized to target geometry
// (bilinear; masks use nearest-neighbor to stay binary).
Dataset load_dataset(const std::filesystem::path& frames_dir,
                     const std::optional<std::filesystem::path>& gt_dir, Index target_h,
                     Index target_w);

// One 8-bit grayscale frame per column, values rounded and clamped to [0, 255].
std::vector<std::filesystem::path> save_frames(const DenseMatrix& matrix, Index height,
                                               Index width,
                                               const std::filesystem::path& out_dir,
                                               const std::string& prefix = "frame_");

// Dataset manifest: JSON {height, width, n_frames, frame_glob, gt_glob?} with
// globs resolved relative to the manifest location.
Dataset load_manifest(const std::filesystem::path& manifest_file);
void write_manifest(const std::filesystem::path& manifest_file, Index height, Index width,
                    Index n_frames, const std::string& frame_glob,
                    const std::optional<std::string>& gt_glob);

// Raw little-endian double matrix with a small header; exact round trip.
void save_matrix(const DenseMatrix& m, const std::filesystem::path& file);
DenseMatrix load_matrix(const std::filesystem::path& file);

// Minimal glob: '*' and '?' wildcards inside the filename component.
std::vector<std::filesystem::path> glob_files(const std::filesystem::path& base_dir,
                                              const std::string& pattern);

}  // namespace wlrbg::io
