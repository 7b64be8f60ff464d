#include "wlrbg/frame_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "wlrbg/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wlrbg::io {

namespace {

[[noreturn]] void fail(const fs::path& file, const std::string& what) {
    throw DataError(file.string() + ": " + what);
}

// Skips whitespace and '#' comment lines between PNM header tokens.
int next_header_token(std::istream& in) {
    int value = 0;
    char ch;
    while (in.get(ch)) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        if (ch == '#') {
            while (in.get(ch) && ch != '\n') {
            }
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(ch))) return -1;
        value = ch - '0';
        while (in.get(ch) && std::isdigit(static_cast<unsigned char>(ch))) {
            value = value * 10 + (ch - '0');
        }
        return value;
    }
    return -1;
}

}  // namespace

DenseMatrix read_image(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(file, "cannot open");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    const bool pgm = magic[0] == 'P' && magic[1] == '5';
    const bool ppm = magic[0] == 'P' && magic[1] == '6';
    if (!pgm && !ppm) fail(file, "unsupported format (need binary PGM P5 or PPM P6)");

    const int width = next_header_token(in);
    const int height = next_header_token(in);
    const int maxval = next_header_token(in);
    if (width <= 0 || height <= 0) fail(file, "invalid dimensions");
    if (maxval <= 0 || maxval > 255) fail(file, "unsupported maxval (8-bit only)");

    const std::size_t channels = ppm ? 3 : 1;
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(file, "truncated pixel data");

    DenseMatrix img(height, width);
    for (Index r = 0; r < height; ++r) {
        for (Index c = 0; c < width; ++c) {
            const std::size_t at = (static_cast<std::size_t>(r) * width + c) * channels;
            if (pgm) {
                img(r, c) = static_cast<double>(raw[at]);
            } else {
                // ITU-R BT.601 luma.
                img(r, c) = 0.299 * raw[at] + 0.587 * raw[at + 1] + 0.114 * raw[at + 2];
            }
        }
    }
    return img;
}

void write_pgm(const DenseMatrix& image, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) fail(file, "cannot open for writing");
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    std::vector<unsigned char> raw(static_cast<std::size_t>(image.size()));
    std::size_t at = 0;
    for (Index r = 0; r < image.rows(); ++r) {
        for (Index c = 0; c < image.cols(); ++c) {
            const double v = std::round(image(r, c));
            raw[at++] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) fail(file, "write failed");
}

DenseMatrix resize_bilinear(const DenseMatrix& image, Index out_h, Index out_w) {
    if (out_h <= 0 || out_w <= 0) throw ConfigError("resize: target size must be positive");
    if (image.rows() == out_h && image.cols() == out_w) return image;
    DenseMatrix out(out_h, out_w);
    const double sy = static_cast<double>(image.rows()) / static_cast<double>(out_h);
    const double sx = static_cast<double>(image.cols()) / static_cast<double>(out_w);
    for (Index r = 0; r < out_h; ++r) {
        // Half-pixel centers keep the mapping symmetric under up/downscale.
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, image.rows() - 1.0);
        const Index y0 = static_cast<Index>(fy);
        const Index y1 = std::min(y0 + 1, image.rows() - 1);
        const double wy = fy - static_cast<double>(y0);
        for (Index c = 0; c < out_w; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, image.cols() - 1.0);
            const Index x0 = static_cast<Index>(fx);
            const Index x1 = std::min(x0 + 1, image.cols() - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = (1.0 - wx) * image(y0, x0) + wx * image(y0, x1);
            const double bot = (1.0 - wx) * image(y1, x0) + wx * image(y1, x1);
            out(r, c) = (1.0 - wy) * top + wy * bot;
        }
    }
    return out;
}

DenseMatrix resize_nearest(const DenseMatrix& image, Index out_h, Index out_w) {
    if (out_h <= 0 || out_w <= 0) throw ConfigError("resize: target size must be positive");
    if (image.rows() == out_h && image.cols() == out_w) return image;
    DenseMatrix out(out_h, out_w);
    const double sy = static_cast<double>(image.rows()) / static_cast<double>(out_h);
    const double sx = static_cast<double>(image.cols()) / static_cast<double>(out_w);
    for (Index r = 0; r < out_h; ++r) {
        const Index y = std::min(static_cast<Index>((r + 0.5) * sy), image.rows() - 1);
        for (Index c = 0; c < out_w; ++c) {
            const Index x = std::min(static_cast<Index>((c + 0.5) * sx), image.cols() - 1);
            out(r, c) = image(y, x);
        }
    }
    return out;
}

DenseMatrix vectorize(const DenseMatrix& frame) {
    DenseMatrix out(frame.size(), 1);
    std::copy(frame.data(), frame.data() + frame.size(), out.data());
    return out;
}

DenseMatrix devectorize(const DenseMatrix& column, Index height, Index width) {
    if (column.cols() != 1 || column.rows() != height * width) {
        throw ConfigError("devectorize: column length must equal height*width");
    }
    DenseMatrix out(height, width);
    std::copy(column.data(), column.data() + column.size(), out.data());
    return out;
}

std::vector<fs::path> glob_files(const fs::path& base_dir, const std::string& pattern) {
    const auto matches = [](const std::string& name, const std::string& pat) {
        std::size_t n = 0, p = 0, star = std::string::npos, redo = 0;
        while (n < name.size()) {
            if (p < pat.size() && (pat[p] == '?' || pat[p] == name[n])) {
                ++n, ++p;
            } else if (p < pat.size() && pat[p] == '*') {
                star = p++;
                redo = n;
            } else if (star != std::string::npos) {
                p = star + 1;
                n = ++redo;
            } else {
                return false;
            }
        }
        while (p < pat.size() && pat[p] == '*') ++p;
        return p == pat.size();
    };

    fs::path dir = base_dir;
    std::string file_pat = pattern;
    const fs::path pat_path(pattern);
    if (pat_path.has_parent_path()) {
        dir = base_dir / pat_path.parent_path();
        file_pat = pat_path.filename().string();
    }
    if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && matches(entry.path().filename().string(), file_pat)) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return out;
}

namespace {

Dataset load_from_files(const std::vector<fs::path>& frame_files,
                        const std::vector<fs::path>& gt_files, Index target_h, Index target_w) {
    if (frame_files.empty()) throw DataError("load_dataset: no frames found");
    if (!gt_files.empty() && gt_files.size() != frame_files.size()) {
        throw DataError("load_dataset: frame and mask counts differ (" +
                        std::to_string(frame_files.size()) + " vs " +
                        std::to_string(gt_files.size()) + ")");
    }

    Dataset ds;
    ds.height = target_h;
    ds.width = target_w;
    ds.frames = DenseMatrix(target_h * target_w, static_cast<Index>(frame_files.size()));
    Index src_h = -1, src_w = -1;
    for (std::size_t i = 0; i < frame_files.size(); ++i) {
        DenseMatrix img = read_image(frame_files[i]);
        if (src_h < 0) {
            src_h = img.rows();
            src_w = img.cols();
        } else if (img.rows() != src_h || img.cols() != src_w) {
            fail(frame_files[i], "geometry differs from first frame");
        }
        img = resize_bilinear(img, target_h, target_w);
        ds.frames.set_col(static_cast<Index>(i), vectorize(img).col_span(0));
        ds.names.push_back(frame_files[i].filename().string());
    }

    if (!gt_files.empty()) {
        DenseMatrix gt(target_h * target_w, static_cast<Index>(gt_files.size()));
        for (std::size_t i = 0; i < gt_files.size(); ++i) {
            DenseMatrix img = read_image(gt_files[i]);
            img = resize_nearest(img, target_h, target_w);
            for (Index p = 0; p < img.size(); ++p) {
                img.data()[p] = img.data()[p] > 127.5 ? 255.0 : 0.0;
            }
            gt.set_col(static_cast<Index>(i), vectorize(img).col_span(0));
        }
        ds.ground_truth = std::move(gt);
    }
    return ds;
}

}  // namespace

Dataset load_dataset(const fs::path& frames_dir, const std::optional<fs::path>& gt_dir,
                     Index target_h, Index target_w) {
    if (target_h <= 0 || target_w <= 0) {
        throw ConfigError("load_dataset: target geometry must be positive");
    }
    const auto frame_files = glob_files(frames_dir, "*");
    std::vector<fs::path> gt_files;
    if (gt_dir) gt_files = glob_files(*gt_dir, "*");
    return load_from_files(frame_files, gt_files, target_h, target_w);
}

std::vector<fs::path> save_frames(const DenseMatrix& matrix, Index height, Index width,
                                  const fs::path& out_dir, const std::string& prefix) {
    if (matrix.rows() != height * width) {
        throw ConfigError("save_frames: rows must equal height*width");
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw DataError(out_dir.string() + ": cannot create");
    std::vector<fs::path> files;
    for (Index j = 0; j < matrix.cols(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "%06lld.pgm", static_cast<long long>(j + 1));
        const fs::path file = out_dir / (prefix + std::string(name));
        write_pgm(devectorize(matrix.col(j), height, width), file);
        files.push_back(file);
    }
    return files;
}

Dataset load_manifest(const fs::path& manifest_file) {
    std::ifstream in(manifest_file);
    if (!in) fail(manifest_file, "cannot open manifest");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail(manifest_file, std::string("invalid JSON: ") + e.what());
    }
    for (const char* key : {"height", "width", "n_frames", "frame_glob"}) {
        if (!doc.contains(key)) fail(manifest_file, std::string("missing key '") + key + "'");
    }
    const Index h = doc["height"].get<Index>();
    const Index w = doc["width"].get<Index>();
    const Index n = doc["n_frames"].get<Index>();
    const fs::path base = manifest_file.parent_path();
    const auto frame_files = glob_files(base, doc["frame_glob"].get<std::string>());
    std::vector<fs::path> gt_files;
    if (doc.contains("gt_glob") && !doc["gt_glob"].is_null()) {
        gt_files = glob_files(base, doc["gt_glob"].get<std::string>());
    }
    Dataset ds = load_from_files(frame_files, gt_files, h, w);
    if (ds.n_frames() != n) {
        fail(manifest_file, "n_frames=" + std::to_string(n) + " but found " +
                                std::to_string(ds.n_frames()) + " frames");
    }
    return ds;
}

void write_manifest(const fs::path& manifest_file, Index height, Index width, Index n_frames,
                    const std::string& frame_glob, const std::optional<std::string>& gt_glob) {
    json doc;
    doc["height"] = height;
    doc["width"] = width;
    doc["n_frames"] = n_frames;
    doc["frame_glob"] = frame_glob;
    if (gt_glob) doc["gt_glob"] = *gt_glob;
    std::ofstream out(manifest_file);
    if (!out) fail(manifest_file, "cannot open for writing");
    out << doc.dump(2) << "\n";
}

namespace {
constexpr char kMatrixMagic[8] = {'W', 'L', 'R', 'B', 'G', 'F', '6', '4'};
}

void save_matrix(const DenseMatrix& m, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) fail(file, "cannot open for writing");
    out.write(kMatrixMagic, sizeof(kMatrixMagic));
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!out) fail(file, "write failed");
}

DenseMatrix load_matrix(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(file, "cannot open");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0) {
        fail(file, "not a matrix file");
    }
    std::int64_t dims[2];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (in.gcount() != sizeof(dims) || dims[0] < 0 || dims[1] < 0) fail(file, "bad header");
    DenseMatrix m(dims[0], dims[1]);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(m.size() * sizeof(double))) {
        fail(file, "truncated matrix data");
    }
    return m;
}

}  // namespace wlrbg::io
