#include "lsi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lsi/rng.hpp"

namespace fs = std::filesystem;

namespace lsi {

RawImage tensor_to_raw(const Tensor& image) {
    if (image.shape().size() != 3) throw DimensionError("tensor_to_raw: expected [C,m,n]");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (c != 1 && c != 3) throw DimensionError("tensor_to_raw: 1 or 3 channels only");
    RawImage out;
    out.width = w;
    out.height = h;
    out.channels = c;
    out.pixels.resize(static_cast<std::size_t>(w) * h * c);
    const auto v = image.values();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double val = v[(static_cast<std::size_t>(ch) * h + y) * w + x];
                val = val < 0.0 ? 0.0 : (val > 1.0 ? 1.0 : val);
                out.pixels[(static_cast<std::size_t>(y) * w + x) * c + ch] =
                    static_cast<std::uint8_t>(std::lround(val * 255.0));
            }
    return out;
}

Tensor raw_to_tensor(const RawImage& image) {
    const int c = image.channels, h = image.height, w = image.width;
    std::vector<double> data(static_cast<std::size_t>(c) * h * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch)
                data[(static_cast<std::size_t>(ch) * h + y) * w + x] =
                    image.pixels[(static_cast<std::size_t>(y) * w + x) * c + ch] / 255.0;
    return Tensor::from_data({c, h, w}, std::move(data));
}

RawImage center_crop_square(const RawImage& image) {
    const int side = std::min(image.width, image.height);
    if (side == image.width && side == image.height) return image;
    const int x0 = (image.width - side) / 2;
    const int y0 = (image.height - side) / 2;
    RawImage out;
    out.width = side;
    out.height = side;
    out.channels = image.channels;
    out.pixels.resize(static_cast<std::size_t>(side) * side * image.channels);
    const std::size_t src_stride = static_cast<std::size_t>(image.width) * image.channels;
    const std::size_t dst_stride = static_cast<std::size_t>(side) * image.channels;
    for (int y = 0; y < side; ++y)
        std::copy_n(image.pixels.data() + (y0 + y) * src_stride + static_cast<std::size_t>(x0) * image.channels,
                    dst_stride, out.pixels.data() + y * dst_stride);
    return out;
}

Tensor resize_area(const Tensor& image, int out_h, int out_w) {
    if (image.shape().size() != 3) throw DimensionError("resize_area: expected [C,m,n]");
    const int c = image.dim(0), in_h = image.dim(1), in_w = image.dim(2);
    if (out_h < 1 || out_w < 1) throw DimensionError("resize_area: output size must be positive");
    if (in_h == out_h && in_w == out_w) return image.detach();
    const auto src = image.values();
    std::vector<double> dst(static_cast<std::size_t>(c) * out_h * out_w);
    const double sy = static_cast<double>(in_h) / out_h;
    const double sx = static_cast<double>(in_w) / out_w;
    for (int ch = 0; ch < c; ++ch) {
        const double* plane = src.data() + static_cast<std::size_t>(ch) * in_h * in_w;
        for (int oy = 0; oy < out_h; ++oy) {
            const double y0 = oy * sy, y1 = (oy + 1) * sy;
            for (int ox = 0; ox < out_w; ++ox) {
                const double x0 = ox * sx, x1 = (ox + 1) * sx;
                double acc = 0.0;
                for (int iy = static_cast<int>(y0); iy < in_h && iy < y1; ++iy) {
                    const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                    if (wy <= 0.0) continue;
                    for (int ix = static_cast<int>(x0); ix < in_w && ix < x1; ++ix) {
                        const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                        if (wx <= 0.0) continue;
                        acc += wy * wx * plane[static_cast<std::size_t>(iy) * in_w + ix];
                    }
                }
                dst[(static_cast<std::size_t>(ch) * out_h + oy) * out_w + ox] = acc / (sy * sx);
            }
        }
    }
    return Tensor::from_data({c, out_h, out_w}, std::move(dst));
}

Tensor to_grayscale(const Tensor& image) {
    if (image.shape().size() != 3) throw DimensionError("to_grayscale: expected [C,m,n]");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (c == 1) return image.detach();
    if (c != 3) throw DimensionError("to_grayscale: 1 or 3 channels only");
    const auto v = image.values();
    std::vector<double> data(static_cast<std::size_t>(h) * w);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane; ++i)
        data[i] = 0.299 * v[i] + 0.587 * v[plane + i] + 0.114 * v[2 * plane + i];
    return Tensor::from_data({1, h, w}, std::move(data));
}

std::vector<int> Dataset::indices(Split s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(static_cast<int>(i));
    return out;
}

namespace {
const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
    }
}
} // namespace

Dataset load_dataset(const std::string& dir, int m, int n, int channels, std::uint64_t seed, int min_images) {
    if (channels != 1 && channels != 3) throw ConfigError("dataset channels must be 1 or 3");
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pgm" || ext == ".PNG" || ext == ".PGM") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());

    Dataset ds;
    ds.channels = channels;
    ds.height = m;
    ds.width = n;
    for (const auto& path : files) {
        RawImage raw;
        try {
            raw = read_image_file(path);
        } catch (const IoError& e) {
            std::fprintf(stderr, "warning: skipping %s (%s)\n", path.c_str(), e.what());
            continue;
        }
        Tensor img = raw_to_tensor(center_crop_square(raw));
        if (channels == 1) img = to_grayscale(img);
        else if (img.dim(0) == 1) {
            // replicate gray to RGB
            auto v = img.values();
            std::vector<double> rgb;
            rgb.reserve(v.size() * 3);
            for (int rep = 0; rep < 3; ++rep) rgb.insert(rgb.end(), v.begin(), v.end());
            img = Tensor::from_data({3, img.dim(1), img.dim(2)}, std::move(rgb));
        }
        img = resize_area(img, m, n);
        ds.paths.push_back(path);
        ds.ids.push_back(fs::path(path).stem().string());
        ds.images.push_back(std::move(img));
    }
    if (static_cast<int>(ds.images.size()) < min_images)
        throw IoError("found only " + std::to_string(ds.images.size()) + " usable images, need " +
                      std::to_string(min_images));

    const std::size_t count = ds.images.size();
    std::vector<int> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = static_cast<int>(i);
    Rng rng(seed);
    rng.shuffle(order);
    const std::size_t n_train = count * 90 / 100;
    const std::size_t n_val = count * 5 / 100;
    ds.split.assign(count, Split::test);
    for (std::size_t i = 0; i < count; ++i) {
        const Split s = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
        ds.split[static_cast<std::size_t>(order[i])] = s;
    }

    std::ofstream manifest(fs::path(dir) / "manifest.tsv");
    if (!manifest) throw IoError("cannot write manifest in " + dir);
    for (std::size_t i = 0; i < count; ++i)
        manifest << ds.ids[i] << '\t' << ds.paths[i] << '\t' << split_name(ds.split[i]) << '\n';
    return ds;
}

std::map<std::string, std::string> read_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest " + manifest_path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw IoError("malformed manifest line: " + line);
        out[line.substr(0, t1)] = line.substr(t2 + 1);
    }
    return out;
}

std::map<std::string, int> read_labels(const std::string& dir) {
    std::map<std::string, int> out;
    std::ifstream in(fs::path(dir) / "labels.tsv");
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw IoError("malformed labels line: " + line);
        out[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
    }
    return out;
}

Tensor stack_images(const std::vector<Tensor>& images, const std::vector<int>& idx) {
    if (idx.empty()) throw UsageError("stack_images: empty selection");
    const auto& shape = images[static_cast<std::size_t>(idx[0])].shape();
    int per = 1;
    for (int d : shape) per *= d;
    std::vector<double> data(static_cast<std::size_t>(idx.size()) * per);
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto& t = images[static_cast<std::size_t>(idx[b])];
        if (t.shape() != shape) throw DimensionError("stack_images: inconsistent image shapes");
        const auto v = t.values();
        std::copy(v.begin(), v.end(), data.begin() + static_cast<std::ptrdiff_t>(b * per));
    }
    Shape out_shape{static_cast<int>(idx.size())};
    for (int d : shape) out_shape.push_back(d);
    return Tensor::from_data(std::move(out_shape), std::move(data));
}

namespace {

/// Scanline rasterizer for filled ellipses on a supersampled canvas.
void fill_ellipse(std::vector<double>& canvas, int size, double cx, double cy, double rx, double ry, double shade) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + ry)));
    for (int y = y0; y <= y1; ++y) {
        const double dy = (y + 0.5 - cy) / ry;
        const double span = 1.0 - dy * dy;
        if (span <= 0.0) continue;
        const double half = rx * std::sqrt(span);
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - half)));
        const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + half)));
        for (int x = x0; x <= x1; ++x) {
            const double dx = (x + 0.5 - cx) / rx;
            if (dx * dx + dy * dy <= 1.0) canvas[static_cast<std::size_t>(y) * size + x] = shade;
        }
    }
}

} // namespace

void make_synthetic_faces(const std::string& dir, int count, int size, std::uint64_t seed) {
    if (count < 1 || size < 8) throw ConfigError("synthetic dataset needs count >= 1 and size >= 8");
    fs::create_directories(dir);
    std::ofstream labels(fs::path(dir) / "labels.tsv");
    if (!labels) throw IoError("cannot write labels in " + dir);

    const int super = 4;
    const int big = size * super;
    std::vector<double> canvas(static_cast<std::size_t>(big) * big);
    char name[32];
    for (int i = 0; i < count; ++i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        const double bg = rng.uniform(0.75, 0.95);
        std::fill(canvas.begin(), canvas.end(), bg);

        const double cx = big * rng.uniform(0.44, 0.56);
        const double cy = big * rng.uniform(0.46, 0.58);
        const double rx = big * rng.uniform(0.26, 0.34);
        const double ry = big * rng.uniform(0.32, 0.42);
        const double skin = rng.uniform(0.45, 0.65);
        fill_ellipse(canvas, big, cx, cy, rx, ry, skin);

        const bool cap = rng.uniform() < 0.5;
        if (cap) {
            const double cap_shade = rng.uniform(0.05, 0.2);
            fill_ellipse(canvas, big, cx, cy - 0.72 * ry, rx * rng.uniform(0.85, 1.05), ry * rng.uniform(0.38, 0.5),
                         cap_shade);
        }

        const double eye_dx = rx * rng.uniform(0.38, 0.5);
        const double eye_y = cy - 0.18 * ry + ry * rng.uniform(-0.04, 0.04);
        const double eye_r = rx * rng.uniform(0.1, 0.16);
        const double eye_shade = rng.uniform(0.05, 0.25);
        fill_ellipse(canvas, big, cx - eye_dx, eye_y, eye_r, eye_r * rng.uniform(0.7, 1.1), eye_shade);
        fill_ellipse(canvas, big, cx + eye_dx, eye_y, eye_r, eye_r * rng.uniform(0.7, 1.1), eye_shade);

        const double mouth_y = cy + 0.45 * ry + ry * rng.uniform(-0.05, 0.05);
        fill_ellipse(canvas, big, cx + rx * rng.uniform(-0.08, 0.08), mouth_y, rx * rng.uniform(0.28, 0.45),
                     ry * rng.uniform(0.05, 0.1), rng.uniform(0.1, 0.35));

        auto tensor = resize_area(Tensor::from_data({1, big, big}, canvas), size, size);
        std::snprintf(name, sizeof(name), "face_%05d", i);
        write_png((fs::path(dir) / (std::string(name) + ".png")).string(), tensor_to_raw(tensor));
        labels << name << '\t' << (cap ? 1 : 0) << '\n';
    }
}

} // namespace lsi
