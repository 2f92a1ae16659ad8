#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lsi/tensor.hpp"

namespace lsi {

/// 8-bit interleaved raster, channels 1 (gray) or 3 (RGB).
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels; // row-major, interleaved
};

RawImage read_image_file(const std::string& path); // PNG or PGM by magic bytes
void write_png(const std::string& path, const RawImage& image);
void write_pgm(const std::string& path, const RawImage& image);

/// [C,m,n] tensor in [0,1] -> 8-bit raster (values clamped, rounded).
RawImage tensor_to_raw(const Tensor& image);
/// 8-bit raster -> [C,m,n] tensor in [0,1].
Tensor raw_to_tensor(const RawImage& image);

/// Center-crop to square, then box-filter (area-average) resample.
RawImage center_crop_square(const RawImage& image);
Tensor resize_area(const Tensor& image, int out_h, int out_w);

/// Luminance conversion [3,m,n] -> [1,m,n]; identity for single-channel.
Tensor to_grayscale(const Tensor& image);

enum class Split { train, val, test };

struct Dataset {
    std::vector<std::string> ids;
    std::vector<std::string> paths;
    std::vector<Tensor> images; // all [C,m,n], values in [0,1]
    std::vector<Split> split;
    int channels = 0;
    int height = 0;
    int width = 0;

    std::vector<int> indices(Split s) const;
};

/// Loads every decodable PNG/PGM under `dir` (sorted by filename), crops,
/// resizes, splits 90/5/5 with a seeded shuffle and writes `manifest.tsv`
/// into `dir`. Undecodable files are skipped with a warning.
Dataset load_dataset(const std::string& dir, int m, int n, int channels, std::uint64_t seed,
                     int min_images = 500);

/// Re-applies the split recorded in a manifest written by load_dataset.
std::map<std::string, std::string> read_manifest(const std::string& manifest_path);

/// Optional per-image integer labels from `labels.tsv` (id <TAB> label).
std::map<std::string, int> read_labels(const std::string& dir);

/// Stacks dataset images [C,m,n] selected by `idx` into one [B,C,m,n] batch.
Tensor stack_images(const std::vector<Tensor>& images, const std::vector<int>& idx);

/// Writes `count` synthetic face-like PNGs plus labels.tsv into `dir`.
/// Label 1 marks images with a hair cap. Deterministic in `seed`.
void make_synthetic_faces(const std::string& dir, int count, int size, std::uint64_t seed);

} // namespace lsi
