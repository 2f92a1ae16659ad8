#pragma once

#include <cstdint>
#include <vector>

#include "lsi/tensor.hpp"

namespace lsi {

/// Bank of binary measurement masks. Each row of `logits`, binarized at
/// `threshold`, is one mask of m*n pixels; measuring an image takes one dot
/// product per row. Logits stay inside [0,1] (enforced by the optimizer's
/// post-step projection).
struct OpticalEncoder {
    Tensor logits; // [d, m*n], trainable
    int d = 0;
    int m = 0;
    int n = 0;
    double threshold = 0.5;

    int pixel_count() const { return m * n; }
};

/// Per-mask target one-counts drawn from the occupancy ramp.
struct EnergyTargets {
    std::vector<int> eps;          // absolute pixel counts, length d
    std::vector<double> fractions; // the underlying percentages, same order
};

/// Uniform logits, rank-shifted per row so binarization yields exactly
/// floor(mn/2) ones per mask. Deterministic in `seed`.
OpticalEncoder init_balanced(int d, int m, int n, std::uint64_t seed);

/// Binarized mask matrix [d, mn] with straight-through gradients.
Tensor binarized_masks(const OpticalEncoder& enc);

/// Measurement vector [d] for one image [C,m,n]: channels are summed, then
/// each mask row takes a dot product with the flattened result.
Tensor measure(const OpticalEncoder& enc, const Tensor& image);

/// Batched variant: flat_images [B, mn] (channels already summed) -> [B, d].
Tensor measure_flat(const OpticalEncoder& enc, const Tensor& flat_images);

/// Channel sum [C,m,n] -> [m,n] (identity for C=1).
Tensor sum_channels(const Tensor& image);

/// Occupancy ramp 10%..90% in 1% steps, cycled to length d, in ramp order.
std::vector<int> ramp_counts(int d, int mn);

/// Ramp targets in a seeded shuffle order.
EnergyTargets energy_targets(int d, int mn, std::uint64_t seed);

/// Mean absolute gap between per-mask one-counts and their targets, computed
/// on the binarized matrix so gradients reach the logits. `normalized`
/// divides by mn, making the loss a fraction instead of a pixel count.
Tensor energy_loss(const OpticalEncoder& enc, const EnergyTargets& targets, bool normalized = false);

/// One-count per mask row.
std::vector<int> occupancy_histogram(const OpticalEncoder& enc);

} // namespace lsi
