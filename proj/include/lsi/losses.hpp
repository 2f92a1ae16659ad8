#pragma once

#include "lsi/tensor.hpp"

namespace lsi {

/// Weights of the individual loss terms. The identity slot exists for
/// config compatibility but has no backing network and is never active.
struct LossWeights {
    double lat = 1.0;
    double id = 0.5; // inert slot
    double pips = 0.8;
    double l2 = 1.0;
    double energy = 3.0;
};

/// Mean absolute difference over all latent entries.
Tensor latent_loss(const Tensor& z_pred, const Tensor& z_gt);

struct PixelLosses {
    Tensor l2;         // mean squared error
    Tensor perceptual; // multi-scale L1 over downsampled pyramids
};

/// Pixel-space terms for [B,C,H,W] image pairs. The perceptual part is the
/// mean over scales {1, 1/2, 1/4} of L1 after average pooling.
PixelLosses pixel_losses(const Tensor& recon, const Tensor& target);

} // namespace lsi
