#include "lsi/losses.hpp"

namespace lsi {

Tensor latent_loss(const Tensor& z_pred, const Tensor& z_gt) {
    if (z_pred.shape() != z_gt.shape()) throw DimensionError("latent_loss: shape mismatch");
    return mean(abs(z_pred - z_gt));
}

PixelLosses pixel_losses(const Tensor& recon, const Tensor& target) {
    if (recon.shape() != target.shape()) throw DimensionError("pixel_losses: shape mismatch");
    if (recon.shape().size() != 4) throw DimensionError("pixel_losses: expected [B,C,H,W]");
    PixelLosses out;
    auto diff = recon - target;
    out.l2 = mean(diff * diff);
    auto scale0 = mean(abs(diff));
    auto r2 = avg_pool2d(recon, 2), t2 = avg_pool2d(target, 2);
    auto scale1 = mean(abs(r2 - t2));
    auto scale2 = mean(abs(avg_pool2d(r2, 2) - avg_pool2d(t2, 2)));
    out.perceptual = (scale0 + scale1 + scale2) / 3.0;
    return out;
}

} // namespace lsi
