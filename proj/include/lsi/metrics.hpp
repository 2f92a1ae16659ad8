#pragma once

#include <vector>

#include "lsi/tensor.hpp"

namespace lsi {

/// Peak signal-to-noise ratio in dB for [0,1] images; +infinity when the
/// images are identical.
double psnr_db(const Tensor& a, const Tensor& b);

double mse(const Tensor& a, const Tensor& b);
double mean_abs_diff(const Tensor& a, const Tensor& b);

/// Leave-one-out 1-nearest-neighbor accuracy under L1 distance. Ties go to
/// the lower index, keeping the result deterministic.
double loo_1nn_accuracy(const std::vector<std::vector<double>>& features, const std::vector<int>& labels);

struct ReconMetrics {
    double psnr_db = 0;
    double latent_l1 = 0;
    double pixel_l1 = 0;
};

ReconMetrics reconstruction_metrics(const Tensor& recon, const Tensor& target, const Tensor& z_pred,
                                    const Tensor& z_gt);

/// Leave-one-out 1-NN accuracy computed side by side in latent space and raw
/// pixel space, for the semantic-neighborhood comparison.
struct RetrievalScores {
    double latent_accuracy = 0;
    double pixel_accuracy = 0;
};

RetrievalScores retrieval_proxy(const std::vector<std::vector<double>>& latents,
                                const std::vector<std::vector<double>>& pixels,
                                const std::vector<int>& labels);

} // namespace lsi
