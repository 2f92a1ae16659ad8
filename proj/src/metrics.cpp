#include "lsi/metrics.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace lsi {

double mse(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw DimensionError("mse: shape mismatch");
    const auto av = a.values();
    const auto bv = b.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        acc += d * d;
    }
    return acc / static_cast<double>(av.size());
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw DimensionError("mean_abs_diff: shape mismatch");
    const auto av = a.values();
    const auto bv = b.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += std::fabs(av[i] - bv[i]);
    return acc / static_cast<double>(av.size());
}

double psnr_db(const Tensor& a, const Tensor& b) {
    const double e = mse(a, b);
    if (e == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / e);
}

double loo_1nn_accuracy(const std::vector<std::vector<double>>& features, const std::vector<int>& labels) {
    const std::size_t n = features.size();
    if (n != labels.size() || n < 2) throw UsageError("loo_1nn_accuracy: need matched features and labels, n >= 2");
    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2) throw UsageError("loo_1nn_accuracy: need at least 2 classes");
    const std::size_t dim = features[0].size();
    for (const auto& f : features)
        if (f.size() != dim) throw DimensionError("loo_1nn_accuracy: inconsistent feature widths");

    int hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double dist = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dist += std::fabs(features[i][k] - features[j][k]);
            if (dist < best) {
                best = dist;
                best_j = j;
            }
        }
        if (labels[best_j] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

ReconMetrics reconstruction_metrics(const Tensor& recon, const Tensor& target, const Tensor& z_pred,
                                    const Tensor& z_gt) {
    ReconMetrics out;
    out.psnr_db = psnr_db(recon, target);
    out.latent_l1 = mean_abs_diff(z_pred, z_gt);
    out.pixel_l1 = mean_abs_diff(recon, target);
    return out;
}

RetrievalScores retrieval_proxy(const std::vector<std::vector<double>>& latents,
                                const std::vector<std::vector<double>>& pixels,
                                const std::vector<int>& labels) {
    RetrievalScores out;
    out.latent_accuracy = loo_1nn_accuracy(latents, labels);
    out.pixel_accuracy = loo_1nn_accuracy(pixels, labels);
    return out;
}

} // namespace lsi
