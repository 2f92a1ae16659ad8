#include "lsi/optical.hpp"

#include <algorithm>
#include <cmath>

#include "lsi/rng.hpp"

namespace lsi {

OpticalEncoder init_balanced(int d, int m, int n, std::uint64_t seed) {
    const int mn = m * n;
    if (d < 1) throw ConfigError("mask count must be at least 1");
    if (mn < 2) throw ConfigError("mask needs at least 2 pixels");
    if (d > mn) throw ConfigError("mask count " + std::to_string(d) + " exceeds pixel count " + std::to_string(mn));

    const int want_ones = mn / 2;
    Rng rng(seed);
    std::vector<double> logits(static_cast<std::size_t>(d) * mn);
    std::vector<double> row(static_cast<std::size_t>(mn));
    for (int j = 0; j < d; ++j) {
        double* dst = logits.data() + static_cast<std::size_t>(j) * mn;
        for (;;) {
            for (int i = 0; i < mn; ++i) row[static_cast<std::size_t>(i)] = rng.uniform();
            std::copy(row.begin(), row.end(), dst);
            // Shift so the (mn - want_ones)-th order statistic lands just
            // below the threshold and the next one just above it.
            std::nth_element(row.begin(), row.begin() + (mn - want_ones - 1), row.end());
            const double lo = row[static_cast<std::size_t>(mn - want_ones - 1)];
            const double hi = *std::min_element(row.begin() + (mn - want_ones), row.end());
            if (hi - lo < 1e-12) continue; // tie: redraw the row
            const double shift = 0.5 - 0.5 * (lo + hi);
            int ones = 0;
            for (int i = 0; i < mn; ++i) {
                double v = dst[i] + shift;
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                dst[i] = v;
                if (v >= 0.5) ++ones;
            }
            if (ones == want_ones) break;
        }
    }
    OpticalEncoder enc;
    enc.logits = Tensor::from_data({d, mn}, std::move(logits), true);
    enc.d = d;
    enc.m = m;
    enc.n = n;
    return enc;
}

Tensor binarized_masks(const OpticalEncoder& enc) { return quantize_ste(enc.logits, enc.threshold); }

Tensor sum_channels(const Tensor& image) {
    if (image.shape().size() != 3) throw DimensionError("sum_channels: image must be [C,m,n]");
    const int c = image.dim(0), m = image.dim(1), n = image.dim(2);
    if (c == 1) return reshape(image, {m, n});
    auto ones = Tensor::ones({1, c});
    return reshape(matmul(ones, reshape(image, {c, m * n})), {m, n});
}

Tensor measure(const OpticalEncoder& enc, const Tensor& image) {
    if (image.shape().size() != 3 || image.dim(1) != enc.m || image.dim(2) != enc.n)
        throw DimensionError("measure: image does not match mask geometry");
    auto flat = reshape(sum_channels(image), {enc.pixel_count(), 1});
    return reshape(matmul(binarized_masks(enc), flat), {enc.d});
}

Tensor measure_flat(const OpticalEncoder& enc, const Tensor& flat_images) {
    if (flat_images.shape().size() != 2 || flat_images.dim(1) != enc.pixel_count())
        throw DimensionError("measure_flat: expected [B, mn] input");
    return linear(flat_images, binarized_masks(enc), Tensor());
}

std::vector<int> ramp_counts(int d, int mn) {
    if (d < 1) throw ConfigError("ramp_counts: d must be at least 1");
    std::vector<int> counts(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        const double pct = 0.10 + 0.01 * (j % 81);
        counts[static_cast<std::size_t>(j)] = static_cast<int>(std::lround(pct * mn));
    }
    return counts;
}

EnergyTargets energy_targets(int d, int mn, std::uint64_t seed) {
    EnergyTargets t;
    t.eps = ramp_counts(d, mn);
    t.fractions.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) t.fractions[static_cast<std::size_t>(j)] = 0.10 + 0.01 * (j % 81);
    std::vector<int> perm(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) perm[static_cast<std::size_t>(j)] = j;
    Rng rng(seed);
    rng.shuffle(perm);
    EnergyTargets out;
    out.eps.resize(t.eps.size());
    out.fractions.resize(t.fractions.size());
    for (int j = 0; j < d; ++j) {
        out.eps[static_cast<std::size_t>(j)] = t.eps[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
        out.fractions[static_cast<std::size_t>(j)] =
            t.fractions[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    }
    return out;
}

Tensor energy_loss(const OpticalEncoder& enc, const EnergyTargets& targets, bool normalized) {
    if (static_cast<int>(targets.eps.size()) != enc.d)
        throw DimensionError("energy_loss: target count does not match mask count");
    const int mn = enc.pixel_count();
    auto row_sums = matmul(binarized_masks(enc), Tensor::ones({mn, 1})); // [d,1]
    std::vector<double> eps(targets.eps.begin(), targets.eps.end());
    auto gap = abs(row_sums - Tensor::from_data({enc.d, 1}, std::move(eps)));
    auto loss = mean(gap);
    return normalized ? loss / static_cast<double>(mn) : loss;
}

std::vector<int> occupancy_histogram(const OpticalEncoder& enc) {
    const int mn = enc.pixel_count();
    std::vector<int> counts(static_cast<std::size_t>(enc.d), 0);
    const auto v = enc.logits.values();
    for (int j = 0; j < enc.d; ++j) {
        int ones = 0;
        for (int i = 0; i < mn; ++i)
            if (v[static_cast<std::size_t>(j) * mn + i] >= enc.threshold) ++ones;
        counts[static_cast<std::size_t>(j)] = ones;
    }
    return counts;
}

} // namespace lsi
