#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lsi/losses.hpp"
#include "lsi/metrics.hpp"
#include "lsi/rng.hpp"

using namespace lsi;

TEST_CASE("latent loss: identical stacks give zero") {
    auto z = Tensor::full({2, 4, 8}, 0.37);
    CHECK(latent_loss(z, z).item() == 0.0);
}

TEST_CASE("latent loss: constant offset of 0.5 gives 0.5") {
    auto z = Tensor::full({1, 4, 8}, 0.2);
    auto shifted = z + 0.5;
    CHECK(latent_loss(shifted, z).item() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("latent loss: matches a brute-force mean of absolute differences") {
    Rng rng(3);
    std::vector<double> a(48), b(48);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    double manual = 0;
    for (int i = 0; i < 48; ++i) manual += std::fabs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
    manual /= 48;
    auto za = Tensor::from_data({2, 3, 8}, std::move(a));
    auto zb = Tensor::from_data({2, 3, 8}, std::move(b));
    CHECK(latent_loss(za, zb).item() == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("latent loss: shape mismatch throws") {
    CHECK_THROWS_AS(latent_loss(Tensor::zeros({1, 4, 8}), Tensor::zeros({1, 4, 9})), DimensionError);
}

TEST_CASE("pixel losses: identical images give zero for both terms") {
    auto img = Tensor::full({1, 1, 4, 4}, 0.6);
    const auto pl = pixel_losses(img, img);
    CHECK(pl.l2.item() == 0.0);
    CHECK(pl.perceptual.item() == 0.0);
}

TEST_CASE("pixel losses: uniform +0.1 offset gives l2 of 0.01") {
    auto img = Tensor::full({1, 1, 8, 8}, 0.4);
    const auto pl = pixel_losses(img + 0.1, img);
    CHECK(pl.l2.item() == doctest::Approx(0.01).epsilon(1e-10));
}

TEST_CASE("pixel losses: multi-scale term matches manual pooling on a 4x4 pair") {
    Rng rng(9);
    std::vector<double> a(16), b(16);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();

    double l1_full = 0;
    for (int i = 0; i < 16; ++i) l1_full += std::fabs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
    l1_full /= 16;

    double l1_half = 0;
    for (int by = 0; by < 2; ++by)
        for (int bx = 0; bx < 2; ++bx) {
            double pa = 0, pb = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    pa += a[static_cast<std::size_t>((2 * by + dy) * 4 + 2 * bx + dx)];
                    pb += b[static_cast<std::size_t>((2 * by + dy) * 4 + 2 * bx + dx)];
                }
            l1_half += std::fabs(pa - pb) / 4.0;
        }
    l1_half /= 4;

    double ma = 0, mb = 0;
    for (int i = 0; i < 16; ++i) {
        ma += a[static_cast<std::size_t>(i)];
        mb += b[static_cast<std::size_t>(i)];
    }
    const double l1_quarter = std::fabs(ma - mb) / 16.0;

    const double expected = (l1_full + l1_half + l1_quarter) / 3.0;
    const auto pl = pixel_losses(Tensor::from_data({1, 1, 4, 4}, std::move(a)),
                                 Tensor::from_data({1, 1, 4, 4}, std::move(b)));
    CHECK(pl.perceptual.item() == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("pixel losses: shape mismatch and missing batch dim throw") {
    CHECK_THROWS_AS(pixel_losses(Tensor::zeros({1, 1, 4, 4}), Tensor::zeros({1, 1, 4, 8})), DimensionError);
    CHECK_THROWS_AS(pixel_losses(Tensor::zeros({4, 4}), Tensor::zeros({4, 4})), DimensionError);
}

TEST_CASE("psnr: identical images report the infinity sentinel") {
    auto img = Tensor::full({1, 4, 4}, 0.3);
    CHECK(std::isinf(psnr_db(img, img)));
}

TEST_CASE("psnr: mse of 0.01 is exactly 20 dB") {
    auto img = Tensor::full({1, 10, 10}, 0.5);
    CHECK(psnr_db(img + 0.1, img) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("metrics match a brute-force per-pixel loop") {
    Rng rng(21);
    std::vector<double> a(64), b(64);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    double se = 0, ae = 0;
    for (int i = 0; i < 64; ++i) {
        const double diff = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
        se += diff * diff;
        ae += std::fabs(diff);
    }
    auto ta = Tensor::from_data({1, 8, 8}, std::move(a));
    auto tb = Tensor::from_data({1, 8, 8}, std::move(b));
    CHECK(mse(ta, tb) == doctest::Approx(se / 64).epsilon(1e-12));
    CHECK(mean_abs_diff(ta, tb) == doctest::Approx(ae / 64).epsilon(1e-12));
    CHECK(psnr_db(ta, tb) == doctest::Approx(10.0 * std::log10(64 / se)).epsilon(1e-9));
}

TEST_CASE("reconstruction metrics compose the three scores") {
    auto img = Tensor::full({1, 1, 4, 4}, 0.5);
    auto recon = img + 0.1;
    auto z = Tensor::full({1, 4, 8}, 1.0);
    auto z_gt = Tensor::full({1, 4, 8}, 0.75);
    const auto m = reconstruction_metrics(recon, img, z, z_gt);
    CHECK(m.psnr_db == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(m.latent_l1 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(m.pixel_l1 == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("1-nn retrieval: identical feature pairs sharing labels score 1.0") {
    std::vector<std::vector<double>> feats = {{1.0, 2.0}, {1.0, 2.0}, {5.0, 5.0}, {5.0, 5.0}};
    std::vector<int> labels = {0, 0, 1, 1};
    CHECK(loo_1nn_accuracy(feats, labels) == 1.0);
}

TEST_CASE("1-nn retrieval: random balanced features land near chance") {
    Rng rng(55);
    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> f(16);
        for (auto& v : f) v = rng.normal();
        feats.push_back(std::move(f));
        labels.push_back(i % 2);
    }
    const double acc = loo_1nn_accuracy(feats, labels);
    CHECK(acc > 0.4);
    CHECK(acc < 0.6);
}

TEST_CASE("1-nn retrieval: output stays in the unit interval") {
    Rng rng(56);
    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        feats.push_back({rng.normal(), rng.normal()});
        labels.push_back(i % 3);
    }
    const double acc = loo_1nn_accuracy(feats, labels);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
}

TEST_CASE("1-nn retrieval: degenerate inputs throw") {
    CHECK_THROWS_AS(loo_1nn_accuracy({{1.0}}, {0}), UsageError);
    CHECK_THROWS_AS(loo_1nn_accuracy({{1.0}, {2.0}}, {0, 0}), UsageError);
}

TEST_CASE("retrieval proxy reports both spaces") {
    std::vector<std::vector<double>> latents = {{0.0}, {0.1}, {5.0}, {5.1}};
    std::vector<std::vector<double>> pixels = {{0.0}, {9.0}, {4.0}, {6.0}};
    std::vector<int> labels = {0, 0, 1, 1};
    const auto scores = retrieval_proxy(latents, pixels, labels);
    CHECK(scores.latent_accuracy == 1.0);
    CHECK(scores.pixel_accuracy < 1.0);
}

TEST_CASE("loss weights default to the published schedule") {
    LossWeights w;
    CHECK(w.lat == 1.0);
    CHECK(w.id == 0.5);
    CHECK(w.pips == 0.8);
    CHECK(w.l2 == 1.0);
    CHECK(w.energy == 3.0);
}
