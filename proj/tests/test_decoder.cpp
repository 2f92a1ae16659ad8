#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lsi/decoder.hpp"
#include "lsi/rng.hpp"

using namespace lsi;

namespace {

DecoderConfig tiny_config() {
    DecoderConfig cfg;
    cfg.image_size = 16;
    cfg.channels = 1;
    cfg.levels = 3;
    cfg.c_lat = 8;
    cfg.const_channels = 6;
    cfg.level_channels = {6, 5, 4};
    cfg.inv_channels = {4, 6, 8};
    return cfg;
}

Tensor random_latents(int batch, const DecoderConfig& cfg, Rng& rng) {
    std::vector<double> data(static_cast<std::size_t>(batch * cfg.levels * cfg.c_lat));
    for (auto& v : data) v = rng.normal();
    return Tensor::from_data({batch, cfg.levels, cfg.c_lat}, std::move(data));
}

} // namespace

TEST_CASE("generator output shape and range") {
    const auto cfg = tiny_config();
    Generator gen(cfg, 3);
    Rng rng(4);
    auto z = random_latents(2, cfg, rng);
    const auto img = gen.forward(z);
    CHECK(img.shape() == Shape{2, cfg.channels, cfg.image_size, cfg.image_size});
    for (double v : img.values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("generator construction is seed-deterministic") {
    const auto cfg = tiny_config();
    Generator a(cfg, 7);
    Generator b(cfg, 7);
    CHECK(weights_checksum(a) == weights_checksum(b));
    Generator c(cfg, 8);
    CHECK(weights_checksum(a) != weights_checksum(c));
}

TEST_CASE("latents actually modulate the synthesized image") {
    const auto cfg = tiny_config();
    Generator gen(cfg, 5);
    Rng rng(6);
    auto z0 = random_latents(1, cfg, rng);
    auto z1 = random_latents(1, cfg, rng);
    const auto img0 = gen.forward(z0);
    const auto img1 = gen.forward(z1);
    const auto a = img0.values();
    const auto b = img1.values();
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - b[i]);
    CHECK(diff > 1e-6);

    // Perturbing only the coarsest level must still reach the output.
    const auto z0v = z0.values();
    std::vector<double> z2(z0v.begin(), z0v.end());
    for (int k = 0; k < cfg.c_lat; ++k) z2[static_cast<std::size_t>(k)] += 0.5;
    const auto img2 = gen.forward(Tensor::from_data({1, cfg.levels, cfg.c_lat}, std::move(z2)));
    const auto c = img2.values();
    double coarse_diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) coarse_diff += std::abs(a[i] - c[i]);
    CHECK(coarse_diff > 1e-6);
}

TEST_CASE("inversion encoder produces a latent stack") {
    const auto cfg = tiny_config();
    InversionEncoder inv(cfg, 9);
    Rng rng(10);
    std::vector<double> px(static_cast<std::size_t>(2 * cfg.channels * cfg.image_size * cfg.image_size));
    for (auto& v : px) v = rng.uniform();
    const auto z = inv.forward(
        Tensor::from_data({2, cfg.channels, cfg.image_size, cfg.image_size}, std::move(px)));
    CHECK(z.shape() == Shape{2, cfg.levels, cfg.c_lat});
    for (double v : z.values()) CHECK(std::isfinite(v));
}

TEST_CASE("round trip through inversion and generator preserves geometry") {
    const auto cfg = tiny_config();
    Generator gen(cfg, 11);
    InversionEncoder inv(cfg, 12);
    Rng rng(13);
    std::vector<double> px(static_cast<std::size_t>(cfg.channels * cfg.image_size * cfg.image_size));
    for (auto& v : px) v = rng.uniform();
    auto img = Tensor::from_data({cfg.channels, cfg.image_size, cfg.image_size}, std::move(px));
    const auto rec = generate(gen, invert(inv, img));
    CHECK(rec.shape() == img.shape());
}

TEST_CASE("freezing clears requires_grad and pins the checksum") {
    const auto cfg = tiny_config();
    Generator gen(cfg, 14);
    for (const auto& p : gen.parameters()) CHECK(p.requires_grad());
    const auto before = weights_checksum(gen);
    freeze(gen);
    for (const auto& p : gen.parameters()) CHECK(!p.requires_grad());
    CHECK(weights_checksum(gen) == before);

    InversionEncoder inv(cfg, 15);
    freeze(inv);
    for (const auto& p : inv.parameters()) CHECK(!p.requires_grad());
}

TEST_CASE("checksum reacts to any single weight change") {
    const auto cfg = tiny_config();
    Generator gen(cfg, 16);
    const auto before = weights_checksum(gen);
    auto params = gen.parameters();
    auto vals = params[2].raw_values();
    vals[0] += 1e-9;
    CHECK(weights_checksum(gen) != before);
}

TEST_CASE("geometry validation rejects inconsistent configs") {
    auto cfg = tiny_config();
    cfg.image_size = 17;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.level_channels = {6, 5};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.inv_channels = {4, 6};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.levels = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("generator rejects malformed latent shapes") {
    const auto cfg = tiny_config();
    Generator gen(cfg, 17);
    CHECK_THROWS_AS(gen.forward(Tensor::zeros({1, cfg.levels + 1, cfg.c_lat})), DimensionError);
    CHECK_THROWS_AS(gen.forward(Tensor::zeros({cfg.levels, cfg.c_lat})), DimensionError);
}

namespace {

std::vector<Tensor> blob_images(int count, int size, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::vector<double> px(static_cast<std::size_t>(size * size));
        const double cx = rng.uniform(4.0, size - 4.0), cy = rng.uniform(4.0, size - 4.0);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                px[static_cast<std::size_t>(y * size + x)] = r2 < 9.0 ? 0.85 : 0.15;
            }
        out.push_back(Tensor::from_data({1, size, size}, std::move(px)));
    }
    return out;
}

} // namespace

TEST_CASE("pretraining refuses undersized datasets") {
    const auto cfg = tiny_config();
    const auto train = blob_images(40, cfg.image_size, 18);
    const auto val = blob_images(4, cfg.image_size, 19);
    PretrainConfig opt;
    opt.epochs = 1;
    CHECK_THROWS_AS(pretrain_autoencoder(train, val, cfg, opt), ConfigError);
    const auto enough = blob_images(500, cfg.image_size, 20);
    CHECK_THROWS_AS(pretrain_autoencoder(enough, {}, cfg, opt), ConfigError);
}

TEST_CASE("short pretraining run learns and freezes the pair") {
    const auto cfg = tiny_config();
    const auto train = blob_images(500, cfg.image_size, 21);
    const auto val = blob_images(8, cfg.image_size, 22);
    PretrainConfig opt;
    opt.epochs = 3;
    opt.batch = 64;
    opt.seed = 2;
    const auto bundle = pretrain_autoencoder(train, val, cfg, opt);
    CHECK(bundle.report.epochs_run == 3);
    CHECK(bundle.report.train_loss.size() == static_cast<std::size_t>(bundle.report.epochs_run));
    CHECK(bundle.report.val_psnr.size() == static_cast<std::size_t>(bundle.report.epochs_run));
    CHECK(bundle.report.train_loss.back() < bundle.report.train_loss.front());
    CHECK(bundle.report.final_val_psnr == bundle.report.val_psnr.back());
    for (const auto& p : bundle.generator.parameters()) CHECK(!p.requires_grad());
    for (const auto& p : bundle.inversion.parameters()) CHECK(!p.requires_grad());
}

TEST_CASE("pretraining is reproducible for a fixed seed") {
    const auto cfg = tiny_config();
    const auto train = blob_images(500, cfg.image_size, 23);
    const auto val = blob_images(4, cfg.image_size, 24);
    PretrainConfig opt;
    opt.epochs = 1;
    opt.batch = 125;
    opt.seed = 3;
    const auto a = pretrain_autoencoder(train, val, cfg, opt);
    const auto b = pretrain_autoencoder(train, val, cfg, opt);
    CHECK(weights_checksum(a.generator) == weights_checksum(b.generator));
    CHECK(weights_checksum(a.inversion) == weights_checksum(b.inversion));
    CHECK(a.report.final_val_psnr == b.report.final_val_psnr);
}
