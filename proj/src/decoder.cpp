#include "lsi/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lsi/dataset.hpp"
#include "lsi/losses.hpp"
#include "lsi/metrics.hpp"
#include "lsi/optim.hpp"

namespace lsi {

namespace {

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
    int n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(data), true);
}

Tensor conv_weight(int out, int in, int k, Rng& rng) {
    return uniform_init({out, in, k, k}, 1.0 / std::sqrt(in * k * k), rng);
}

} // namespace

void DecoderConfig::validate() const {
    if (levels < 1) throw ConfigError("decoder needs at least one level");
    if (image_size != 4 * (1 << (levels - 1)))
        throw ConfigError("image size must equal 4 * 2^(levels-1); got " + std::to_string(image_size) + " for " +
                          std::to_string(levels) + " levels");
    if (channels < 1) throw ConfigError("channel count must be positive");
    if (static_cast<int>(level_channels.size()) != levels) throw ConfigError("level_channels must have one entry per level");
    if (static_cast<int>(inv_channels.size()) != levels) throw ConfigError("inv_channels must have one entry per level");
    if (c_lat < 1 || const_channels < 1) throw ConfigError("decoder widths must be positive");
}

Generator::Generator(const DecoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int c0 = cfg_.const_channels;
    {
        std::vector<double> data(static_cast<std::size_t>(c0) * 16);
        for (auto& v : data) v = rng.normal(0.0, 0.5);
        const0_ = Tensor::from_data({c0, 4, 4}, std::move(data), true);
    }
    int prev = c0;
    for (int i = 0; i < cfg_.levels; ++i) {
        const int ch = cfg_.level_channels[static_cast<std::size_t>(i)];
        conv_w_.push_back(conv_weight(ch, prev, 3, rng));
        conv_b_.push_back(Tensor::zeros({ch}, true));
        affine_w_.push_back(uniform_init({2 * ch, cfg_.c_lat}, 1.0 / std::sqrt(cfg_.c_lat), rng));
        affine_b_.push_back(Tensor::zeros({2 * ch}, true));
        prev = ch;
    }
    out_w_ = conv_weight(cfg_.channels, prev, 3, rng);
    out_b_ = Tensor::zeros({cfg_.channels}, true);
}

Tensor Generator::forward(const Tensor& z) const {
    if (z.shape().size() != 3 || z.dim(1) != cfg_.levels || z.dim(2) != cfg_.c_lat)
        throw DimensionError("generator: latent stack must be [B, levels, c_lat]");
    const int batch = z.dim(0);
    Tensor x = broadcast_batch(const0_, batch);
    for (int i = 0; i < cfg_.levels; ++i) {
        if (i > 0) x = upsample2x_nearest(x);
        x = conv2d(x, conv_w_[static_cast<std::size_t>(i)], conv_b_[static_cast<std::size_t>(i)], 1, 1);
        const int ch = cfg_.level_channels[static_cast<std::size_t>(i)];
        auto st = linear(select_level(z, i), affine_w_[static_cast<std::size_t>(i)],
                         affine_b_[static_cast<std::size_t>(i)]);
        auto scale = slice_last(st, 0, ch) + 1.0;
        auto shift = slice_last(st, ch, ch);
        x = leaky_relu(film(x, scale, shift));
    }
    return sigmoid(conv2d(x, out_w_, out_b_, 1, 1));
}

std::vector<Tensor> Generator::parameters() const {
    std::vector<Tensor> out{const0_};
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
        out.push_back(conv_w_[i]);
        out.push_back(conv_b_[i]);
        out.push_back(affine_w_[i]);
        out.push_back(affine_b_[i]);
    }
    out.push_back(out_w_);
    out.push_back(out_b_);
    return out;
}

NamedTensors Generator::named_parameters(const std::string& prefix) const {
    NamedTensors out;
    out.emplace_back(prefix + "const0", const0_);
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
        const std::string lv = prefix + "level" + std::to_string(i);
        out.emplace_back(lv + ".conv_w", conv_w_[i]);
        out.emplace_back(lv + ".conv_b", conv_b_[i]);
        out.emplace_back(lv + ".affine_w", affine_w_[i]);
        out.emplace_back(lv + ".affine_b", affine_b_[i]);
    }
    out.emplace_back(prefix + "out.w", out_w_);
    out.emplace_back(prefix + "out.b", out_b_);
    return out;
}

InversionEncoder::InversionEncoder(const DecoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    int prev = cfg_.channels;
    int res = cfg_.image_size;
    std::vector<int> stage_res;
    for (int i = 0; i < cfg_.levels; ++i) {
        const int ch = cfg_.inv_channels[static_cast<std::size_t>(i)];
        conv_w_.push_back(conv_weight(ch, prev, 3, rng));
        conv_b_.push_back(Tensor::zeros({ch}, true));
        prev = ch;
        res /= 2;
        stage_res.push_back(res);
    }
    // Level j reads pyramid stage levels-1-j (deepest stage -> level 0).
    for (int j = 0; j < cfg_.levels; ++j) {
        const int stage = cfg_.levels - 1 - j;
        const int ch = cfg_.inv_channels[static_cast<std::size_t>(stage)];
        const int r = stage_res[static_cast<std::size_t>(stage)];
        const int pool = r > 8 ? r / 8 : 1;
        const int feat = ch * (r / pool) * (r / pool);
        head_pool_.push_back(pool);
        head_w_.push_back(uniform_init({cfg_.c_lat, feat}, 1.0 / std::sqrt(feat), rng));
        head_b_.push_back(Tensor::zeros({cfg_.c_lat}, true));
    }
}

Tensor InversionEncoder::forward(const Tensor& images) const {
    if (images.shape().size() != 4 || images.dim(1) != cfg_.channels || images.dim(2) != cfg_.image_size ||
        images.dim(3) != cfg_.image_size)
        throw DimensionError("inversion encoder: images must be [B, C, m, n] with configured geometry");
    const int batch = images.dim(0);
    std::vector<Tensor> stages;
    Tensor x = images;
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
        x = leaky_relu(conv2d(x, conv_w_[i], conv_b_[i], 2, 1));
        stages.push_back(x);
    }
    std::vector<Tensor> levels;
    for (int j = 0; j < cfg_.levels; ++j) {
        const int stage = cfg_.levels - 1 - j;
        Tensor f = stages[static_cast<std::size_t>(stage)];
        const int pool = head_pool_[static_cast<std::size_t>(j)];
        if (pool > 1) f = avg_pool2d(f, pool);
        const int feat = f.size() / batch;
        auto flat = reshape(f, {batch, feat});
        levels.push_back(linear(flat, head_w_[static_cast<std::size_t>(j)], head_b_[static_cast<std::size_t>(j)]));
    }
    return stack_levels(levels);
}

std::vector<Tensor> InversionEncoder::parameters() const {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
        out.push_back(conv_w_[i]);
        out.push_back(conv_b_[i]);
    }
    for (std::size_t i = 0; i < head_w_.size(); ++i) {
        out.push_back(head_w_[i]);
        out.push_back(head_b_[i]);
    }
    return out;
}

NamedTensors InversionEncoder::named_parameters(const std::string& prefix) const {
    NamedTensors out;
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
        const std::string st = prefix + "stage" + std::to_string(i);
        out.emplace_back(st + ".conv_w", conv_w_[i]);
        out.emplace_back(st + ".conv_b", conv_b_[i]);
    }
    for (std::size_t i = 0; i < head_w_.size(); ++i) {
        const std::string hd = prefix + "head" + std::to_string(i);
        out.emplace_back(hd + ".w", head_w_[i]);
        out.emplace_back(hd + ".b", head_b_[i]);
    }
    return out;
}

Tensor generate(const Generator& g, const Tensor& z) {
    if (z.shape().size() != 2) throw DimensionError("generate: latent stack must be [levels, c_lat]");
    const auto& cfg = g.config();
    auto img = g.forward(reshape(z, {1, z.dim(0), z.dim(1)}));
    return reshape(img, {cfg.channels, cfg.image_size, cfg.image_size});
}

Tensor invert(const InversionEncoder& n, const Tensor& image) {
    if (image.shape().size() != 3) throw DimensionError("invert: image must be [C, m, n]");
    const auto& cfg = n.config();
    auto z = n.forward(reshape(image, {1, image.dim(0), image.dim(1), image.dim(2)}));
    return reshape(z, {cfg.levels, cfg.c_lat});
}

void freeze(Generator& g) {
    for (auto& p : g.parameters()) p.set_requires_grad(false);
}

void freeze(InversionEncoder& n) {
    for (auto& p : n.parameters()) p.set_requires_grad(false);
}

namespace {
std::uint64_t named_checksum(const NamedTensors& named) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& [name, t] : named) {
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        h ^= value_checksum(t);
        h *= 1099511628211ull;
    }
    return h;
}
} // namespace

std::uint64_t weights_checksum(const Generator& g) { return named_checksum(g.named_parameters()); }
std::uint64_t weights_checksum(const InversionEncoder& n) { return named_checksum(n.named_parameters()); }

AutoencoderBundle pretrain_autoencoder(const std::vector<Tensor>& train_images,
                                       const std::vector<Tensor>& val_images, const DecoderConfig& cfg,
                                       const PretrainConfig& opt) {
    if (train_images.size() < 500) throw ConfigError("pretraining needs at least 500 training images");
    if (val_images.empty()) throw ConfigError("pretraining needs a validation split");
    cfg.validate();

    AutoencoderBundle bundle{Generator(cfg, Rng::derive(opt.seed, 1)), InversionEncoder(cfg, Rng::derive(opt.seed, 2)),
                             {}};
    auto params = bundle.generator.parameters();
    for (auto& p : bundle.inversion.parameters()) params.push_back(p);
    RadamLookahead::Config ocfg;
    ocfg.lr = opt.lr;
    RadamLookahead optim(params, ocfg);

    Rng shuffle_rng(Rng::derive(opt.seed, 3));
    std::vector<int> order(train_images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    auto eval_val = [&]() {
        NoGradGuard guard;
        double sq_sum = 0.0;
        long long count = 0;
        const int eval_batch = 64;
        for (std::size_t start = 0; start < val_images.size(); start += eval_batch) {
            std::vector<int> idx;
            for (std::size_t i = start; i < std::min(val_images.size(), start + eval_batch); ++i)
                idx.push_back(static_cast<int>(i));
            auto batch = stack_images(val_images, idx);
            auto recon = bundle.generator.forward(bundle.inversion.forward(batch));
            const auto rv = recon.values();
            const auto tv = batch.values();
            for (std::size_t i = 0; i < rv.size(); ++i) {
                const double dv = rv[i] - tv[i];
                sq_sum += dv * dv;
            }
            count += static_cast<long long>(rv.size());
        }
        const double agg_mse = sq_sum / static_cast<double>(count);
        return agg_mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / agg_mse);
    };

    double best_val = -1.0;
    int stale_epochs = 0;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch) {
            std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() +
                                     static_cast<std::ptrdiff_t>(std::min(order.size(), start + opt.batch)));
            auto batch = stack_images(train_images, idx);
            auto recon = bundle.generator.forward(bundle.inversion.forward(batch));
            auto px = pixel_losses(recon, batch);
            auto loss = opt.lambda_l2 * px.l2 + opt.lambda_pips * px.perceptual;
            const double lv = loss.item();
            if (!std::isfinite(lv))
                throw NumericError("autoencoder pretraining diverged at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(steps));
            optim.zero_grad();
            loss.backward();
            optim.step();
            loss_sum += lv;
            ++steps;
        }
        const double val = eval_val();
        bundle.report.train_loss.push_back(loss_sum / std::max(1, steps));
        bundle.report.val_psnr.push_back(val);
        bundle.report.epochs_run = epoch + 1;
        if (opt.verbose)
            std::fprintf(stderr, "pretrain epoch %d: train loss %.5f, val psnr %.2f dB\n", epoch + 1,
                         loss_sum / std::max(1, steps), val);
        if (best_val > 0.0 && val < best_val * (1.0 + opt.min_improve))
            ++stale_epochs;
        else
            stale_epochs = 0;
        best_val = std::max(best_val, val);
        if (stale_epochs >= opt.patience) break;
    }
    bundle.report.final_val_psnr = bundle.report.val_psnr.empty() ? 0.0 : bundle.report.val_psnr.back();

    freeze(bundle.generator);
    freeze(bundle.inversion);
    return bundle;
}

} // namespace lsi
