#include "lsi/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "lsi/metrics.hpp"
#include "lsi/optim.hpp"
#include "lsi/rng.hpp"

namespace lsi {

namespace {

constexpr int kEvalBatch = 64;

void require_frozen(const Generator& gen, const InversionEncoder& inv) {
    for (const auto& p : gen.parameters())
        if (p.requires_grad()) throw UsageError("train: generator must be frozen");
    for (const auto& p : inv.parameters())
        if (p.requires_grad()) throw UsageError("train: inversion encoder must be frozen");
}

/// Inverts each image once up front; the inversion encoder is frozen, so its
/// latents are constants for the whole run.
std::vector<Tensor> precompute_latents(const InversionEncoder& inv, const std::vector<Tensor>& images) {
    NoGradGuard guard;
    std::vector<Tensor> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        Shape batched{1};
        for (int d : img.shape()) batched.push_back(d);
        Tensor z = inv.forward(reshape(img, batched));
        const auto& zs = z.shape();
        out.push_back(reshape(z, Shape{zs[1], zs[2]}).detach());
    }
    return out;
}

Tensor flatten_grayscale(const Tensor& batch) {
    const auto& s = batch.shape();
    if (s.size() != 4 || s[1] != 1)
        throw ConfigError("training requires single-channel [B,1,m,n] image batches");
    return reshape(batch, Shape{s[0], s[2] * s[3]});
}

struct ValScores {
    double lat = 0;
    double psnr = 0;
};

ValScores evaluate_split(const Dataset& data, const std::vector<int>& idx,
                         const std::vector<Tensor>& latents, const OpticalEncoder& enc,
                         const DigitalEncoder& digital, const Generator& gen) {
    NoGradGuard guard;
    double lat_sum = 0;
    double se_sum = 0;
    long long px = 0;
    for (std::size_t start = 0; start < idx.size(); start += kEvalBatch) {
        const std::vector<int> chunk(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                     idx.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                       idx.size(), start + kEvalBatch)));
        const Tensor imgs = stack_images(data.images, chunk);
        const Tensor z_gt = stack_images(latents, chunk);
        const Tensor v = measure_flat(enc, flatten_grayscale(imgs));
        const Tensor z = digital.forward(v);
        const Tensor recon = gen.forward(z);
        lat_sum += latent_loss(z, z_gt).item() * static_cast<double>(chunk.size());
        se_sum += mse(recon, imgs) * static_cast<double>(recon.size());
        px += recon.size();
    }
    ValScores out;
    out.lat = lat_sum / static_cast<double>(idx.size());
    const double m = se_sum / static_cast<double>(px);
    out.psnr = m > 0 ? 10.0 * std::log10(1.0 / m) : std::numeric_limits<double>::infinity();
    return out;
}

double occupancy_sd(const OpticalEncoder& enc) {
    const auto hist = occupancy_histogram(enc);
    const double mn = static_cast<double>(enc.pixel_count());
    double mean = 0;
    for (int c : hist) mean += c / mn;
    mean /= static_cast<double>(hist.size());
    double var = 0;
    for (int c : hist) {
        const double f = c / mn - mean;
        var += f * f;
    }
    return std::sqrt(var / static_cast<double>(hist.size()));
}

class EpochLog {
public:
    explicit EpochLog(const std::string& path) {
        if (path.empty()) return;
        out_.open(path, std::ios::trunc);
        if (!out_) throw IoError("cannot write training log " + path);
        out_ << "epoch,phase,total,lat,l2,pips,energy,val_lat,val_psnr\n";
    }

    void append(const EpochStats& s) {
        if (!out_.is_open()) return;
        out_ << s.epoch << ',' << s.phase << ',' << s.total << ',' << s.lat << ',' << s.l2 << ','
             << s.pips << ',' << s.energy << ',' << s.val_lat << ',' << s.val_psnr << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

} // namespace

TrainReport train_lsi(const Dataset& data, OpticalEncoder& enc, DigitalEncoder& digital,
                      const Generator& gen, const InversionEncoder& inv,
                      const LossWeights& weights, const TrainConfig& cfg) {
    const std::vector<int> train_idx = data.indices(Split::train);
    const std::vector<int> val_idx = data.indices(Split::val);
    if (train_idx.empty()) throw ConfigError("train: empty training split");
    if (val_idx.empty()) throw ConfigError("train: empty validation split");
    if (cfg.batch < 1) throw ConfigError("train: batch must be positive");
    require_frozen(gen, inv);

    const std::uint64_t gen_sum = weights_checksum(gen);
    const std::uint64_t inv_sum = weights_checksum(inv);

    const std::vector<Tensor> latents = precompute_latents(inv, data.images);
    const EnergyTargets targets = energy_targets(enc.d, enc.pixel_count(), Rng::derive(cfg.seed, 17));

    Lion::Config lion_cfg;
    lion_cfg.lr = cfg.lr_mask;
    lion_cfg.project_unit_interval = true;
    Lion mask_opt({enc.logits}, lion_cfg);

    RadamLookahead::Config enc_cfg;
    enc_cfg.lr = cfg.lr_encoder;
    RadamLookahead enc_opt(digital.parameters(), enc_cfg);

    EpochLog log(cfg.log_path);
    TrainReport report;

    int global_epoch = 0;
    const auto run_epoch = [&](int phase) {
        ++global_epoch;
        std::vector<int> order = train_idx;
        Rng rng(Rng::derive(cfg.seed, 100 + static_cast<std::uint64_t>(global_epoch)));
        rng.shuffle(order);

        EpochStats stats;
        stats.epoch = global_epoch;
        stats.phase = phase;
        double seen = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                           order.size(),
                                                           start + static_cast<std::size_t>(cfg.batch))));
            const Tensor imgs = stack_images(data.images, idx);
            const Tensor z_gt = stack_images(latents, idx);
            const Tensor v = measure_flat(enc, flatten_grayscale(imgs));
            const Tensor z = digital.forward(v);
            const Tensor lat = latent_loss(z, z_gt);
            const PixelLosses px = pixel_losses(gen.forward(z), imgs);

            Tensor total = weights.lat * lat + weights.l2 * px.l2 + weights.pips * px.perceptual;
            double energy_value = 0;
            if (phase == 2 && weights.energy != 0) {
                const Tensor e = energy_loss(enc, targets, cfg.energy_normalized);
                energy_value = e.item();
                total = total + weights.energy * e;
            }
            if (!std::isfinite(total.item()))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(global_epoch) +
                                   ", step " + std::to_string(start / static_cast<std::size_t>(cfg.batch)));

            mask_opt.zero_grad();
            enc_opt.zero_grad();
            total.backward();
            mask_opt.step();
            enc_opt.step();

            const double b = static_cast<double>(idx.size());
            stats.total += total.item() * b;
            stats.lat += lat.item() * b;
            stats.l2 += px.l2.item() * b;
            stats.pips += px.perceptual.item() * b;
            stats.energy += energy_value * b;
            seen += b;
        }
        stats.total /= seen;
        stats.lat /= seen;
        stats.l2 /= seen;
        stats.pips /= seen;
        stats.energy /= seen;

        const ValScores val = evaluate_split(data, val_idx, latents, enc, digital, gen);
        if (!std::isfinite(val.lat))
            throw NumericError("train: non-finite validation loss at epoch " + std::to_string(global_epoch));
        stats.val_lat = val.lat;
        stats.val_psnr = val.psnr;

        if (weights_checksum(gen) != gen_sum || weights_checksum(inv) != inv_sum)
            throw UsageError("train: frozen autoencoder weights were mutated");

        log.append(stats);
        report.history.push_back(stats);
        if (cfg.verbose)
            std::cerr << "epoch " << stats.epoch << " phase " << phase << " lat " << stats.lat
                      << " val_lat " << stats.val_lat << " val_psnr " << stats.val_psnr << "\n";
        return stats;
    };

    double best_val = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int e = 0; e < cfg.epochs_phase1; ++e) {
        const EpochStats stats = run_epoch(1);
        if (stats.epoch == 1) report.val_lat_epoch1 = stats.val_lat;
        if (stats.val_lat < best_val * (1.0 - cfg.min_improve)) {
            best_val = stats.val_lat;
            stale = 0;
        } else {
            ++stale;
        }
        if (stale >= cfg.patience) break;
    }
    report.epochs_phase1 = global_epoch;
    report.occupancy_sd_phase1 = occupancy_sd(enc);

    for (int e = 0; e < cfg.epochs_phase2; ++e) run_epoch(2);
    report.epochs_phase2 = global_epoch - report.epochs_phase1;
    report.occupancy_sd_phase2 = occupancy_sd(enc);

    if (!report.history.empty()) {
        report.val_lat_final = report.history.back().val_lat;
        report.val_psnr_final = report.history.back().val_psnr;
    }
    return report;
}

namespace {

Tensor stack_measurements(const std::vector<std::vector<double>>& meas, const std::vector<int>& idx) {
    const std::size_t d = meas[static_cast<std::size_t>(idx[0])].size();
    std::vector<double> data;
    data.reserve(idx.size() * d);
    for (int i : idx) {
        const auto& row = meas[static_cast<std::size_t>(i)];
        if (row.size() != d) throw DimensionError("finetune: inconsistent measurement lengths");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor::from_data(Shape{static_cast<int>(idx.size()), static_cast<int>(d)}, std::move(data));
}

double sensed_psnr(const DigitalEncoder& digital, const Generator& gen,
                   const std::vector<std::vector<double>>& meas, const std::vector<Tensor>& images) {
    NoGradGuard guard;
    double se_sum = 0;
    long long px = 0;
    for (std::size_t start = 0; start < meas.size(); start += kEvalBatch) {
        std::vector<int> idx;
        for (std::size_t i = start; i < std::min(meas.size(), start + kEvalBatch); ++i)
            idx.push_back(static_cast<int>(i));
        const Tensor v = stack_measurements(meas, idx);
        const Tensor recon = gen.forward(digital.forward(v));
        const Tensor target = stack_images(images, idx);
        se_sum += mse(recon, target) * static_cast<double>(recon.size());
        px += recon.size();
    }
    const double m = se_sum / static_cast<double>(px);
    return m > 0 ? 10.0 * std::log10(1.0 / m) : std::numeric_limits<double>::infinity();
}

} // namespace

FinetuneReport finetune(DigitalEncoder& digital, const Generator& gen, const InversionEncoder& inv,
                        const std::vector<std::vector<double>>& train_meas,
                        const std::vector<Tensor>& train_images,
                        const std::vector<std::vector<double>>& val_meas,
                        const std::vector<Tensor>& val_images, const LossWeights& weights,
                        const FinetuneConfig& cfg) {
    if (train_meas.size() != train_images.size() || val_meas.size() != val_images.size())
        throw DimensionError("finetune: measurement/image pair counts disagree");
    if (train_meas.size() < 10)
        throw ConfigError("finetune: needs at least 10 pairs, got " + std::to_string(train_meas.size()));
    if (cfg.batch < 1) throw ConfigError("finetune: batch must be positive");
    require_frozen(gen, inv);

    const std::uint64_t gen_sum = weights_checksum(gen);
    const std::uint64_t inv_sum = weights_checksum(inv);

    const std::vector<Tensor> latents = precompute_latents(inv, train_images);
    const auto& eval_meas = val_meas.empty() ? train_meas : val_meas;
    const auto& eval_images = val_meas.empty() ? train_images : val_images;

    FinetuneReport report;
    report.pairs = static_cast<int>(train_meas.size());
    report.pre_psnr = sensed_psnr(digital, gen, eval_meas, eval_images);

    RadamLookahead::Config opt_cfg;
    opt_cfg.lr = cfg.lr;
    RadamLookahead opt(digital.parameters(), opt_cfg);

    std::vector<int> order(train_meas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(Rng::derive(cfg.seed, 200 + static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                           order.size(),
                                                           start + static_cast<std::size_t>(cfg.batch))));
            const Tensor v = stack_measurements(train_meas, idx);
            const Tensor z = digital.forward(v);
            const Tensor lat = latent_loss(z, stack_images(latents, idx));
            const PixelLosses px = pixel_losses(gen.forward(z), stack_images(train_images, idx));
            const Tensor total = weights.lat * lat + weights.l2 * px.l2 + weights.pips * px.perceptual;
            if (!std::isfinite(total.item()))
                throw NumericError("finetune: non-finite loss at epoch " + std::to_string(epoch));
            opt.zero_grad();
            total.backward();
            opt.step();
        }
        ++report.epochs_run;
        if (cfg.verbose) std::cerr << "finetune epoch " << epoch << " done\n";
    }

    if (weights_checksum(gen) != gen_sum || weights_checksum(inv) != inv_sum)
        throw UsageError("finetune: frozen autoencoder weights were mutated");

    report.post_psnr = sensed_psnr(digital, gen, eval_meas, eval_images);
    return report;
}

} // namespace lsi
