#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsi/dataset.hpp"
#include "lsi/decoder.hpp"
#include "lsi/encoder.hpp"
#include "lsi/losses.hpp"
#include "lsi/optical.hpp"

namespace lsi {

struct TrainConfig {
    int epochs_phase1 = 30; // cap; phase 1 may stop earlier on convergence
    int epochs_phase2 = 10;
    int batch = 32;
    double lr_mask = 1e-4;
    double lr_encoder = 1e-4;
    int patience = 5;          // stale epochs before phase 1 is declared converged
    double min_improve = 0.01; // relative validation improvement that resets staleness
    bool energy_normalized = false;
    std::uint64_t seed = 7;
    std::string log_path; // per-epoch CSV, empty disables
    bool verbose = false;
};

struct EpochStats {
    int epoch = 0; // 1-based, counts across both phases
    int phase = 1;
    double total = 0;
    double lat = 0;
    double l2 = 0;
    double pips = 0;
    double energy = 0;
    double val_lat = 0;
    double val_psnr = 0;
};

struct TrainReport {
    std::vector<EpochStats> history;
    int epochs_phase1 = 0;
    int epochs_phase2 = 0;
    double val_lat_epoch1 = 0;
    double val_lat_final = 0;
    double val_psnr_final = 0;
    double occupancy_sd_phase1 = 0; // spread of mask occupancy fractions after each phase
    double occupancy_sd_phase2 = 0;
};

/// Two-phase mask + digital-encoder training against a frozen autoencoder.
/// Phase 1 minimizes the latent and pixel terms; once validation latent loss
/// stops improving (or the epoch cap is hit) phase 2 continues with the
/// per-mask energy penalty added. Grayscale datasets only.
TrainReport train_lsi(const Dataset& data, OpticalEncoder& enc, DigitalEncoder& digital,
                      const Generator& gen, const InversionEncoder& inv,
                      const LossWeights& weights, const TrainConfig& cfg);

struct FinetuneConfig {
    double lr = 1e-5;
    int epochs = 20;
    int batch = 32;
    std::uint64_t seed = 11;
    bool verbose = false;
};

struct FinetuneReport {
    double pre_psnr = 0;
    double post_psnr = 0;
    int pairs = 0;
    int epochs_run = 0;
};

/// Adapts the digital encoder to sensor-distorted measurements. Masks stay
/// fixed; only encoder weights move, at a reduced learning rate. Validation
/// pairs are held out; when none are given the training pairs are reused for
/// the before/after PSNR report.
FinetuneReport finetune(DigitalEncoder& digital, const Generator& gen, const InversionEncoder& inv,
                        const std::vector<std::vector<double>>& train_meas,
                        const std::vector<Tensor>& train_images,
                        const std::vector<std::vector<double>>& val_meas,
                        const std::vector<Tensor>& val_images, const LossWeights& weights,
                        const FinetuneConfig& cfg);

} // namespace lsi
