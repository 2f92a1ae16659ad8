#pragma once

#include <string>

#include "lsi/config.hpp"
#include "lsi/decoder.hpp"
#include "lsi/encoder.hpp"
#include "lsi/optical.hpp"

namespace lsi {

/// Everything a measurement-to-image pipeline needs at inference time:
/// trained masks, digital encoder, and the frozen autoencoder pair.
struct System {
    OpticalEncoder optical;
    EncoderConfig enc_cfg;
    DigitalEncoder digital;
    DecoderConfig dec_cfg;
    Generator generator;
    InversionEncoder inversion;
};

void save_system(const std::string& path, const System& sys);
System load_system(const std::string& path);

struct Autoencoder {
    DecoderConfig cfg;
    Generator generator;
    InversionEncoder inversion;
    double val_psnr = 0;
};

void save_autoencoder(const std::string& path, const Autoencoder& ae);
Autoencoder load_autoencoder(const std::string& path);

/// Subcommand entry points. Each creates a run directory (timestamp+seed
/// under runs/ unless `out_dir` is given), writes the fully resolved config
/// into it, then its own artifacts. Returns the run directory path.
std::string run_make_dataset(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_pretrain(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_train(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_reconstruct(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_evaluate(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_fsi(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_calibrate(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_finetune(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_export_latents(const RunConfig& cfg, const std::string& out_dir = "");
std::string run_export_masks(const RunConfig& cfg, const std::string& out_dir = "");

} // namespace lsi
