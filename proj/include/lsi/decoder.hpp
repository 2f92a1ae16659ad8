#pragma once

#include <cstdint>
#include <vector>

#include "lsi/encoder.hpp" // NamedTensors
#include "lsi/rng.hpp"
#include "lsi/tensor.hpp"

namespace lsi {

/// Geometry of the generator/inversion pair. Image side must be 4 * 2^(levels-1).
struct DecoderConfig {
    int image_size = 32;
    int channels = 1;
    int levels = 4;
    int c_lat = 64;
    int const_channels = 48;
    std::vector<int> level_channels = {48, 36, 24, 16}; // per synthesis level
    std::vector<int> inv_channels = {20, 28, 40, 56};   // per pyramid stage

    void validate() const;
};

/// Coarse-to-fine image synthesizer. A learned constant map is refined level
/// by level; each level's feature maps are modulated by an affine projection
/// of that level's latent vector. Output passes through a sigmoid, so pixels
/// always land in [0,1].
class Generator {
public:
    Generator() = default;
    Generator(const DecoderConfig& cfg, std::uint64_t seed);

    Tensor forward(const Tensor& z) const; // [B, l, c_lat] -> [B, C, m, n]
    std::vector<Tensor> parameters() const;
    NamedTensors named_parameters(const std::string& prefix = "gen.") const;
    const DecoderConfig& config() const { return cfg_; }

private:
    DecoderConfig cfg_;
    Tensor const0_;
    std::vector<Tensor> conv_w_, conv_b_;     // one conv per level
    std::vector<Tensor> affine_w_, affine_b_; // z_level -> (scale, shift)
    Tensor out_w_, out_b_;
};

/// Image-to-latent-stack encoder: strided conv pyramid, deepest feature maps
/// feed the coarsest latent level.
class InversionEncoder {
public:
    InversionEncoder() = default;
    InversionEncoder(const DecoderConfig& cfg, std::uint64_t seed);

    Tensor forward(const Tensor& images) const; // [B, C, m, n] -> [B, l, c_lat]
    std::vector<Tensor> parameters() const;
    NamedTensors named_parameters(const std::string& prefix = "inv.") const;
    const DecoderConfig& config() const { return cfg_; }

private:
    DecoderConfig cfg_;
    std::vector<Tensor> conv_w_, conv_b_;
    std::vector<Tensor> head_w_, head_b_;
    std::vector<int> head_pool_; // avg-pool kernel per level head
};

/// Single-image conveniences.
Tensor generate(const Generator& g, const Tensor& z);      // [l,c_lat] -> [C,m,n]
Tensor invert(const InversionEncoder& n, const Tensor& i); // [C,m,n] -> [l,c_lat]

/// Marks every parameter non-trainable.
void freeze(Generator& g);
void freeze(InversionEncoder& n);

/// Order-stable checksum over all weights; constant while frozen.
std::uint64_t weights_checksum(const Generator& g);
std::uint64_t weights_checksum(const InversionEncoder& n);

struct PretrainConfig {
    int epochs = 40;
    int batch = 32;
    double lr = 1e-3;
    double lambda_l2 = 1.0;
    double lambda_pips = 0.8;
    int patience = 5;          // epochs of <min_improve val gain before stop
    double min_improve = 0.01; // relative
    std::uint64_t seed = 1;
    bool verbose = false;
};

struct PretrainReport {
    std::vector<double> train_loss; // per epoch
    std::vector<double> val_psnr;   // per epoch, aggregate-MSE PSNR
    double final_val_psnr = 0.0;
    int epochs_run = 0;
};

struct AutoencoderBundle {
    Generator generator;
    InversionEncoder inversion;
    PretrainReport report;
};

/// Trains generator+inversion jointly as an autoencoder on the train images,
/// tracks aggregate PSNR on the validation images, freezes both on return.
AutoencoderBundle pretrain_autoencoder(const std::vector<Tensor>& train_images,
                                       const std::vector<Tensor>& val_images, const DecoderConfig& cfg,
                                       const PretrainConfig& opt);

} // namespace lsi
