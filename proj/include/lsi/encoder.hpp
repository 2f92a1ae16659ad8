#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lsi/rng.hpp"
#include "lsi/tensor.hpp"

namespace lsi {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Shape of the measurement-to-latent network: three groups of per-level
/// perceptrons (coarse, middle, fine) joined by gating units.
struct EncoderConfig {
    int d = 16;       // measurement vector width
    int l = 4;        // latent levels
    int c_lat = 64;   // per-level latent width
    int n_coarse = 1; // levels produced by each group
    int n_mid = 1;
    int n_fine = 2;
    int hidden = 128;
    int expansion = 4; // channel expansion inside the gating unit
    int depth_coarse = 2;
    int depth_mid = 3;
    int depth_fine = 4;
    double input_scale = 1.0; // multiplies raw measurements before the net

    void validate() const;
};

/// Spatial gating block acting across latent levels: expand channels, split
/// into value/gate halves, normalize the gate half, mix it across levels
/// with a static linear map, multiply, project back, add the input. At
/// initialization the level map is zero and the gate bias one, so the block
/// is an exact identity.
class Mix {
public:
    Mix() = default;
    Mix(int levels, int channels, int expansion, Rng& rng);

    Tensor forward(const Tensor& z) const; // [B, levels, channels]
    std::vector<Tensor> parameters() const;
    void collect(const std::string& prefix, NamedTensors& out) const;

private:
    int levels_ = 0;
    int channels_ = 0;
    int half_ = 0;
    Tensor w_in_, b_in_, w_gate_, b_gate_, w_out_, b_out_;
};

/// Per-level multi-layer perceptron (leaky_relu between layers, linear out).
class Mlp {
public:
    Mlp() = default;
    Mlp(int in, int hidden, int out, int depth, Rng& rng);

    Tensor forward(const Tensor& x) const; // [B, in] -> [B, out]
    std::vector<Tensor> parameters() const;
    void collect(const std::string& prefix, NamedTensors& out) const;

private:
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;
};

/// The digital encoder: measurement vector -> latent stack.
class DigitalEncoder {
public:
    DigitalEncoder() = default;
    DigitalEncoder(EncoderConfig cfg, std::uint64_t seed);

    /// [B, d] -> [B, l, c_lat]
    Tensor forward(const Tensor& c) const;
    /// [d] -> [l, c_lat]
    Tensor encode(const Tensor& c) const;

    std::vector<Tensor> parameters() const;
    NamedTensors named_parameters(const std::string& prefix = "enc.") const;
    long long parameter_count() const;
    const EncoderConfig& config() const { return cfg_; }

private:
    EncoderConfig cfg_;
    std::vector<Mlp> coarse_, mid_, fine_;
    Mix mix_coarse_, mix_mid_, mix_final_;
    Tensor w_embed_, b_embed_; // measurement embedding feeding the fine block
};

long long count_parameters(const EncoderConfig& cfg);

} // namespace lsi
