#include "lsi/encoder.hpp"

#include <cmath>

namespace lsi {

namespace {

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
    int n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(data), true);
}

Tensor linear_weight(int out, int in, Rng& rng) { return uniform_init({out, in}, 1.0 / std::sqrt(in), rng); }

void check_block_finite(const Tensor& t, const char* block) {
    if (!all_finite(t)) throw NumericError(std::string("non-finite values in ") + block + " block");
}

} // namespace

void EncoderConfig::validate() const {
    if (d < 1 || l < 1 || c_lat < 1 || hidden < 1) throw ConfigError("encoder dimensions must be positive");
    if (n_coarse < 1 || n_mid < 1 || n_fine < 1) throw ConfigError("each encoder group needs at least one level");
    if (n_coarse + n_mid + n_fine != l) throw ConfigError("encoder level split does not sum to l");
    if (expansion < 2) throw ConfigError("gating expansion factor must be at least 2");
    if ((expansion * c_lat) % 2 != 0) throw ConfigError("expanded channel width must be even to split");
    if (depth_coarse < 1 || depth_mid < 1 || depth_fine < 1) throw ConfigError("perceptron depth must be positive");
    if (input_scale <= 0.0) throw ConfigError("input_scale must be positive");
}

Mix::Mix(int levels, int channels, int expansion, Rng& rng)
    : levels_(levels), channels_(channels), half_(expansion * channels / 2) {
    if ((expansion * channels) % 2 != 0) throw ConfigError("gating expansion width must be even");
    const int wide = expansion * channels;
    w_in_ = linear_weight(wide, channels, rng);
    b_in_ = Tensor::zeros({wide}, true);
    w_gate_ = Tensor::zeros({levels, levels}, true);
    b_gate_ = Tensor::ones({levels}, true);
    w_out_ = Tensor::zeros({channels, half_}, true);
    b_out_ = Tensor::zeros({channels}, true);
}

Tensor Mix::forward(const Tensor& z) const {
    if (z.shape().size() != 3 || z.dim(1) != levels_ || z.dim(2) != channels_)
        throw DimensionError("gating unit: input must be [B, levels, channels]");
    const int batch = z.dim(0);
    auto proj = linear(reshape(z, {batch * levels_, channels_}), w_in_, b_in_);
    auto wide = reshape(proj, {batch, levels_, 2 * half_});
    auto u = slice_last(wide, 0, half_);
    auto v = slice_last(wide, half_, half_);
    auto gate = level_mix(layer_norm(v, -1), w_gate_, b_gate_);
    auto gated = reshape(u * gate, {batch * levels_, half_});
    return reshape(linear(gated, w_out_, b_out_), {batch, levels_, channels_}) + z;
}

std::vector<Tensor> Mix::parameters() const { return {w_in_, b_in_, w_gate_, b_gate_, w_out_, b_out_}; }

void Mix::collect(const std::string& prefix, NamedTensors& out) const {
    out.emplace_back(prefix + ".w_in", w_in_);
    out.emplace_back(prefix + ".b_in", b_in_);
    out.emplace_back(prefix + ".w_gate", w_gate_);
    out.emplace_back(prefix + ".b_gate", b_gate_);
    out.emplace_back(prefix + ".w_out", w_out_);
    out.emplace_back(prefix + ".b_out", b_out_);
}

Mlp::Mlp(int in, int hidden, int out, int depth, Rng& rng) {
    int prev = in;
    for (int i = 0; i < depth; ++i) {
        const int width = (i == depth - 1) ? out : hidden;
        weights_.push_back(linear_weight(width, prev, rng));
        biases_.push_back(Tensor::zeros({width}, true));
        prev = width;
    }
}

Tensor Mlp::forward(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        h = linear(h, weights_[i], biases_[i]);
        if (i + 1 < weights_.size()) h = leaky_relu(h);
    }
    return h;
}

std::vector<Tensor> Mlp::parameters() const {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(weights_[i]);
        out.push_back(biases_[i]);
    }
    return out;
}

void Mlp::collect(const std::string& prefix, NamedTensors& out) const {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.emplace_back(prefix + ".w" + std::to_string(i), weights_[i]);
        out.emplace_back(prefix + ".b" + std::to_string(i), biases_[i]);
    }
}

DigitalEncoder::DigitalEncoder(EncoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int mid_in = cfg_.d + cfg_.n_coarse * cfg_.c_lat;
    const int fine_in = cfg_.n_mid * cfg_.c_lat;
    for (int i = 0; i < cfg_.n_coarse; ++i) coarse_.emplace_back(cfg_.d, cfg_.hidden, cfg_.c_lat, cfg_.depth_coarse, rng);
    for (int i = 0; i < cfg_.n_mid; ++i) mid_.emplace_back(mid_in, cfg_.hidden, cfg_.c_lat, cfg_.depth_mid, rng);
    for (int i = 0; i < cfg_.n_fine; ++i) fine_.emplace_back(fine_in, cfg_.hidden, cfg_.c_lat, cfg_.depth_fine, rng);
    mix_coarse_ = Mix(cfg_.n_coarse, cfg_.c_lat, cfg_.expansion, rng);
    mix_mid_ = Mix(cfg_.n_mid, cfg_.c_lat, cfg_.expansion, rng);
    mix_final_ = Mix(cfg_.l, cfg_.c_lat, cfg_.expansion, rng);
    w_embed_ = linear_weight(fine_in, cfg_.d, rng);
    b_embed_ = Tensor::zeros({fine_in}, true);
}

Tensor DigitalEncoder::forward(const Tensor& c) const {
    if (c.shape().size() != 2 || c.dim(1) != cfg_.d)
        throw DimensionError("encoder: expected measurements of shape [B, d]");
    const int batch = c.dim(0);
    Tensor x = (cfg_.input_scale == 1.0) ? c : c * cfg_.input_scale;

    std::vector<Tensor> levels;
    levels.reserve(static_cast<std::size_t>(cfg_.l));
    std::vector<Tensor> coarse_levels;
    for (const auto& mlp : coarse_) coarse_levels.push_back(mlp.forward(x));
    auto coarse_stack = stack_levels(coarse_levels);
    check_block_finite(coarse_stack, "coarse");

    auto mid_input = concat_last(x, reshape(mix_coarse_.forward(coarse_stack), {batch, cfg_.n_coarse * cfg_.c_lat}));
    std::vector<Tensor> mid_levels;
    for (const auto& mlp : mid_) mid_levels.push_back(mlp.forward(mid_input));
    auto mid_stack = stack_levels(mid_levels);
    check_block_finite(mid_stack, "middle");

    auto fine_input = reshape(mix_mid_.forward(mid_stack), {batch, cfg_.n_mid * cfg_.c_lat}) +
                      linear(x, w_embed_, b_embed_);
    std::vector<Tensor> fine_levels;
    for (const auto& mlp : fine_) fine_levels.push_back(mlp.forward(fine_input));

    for (auto& t : coarse_levels) levels.push_back(t);
    for (auto& t : mid_levels) levels.push_back(t);
    for (auto& t : fine_levels) levels.push_back(t);
    auto out = mix_final_.forward(stack_levels(levels));
    check_block_finite(out, "final gating");
    return out;
}

Tensor DigitalEncoder::encode(const Tensor& c) const {
    if (c.shape().size() != 1) throw DimensionError("encode: expected a flat measurement vector");
    return reshape(forward(reshape(c, {1, cfg_.d})), {cfg_.l, cfg_.c_lat});
}

std::vector<Tensor> DigitalEncoder::parameters() const {
    std::vector<Tensor> out;
    auto extend = [&out](std::vector<Tensor> more) {
        for (auto& t : more) out.push_back(std::move(t));
    };
    for (auto& m : coarse_) extend(m.parameters());
    for (auto& m : mid_) extend(m.parameters());
    for (auto& m : fine_) extend(m.parameters());
    extend(mix_coarse_.parameters());
    extend(mix_mid_.parameters());
    extend(mix_final_.parameters());
    out.push_back(w_embed_);
    out.push_back(b_embed_);
    return out;
}

NamedTensors DigitalEncoder::named_parameters(const std::string& prefix) const {
    NamedTensors out;
    for (std::size_t i = 0; i < coarse_.size(); ++i) coarse_[i].collect(prefix + "coarse" + std::to_string(i), out);
    for (std::size_t i = 0; i < mid_.size(); ++i) mid_[i].collect(prefix + "mid" + std::to_string(i), out);
    for (std::size_t i = 0; i < fine_.size(); ++i) fine_[i].collect(prefix + "fine" + std::to_string(i), out);
    mix_coarse_.collect(prefix + "mix_coarse", out);
    mix_mid_.collect(prefix + "mix_mid", out);
    mix_final_.collect(prefix + "mix_final", out);
    out.emplace_back(prefix + "embed.w", w_embed_);
    out.emplace_back(prefix + "embed.b", b_embed_);
    return out;
}

long long DigitalEncoder::parameter_count() const {
    long long total = 0;
    for (const auto& [name, t] : named_parameters()) total += t.size();
    return total;
}

long long count_parameters(const EncoderConfig& cfg) { return DigitalEncoder(cfg, 0).parameter_count(); }

} // namespace lsi
