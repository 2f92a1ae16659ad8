#include "lsi/optim.hpp"

#include <cmath>

namespace lsi {

namespace {

void check_trainable(const std::vector<Tensor>& params, const char* who) {
    for (const auto& p : params)
        if (!p.defined() || !p.is_leaf() || !p.requires_grad())
            throw UsageError(std::string(who) + ": parameters must be trainable leaves");
}

} // namespace

Lion::Lion(std::vector<Tensor> params, Config cfg) : params_(std::move(params)), cfg_(cfg) {
    check_trainable(params_, "Lion");
    momentum_.reserve(params_.size());
    for (const auto& p : params_) momentum_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
}

void Lion::step() {
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        auto& m = momentum_[pi];
        auto theta = p.raw_values();
        const bool has_grad = p.has_grad();
        std::span<const double> g;
        if (has_grad) g = p.grad();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = has_grad ? g[i] : 0.0;
            const double c = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            const double u = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
            theta[i] -= cfg_.lr * (u + cfg_.weight_decay * theta[i]);
            m[i] = cfg_.beta2 * m[i] + (1.0 - cfg_.beta2) * gi;
            if (cfg_.project_unit_interval) theta[i] = theta[i] < 0.0 ? 0.0 : (theta[i] > 1.0 ? 1.0 : theta[i]);
        }
    }
}

void Lion::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

RadamLookahead::RadamLookahead(std::vector<Tensor> params, Config cfg) : params_(std::move(params)), cfg_(cfg) {
    check_trainable(params_, "RadamLookahead");
    if (cfg_.lookahead_k < 1) throw ConfigError("lookahead interval must be at least 1");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    slow_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
        v_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
        slow_.emplace_back(p.values().begin(), p.values().end());
    }
}

void RadamLookahead::step() {
    ++step_;
    const double t = static_cast<double>(step_);
    const double b1t = std::pow(cfg_.beta1, t);
    const double b2t = std::pow(cfg_.beta2, t);
    const double rho_inf = 2.0 / (1.0 - cfg_.beta2) - 1.0;
    const double rho = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
    const bool rectified = rho > 4.0;
    double rect = 0.0;
    if (rectified)
        rect = std::sqrt(((rho - 4.0) * (rho - 2.0) * rho_inf) / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho));

    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        auto& m = m_[pi];
        auto& v = v_[pi];
        auto theta = p.raw_values();
        const bool has_grad = p.has_grad();
        std::span<const double> g;
        if (has_grad) g = p.grad();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = has_grad ? g[i] : 0.0;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double m_hat = m[i] / (1.0 - b1t);
            if (rectified) {
                const double v_hat = std::sqrt(v[i] / (1.0 - b2t));
                theta[i] -= cfg_.lr * rect * m_hat / (v_hat + cfg_.eps);
            } else {
                theta[i] -= cfg_.lr * m_hat;
            }
        }
    }

    if (step_ % cfg_.lookahead_k == 0) {
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            auto theta = params_[pi].raw_values();
            auto& slow = slow_[pi];
            for (std::size_t i = 0; i < theta.size(); ++i) {
                slow[i] += cfg_.lookahead_alpha * (theta[i] - slow[i]);
                theta[i] = slow[i];
            }
        }
    }
}

void RadamLookahead::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

} // namespace lsi
