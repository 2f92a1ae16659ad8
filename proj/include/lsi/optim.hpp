#pragma once

#include <vector>

#include "lsi/tensor.hpp"

namespace lsi {

/// Sign-momentum optimizer used for the mask logits. With
/// `project_unit_interval` every step ends by clamping parameters into
/// [0,1], which keeps the logits physically meaningful.
class Lion {
public:
    struct Config {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.99;
        double weight_decay = 0.0;
        bool project_unit_interval = false;
    };

    Lion(std::vector<Tensor> params, Config cfg);

    void step();
    void zero_grad();
    const Config& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> momentum_;
    Config cfg_;
};

/// Rectified Adam wrapped in Lookahead slow/fast weights (the "Ranger"
/// combination). While the variance estimate is still unreliable the update
/// falls back to plain momentum.
class RadamLookahead {
public:
    struct Config {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        int lookahead_k = 5;
        double lookahead_alpha = 0.5;
    };

    RadamLookahead(std::vector<Tensor> params, Config cfg);

    void step();
    void zero_grad();
    long long step_count() const { return step_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::vector<std::vector<double>> slow_;
    Config cfg_;
    long long step_ = 0;
};

} // namespace lsi
