#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lsi/errors.hpp"

namespace lsi {

using Shape = std::vector<int>;

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // allocated lazily
    bool requires_grad = false;
    bool needs_grad = false;
    bool is_leaf = true;
    std::uint64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

bool grad_enabled();

} // namespace detail

/// Disables tape recording within the current scope (pure forward passes).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Dense n-dimensional f64 tensor participating in reverse-mode autodiff.
/// Copying a Tensor copies the handle; the underlying storage is shared.
/// Nodes created by operations are immutable; only leaf tensors may be
/// mutated in place (parameter updates between training steps).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor ones(Shape shape, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int size() const;
    int dim(int axis) const;
    bool requires_grad() const;
    bool is_leaf() const;

    std::span<const double> values() const;
    /// Mutable access to a leaf's storage. Must not be called on tensors that
    /// participated in a recorded operation of a live graph.
    std::span<double> raw_values();
    std::span<const double> grad() const;
    bool has_grad() const;
    void zero_grad();
    void set_requires_grad(bool requires_grad);

    double item() const;
    double at(int flat_index) const;

    /// Runs reverse-mode accumulation from this scalar into all reachable
    /// leaves with requires_grad.
    void backward() const;

    /// New leaf with a copy of the values, detached from any graph.
    Tensor detach(bool requires_grad = false) const;

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

// elementwise (shapes equal, or one operand scalar-sized)
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor sub(const Tensor& a, double b);
Tensor sub(double a, const Tensor& b);
Tensor mul(const Tensor& a, double b);
Tensor div(const Tensor& a, double b);
Tensor neg(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, double b) { return add(a, b); }
inline Tensor operator+(double a, const Tensor& b) { return add(b, a); }
inline Tensor operator-(const Tensor& a, double b) { return sub(a, b); }
inline Tensor operator-(double a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, double b) { return mul(a, b); }
inline Tensor operator*(double a, const Tensor& b) { return mul(b, a); }
inline Tensor operator/(const Tensor& a, double b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

/// Zero gradient outside (lo, hi); identity inside.
Tensor clamp(const Tensor& a, double lo, double hi);
/// Subgradient sign(x), 0 at x = 0.
Tensor abs(const Tensor& a);
/// Gradient is zero everywhere.
Tensor sign(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double negative_slope = 0.2);
Tensor sigmoid(const Tensor& a);

// reductions
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
/// y = x * W^T + bias with x:[B x in], W:[out x in], bias:[out] (bias optional).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// convolution stack
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad);
Tensor upsample2x_nearest(const Tensor& x);
Tensor avg_pool2d(const Tensor& x, int k);
/// y[b,c,h,w] = x[b,c,h,w] * scale[b,c] + shift[b,c]
Tensor film(const Tensor& x, const Tensor& scale, const Tensor& shift);

/// Normalize along `axis` to zero mean / unit variance (population variance,
/// epsilon added before the square root). No affine parameters.
Tensor layer_norm(const Tensor& x, int axis);

// shape plumbing
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_last(const Tensor& a, const Tensor& b);
Tensor slice_last(const Tensor& x, int start, int len);
/// x:[B,L,C] -> [B,C] picking level i.
Tensor select_level(const Tensor& x, int level);
/// stack of [B,C] tensors -> [B,L,C].
Tensor stack_levels(const std::vector<Tensor>& levels);
/// x:[...] -> [B, ...] replicated; gradient sums over the batch.
Tensor broadcast_batch(const Tensor& x, int batch);
/// y[b,t,c] = sum_s Wg[t,s] * v[b,s,c] + bg[t]; the static level-mixing map.
Tensor level_mix(const Tensor& v, const Tensor& weight, const Tensor& bias);

/// Forward: 1 where x >= threshold else 0. Backward: straight-through, the
/// upstream gradient passes where 0 < x < 1 and is zeroed at the clamp
/// boundary (x <= 0 or x >= 1).
Tensor quantize_ste(const Tensor& x, double threshold = 0.5);

/// Max relative error between analytic gradients of f at leaf x and central
/// finite differences with step h. Mutates and restores x's values.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-5);

/// FNV-1a over the raw bytes of the values; used for freeze checks.
std::uint64_t value_checksum(const Tensor& t);

bool all_finite(const Tensor& t);

} // namespace lsi
