#include "lsi/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numeric>
#include <unordered_set>

namespace lsi {

namespace detail {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
thread_local bool g_grad_enabled = true;
} // namespace

bool grad_enabled() { return g_grad_enabled; }

void set_grad_enabled(bool on) { g_grad_enabled = on; }

} // namespace detail

NoGradGuard::NoGradGuard() : previous_(detail::grad_enabled()) { detail::set_grad_enabled(false); }
NoGradGuard::~NoGradGuard() { detail::set_grad_enabled(previous_); }

namespace {

using detail::Node;

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

std::shared_ptr<Node> make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    const std::int64_t n = shape_numel(shape);
    if (n != static_cast<std::int64_t>(data.size()))
        throw DimensionError("tensor data length does not match shape");
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    node->needs_grad = requires_grad;
    node->is_leaf = true;
    node->id = detail::g_next_id.fetch_add(1, std::memory_order_relaxed);
    return node;
}

/// Creates an op result node. Records parents and the backward closure only
/// when gradients can flow and recording is enabled.
Tensor make_op(Shape shape, std::vector<double> value, std::vector<std::shared_ptr<Node>> parents,
               std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->is_leaf = false;
    node->id = detail::g_next_id.fetch_add(1, std::memory_order_relaxed);
    bool needs = false;
    if (detail::grad_enabled()) {
        for (const auto& p : parents)
            if (p->needs_grad) needs = true;
    }
    node->needs_grad = needs;
    if (needs) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

void check_defined(const Tensor& t, const char* what) {
    if (!t.defined()) throw UsageError(std::string("undefined tensor passed to ") + what);
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// ---------------------------------------------------------------------------
// matmul kernels (row-major). Each output element is produced by exactly one
// pass, so results do not depend on scheduling.
// ---------------------------------------------------------------------------

// C[MxN] (+)= A[MxK] * B[KxN]
void mm(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::fill(crow, crow + n, 0.0);
        const double* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[MxN] (+)= A[MxK] * B[NxK]^T
void mm_abt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = accumulate ? crow[j] + acc : acc;
        }
    }
}

// C[MxN] (+)= A[KxM]^T * B[KxN]
void mm_atb(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
    for (int p = 0; p < k; ++p) {
        const double* arow = a + static_cast<std::size_t>(p) * m;
        const double* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Tensor basics
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value), requires_grad));
}

Tensor Tensor::ones(Shape shape, bool requires_grad) { return full(std::move(shape), 1.0, requires_grad); }

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(make_leaf(Shape{1}, std::vector<double>{value}, requires_grad));
}

const Shape& Tensor::shape() const {
    check_defined(*this, "shape()");
    return node_->shape;
}

int Tensor::size() const {
    check_defined(*this, "size()");
    return static_cast<int>(node_->value.size());
}

int Tensor::dim(int axis) const {
    const auto& s = shape();
    if (axis < 0) axis += static_cast<int>(s.size());
    if (axis < 0 || axis >= static_cast<int>(s.size())) throw DimensionError("dim(): axis out of range");
    return s[static_cast<std::size_t>(axis)];
}

bool Tensor::requires_grad() const {
    check_defined(*this, "requires_grad()");
    return node_->requires_grad;
}

bool Tensor::is_leaf() const {
    check_defined(*this, "is_leaf()");
    return node_->is_leaf;
}

std::span<const double> Tensor::values() const {
    check_defined(*this, "values()");
    return node_->value;
}

std::span<double> Tensor::raw_values() {
    check_defined(*this, "raw_values()");
    if (!node_->is_leaf) throw UsageError("raw_values(): only leaf tensors may be mutated");
    return node_->value;
}

std::span<const double> Tensor::grad() const {
    check_defined(*this, "grad()");
    if (node_->grad.empty()) throw UsageError("grad(): no gradient accumulated");
    return node_->grad;
}

bool Tensor::has_grad() const {
    check_defined(*this, "has_grad()");
    return !node_->grad.empty();
}

void Tensor::zero_grad() {
    check_defined(*this, "zero_grad()");
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::set_requires_grad(bool requires_grad) {
    check_defined(*this, "set_requires_grad()");
    if (!node_->is_leaf) throw UsageError("set_requires_grad(): only valid on leaves");
    node_->requires_grad = requires_grad;
    node_->needs_grad = requires_grad;
    if (!requires_grad) node_->grad.clear();
}

double Tensor::item() const {
    if (size() != 1) throw UsageError("item(): tensor is not scalar");
    return node_->value[0];
}

double Tensor::at(int flat_index) const {
    check_defined(*this, "at()");
    if (flat_index < 0 || flat_index >= size()) throw DimensionError("at(): index out of range");
    return node_->value[static_cast<std::size_t>(flat_index)];
}

Tensor Tensor::detach(bool requires_grad) const {
    check_defined(*this, "detach()");
    return from_data(node_->shape, node_->value, requires_grad);
}

void Tensor::backward() const {
    check_defined(*this, "backward()");
    if (size() != 1) throw UsageError("backward(): loss must be a scalar");
    if (!node_->needs_grad) throw UsageError("backward(): no gradient-requiring tensors reachable");

    // Collect the reachable recorded subgraph; creation ids give tape order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{node_.get()};
    seen.insert(node_.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (p->needs_grad && seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(order.begin(), order.end(), [](const Node* a, const Node* b) { return a->id > b->id; });

    // Fresh pass for intermediates; leaves keep accumulating across calls.
    for (Node* n : order) {
        if (n->is_leaf) continue;
        n->ensure_grad();
        std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (Node* n : order) {
        if (!n->backward_fn) continue;
        n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

namespace {

enum class BinKind { AA, AS, SA }; // tensor/tensor, tensor/scalar-tensor, scalar-tensor/tensor

/// Validates "equal shapes or one operand scalar" broadcasting.
BinKind bin_kind(const Tensor& a, const Tensor& b, const char* op) {
    if (a.size() == b.size() && a.shape() == b.shape()) return BinKind::AA;
    if (b.size() == 1) return BinKind::AS;
    if (a.size() == 1) return BinKind::SA;
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " are not broadcastable");
}

template <class FwdAA, class BwdA, class BwdB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, FwdAA fwd, BwdA bwd_a, BwdB bwd_b) {
    check_defined(a, name);
    check_defined(b, name);
    const BinKind kind = bin_kind(a, b, name);
    const Tensor& big = (kind == BinKind::SA) ? b : a;
    const std::size_t n = static_cast<std::size_t>(big.size());
    std::vector<double> out(n);
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (kind == BinKind::SA) ? av[0] : av[i];
        const double y = (kind == BinKind::AS) ? bv[0] : bv[i];
        out[i] = fwd(x, y);
    }
    return make_op(big.shape(), std::move(out), {a.node(), b.node()}, [kind, bwd_a, bwd_b](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const std::size_t n = self.value.size();
        if (pa.needs_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double x = (kind == BinKind::SA) ? pa.value[0] : pa.value[i];
                const double y = (kind == BinKind::AS) ? pb.value[0] : pb.value[i];
                const double g = self.grad[i] * bwd_a(x, y);
                pa.grad[(kind == BinKind::SA) ? 0 : i] += g;
            }
        }
        if (pb.needs_grad) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double x = (kind == BinKind::SA) ? pa.value[0] : pa.value[i];
                const double y = (kind == BinKind::AS) ? pb.value[0] : pb.value[i];
                const double g = self.grad[i] * bwd_b(x, y);
                pb.grad[(kind == BinKind::AS) ? 0 : i] += g;
            }
        }
    });
}

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
    check_defined(a, name);
    const std::size_t n = static_cast<std::size_t>(a.size());
    std::vector<double> out(n);
    const auto av = a.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
    return make_op(a.shape(), std::move(out), {a.node()}, [bwd](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i)
            p.grad[i] += self.grad[i] * bwd(p.value[i], self.value[i]);
    });
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "div", [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Tensor add(const Tensor& a, double b) {
    return unary_op(
        a, "add", [b](double x) { return x + b; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, double b) { return add(a, -b); }

Tensor sub(double a, const Tensor& b) {
    return unary_op(
        b, "sub", [a](double x) { return a - x; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, double b) {
    return unary_op(
        a, "mul", [b](double x) { return x * b; }, [b](double, double) { return b; });
}

Tensor div(const Tensor& a, double b) { return mul(a, 1.0 / b); }

Tensor neg(const Tensor& a) { return mul(a, -1.0); }

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) throw UsageError("clamp: lo must not exceed hi");
    return unary_op(
        a, "clamp", [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& a) {
    return unary_op(
        a, "abs", [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor sign(const Tensor& a) {
    return unary_op(
        a, "sign", [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); },
        [](double, double) { return 0.0; });
}

Tensor leaky_relu(const Tensor& a, double negative_slope) {
    return unary_op(
        a, "leaky_relu", [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; },
        [negative_slope](double x, double) { return x > 0.0 ? 1.0 : negative_slope; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor quantize_ste(const Tensor& x, double threshold) {
    return unary_op(
        x, "quantize_ste", [threshold](double v) { return v >= threshold ? 1.0 : 0.0; },
        [](double v, double) { return (v > 0.0 && v < 1.0) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
    check_defined(a, "sum");
    const auto av = a.values();
    double s = 0.0;
    for (double v : av) s += v;
    return make_op(Shape{1}, {s}, {a.node()}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        const double g = self.grad[0];
        for (double& gv : p.grad) gv += g;
    });
}

Tensor mean(const Tensor& a) {
    check_defined(a, "mean");
    const auto av = a.values();
    double s = 0.0;
    for (double v : av) s += v;
    const double inv = 1.0 / static_cast<double>(av.size());
    return make_op(Shape{1}, {s * inv}, {a.node()}, [inv](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        const double g = self.grad[0] * inv;
        for (double& gv : p.grad) gv += g;
    });
}

// ---------------------------------------------------------------------------
// matmul / linear
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_defined(a, "matmul");
    check_defined(b, "matmul");
    if (a.shape().size() != 2 || b.shape().size() != 2) throw DimensionError("matmul: operands must be 2-D");
    const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2)
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    mm(a.values().data(), b.values().data(), out.data(), m, k, n, false);
    return make_op(Shape{m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.needs_grad) {
            pa.ensure_grad();
            mm_abt(self.grad.data(), pb.value.data(), pa.grad.data(), m, n, k, true); // dA = G * B^T
        }
        if (pb.needs_grad) {
            pb.ensure_grad();
            mm_atb(pa.value.data(), self.grad.data(), pb.grad.data(), k, m, n, true); // dB = A^T * G
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    check_defined(x, "linear");
    check_defined(weight, "linear");
    if (x.shape().size() != 2 || weight.shape().size() != 2) throw DimensionError("linear: x and weight must be 2-D");
    const int batch = x.dim(0), in = x.dim(1);
    const int out_dim = weight.dim(0);
    if (weight.dim(1) != in)
        throw DimensionError("linear: weight " + shape_str(weight.shape()) + " does not match input width " +
                             std::to_string(in));
    const bool has_bias = bias.defined();
    if (has_bias && bias.size() != out_dim) throw DimensionError("linear: bias length mismatch");

    std::vector<double> out(static_cast<std::size_t>(batch) * out_dim);
    mm_abt(x.values().data(), weight.values().data(), out.data(), batch, in, out_dim, false);
    if (has_bias) {
        const auto bv = bias.values();
        for (int i = 0; i < batch; ++i)
            for (int j = 0; j < out_dim; ++j) out[static_cast<std::size_t>(i) * out_dim + j] += bv[j];
    }
    std::vector<std::shared_ptr<Node>> parents{x.node(), weight.node()};
    if (has_bias) parents.push_back(bias.node());
    return make_op(Shape{batch, out_dim}, std::move(out), std::move(parents),
                   [batch, in, out_dim, has_bias](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pw = *self.parents[1];
                       if (px.needs_grad) {
                           px.ensure_grad();
                           mm(self.grad.data(), pw.value.data(), px.grad.data(), batch, out_dim, in, true);
                       }
                       if (pw.needs_grad) {
                           pw.ensure_grad();
                           mm_atb(self.grad.data(), px.value.data(), pw.grad.data(), out_dim, batch, in, true);
                       }
                       if (has_bias) {
                           Node& pb = *self.parents[2];
                           if (pb.needs_grad) {
                               pb.ensure_grad();
                               for (int i = 0; i < batch; ++i)
                                   for (int j = 0; j < out_dim; ++j)
                                       pb.grad[static_cast<std::size_t>(j)] +=
                                           self.grad[static_cast<std::size_t>(i) * out_dim + j];
                           }
                       }
                   });
}

// ---------------------------------------------------------------------------
// convolution stack
// ---------------------------------------------------------------------------

namespace {

struct ConvDims {
    int batch, in_ch, in_h, in_w;
    int out_ch, k, stride, pad;
    int out_h, out_w;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
    if (x.shape().size() != 4) throw DimensionError("conv2d: input must be [B,C,H,W]");
    if (w.shape().size() != 4) throw DimensionError("conv2d: weight must be [O,C,k,k]");
    ConvDims d{};
    d.batch = x.dim(0);
    d.in_ch = x.dim(1);
    d.in_h = x.dim(2);
    d.in_w = x.dim(3);
    d.out_ch = w.dim(0);
    d.k = w.dim(2);
    if (w.dim(3) != d.k) throw DimensionError("conv2d: kernel must be square");
    if (d.k % 2 == 0) throw DimensionError("conv2d: kernel size must be odd");
    if (w.dim(1) != d.in_ch)
        throw DimensionError("conv2d: weight channels " + std::to_string(w.dim(1)) + " do not match input channels " +
                             std::to_string(d.in_ch));
    if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
    if (pad < 0) throw DimensionError("conv2d: pad must be >= 0");
    d.stride = stride;
    d.pad = pad;
    d.out_h = (d.in_h + 2 * pad - d.k) / stride + 1;
    d.out_w = (d.in_w + 2 * pad - d.k) / stride + 1;
    if (d.out_h <= 0 || d.out_w <= 0) throw DimensionError("conv2d: output would be empty");
    return d;
}

// cols: [out_h*out_w rows x in_ch*k*k cols] for one image
void im2col(const double* img, const ConvDims& d, double* cols) {
    const int patch = d.in_ch * d.k * d.k;
    for (int oy = 0; oy < d.out_h; ++oy) {
        for (int ox = 0; ox < d.out_w; ++ox) {
            double* row = cols + (static_cast<std::size_t>(oy) * d.out_w + ox) * patch;
            int idx = 0;
            for (int c = 0; c < d.in_ch; ++c) {
                const double* plane = img + static_cast<std::size_t>(c) * d.in_h * d.in_w;
                for (int ky = 0; ky < d.k; ++ky) {
                    const int iy = oy * d.stride - d.pad + ky;
                    for (int kx = 0; kx < d.k; ++kx) {
                        const int ix = ox * d.stride - d.pad + kx;
                        row[idx++] = (iy >= 0 && iy < d.in_h && ix >= 0 && ix < d.in_w)
                                         ? plane[static_cast<std::size_t>(iy) * d.in_w + ix]
                                         : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_accum(const double* cols, const ConvDims& d, double* img_grad) {
    const int patch = d.in_ch * d.k * d.k;
    for (int oy = 0; oy < d.out_h; ++oy) {
        for (int ox = 0; ox < d.out_w; ++ox) {
            const double* row = cols + (static_cast<std::size_t>(oy) * d.out_w + ox) * patch;
            int idx = 0;
            for (int c = 0; c < d.in_ch; ++c) {
                double* plane = img_grad + static_cast<std::size_t>(c) * d.in_h * d.in_w;
                for (int ky = 0; ky < d.k; ++ky) {
                    const int iy = oy * d.stride - d.pad + ky;
                    for (int kx = 0; kx < d.k; ++kx, ++idx) {
                        const int ix = ox * d.stride - d.pad + kx;
                        if (iy >= 0 && iy < d.in_h && ix >= 0 && ix < d.in_w)
                            plane[static_cast<std::size_t>(iy) * d.in_w + ix] += row[idx];
                    }
                }
            }
        }
    }
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    check_defined(x, "conv2d");
    check_defined(weight, "conv2d");
    const ConvDims d = conv_dims(x, weight, stride, pad);
    const bool has_bias = bias.defined();
    if (has_bias && bias.size() != d.out_ch) throw DimensionError("conv2d: bias length mismatch");

    const int patch = d.in_ch * d.k * d.k;
    const int npix = d.out_h * d.out_w;
    std::vector<double> out(static_cast<std::size_t>(d.batch) * d.out_ch * npix);
    std::vector<double> cols(static_cast<std::size_t>(npix) * patch);
    std::vector<double> prod(static_cast<std::size_t>(npix) * d.out_ch);
    const auto xv = x.values();
    const auto wv = weight.values();
    for (int b = 0; b < d.batch; ++b) {
        im2col(xv.data() + static_cast<std::size_t>(b) * d.in_ch * d.in_h * d.in_w, d, cols.data());
        mm_abt(cols.data(), wv.data(), prod.data(), npix, patch, d.out_ch, false);
        double* dst = out.data() + static_cast<std::size_t>(b) * d.out_ch * npix;
        for (int p = 0; p < npix; ++p)
            for (int o = 0; o < d.out_ch; ++o) dst[static_cast<std::size_t>(o) * npix + p] = prod[static_cast<std::size_t>(p) * d.out_ch + o];
        if (has_bias) {
            const auto bv = bias.values();
            for (int o = 0; o < d.out_ch; ++o) {
                double* plane = dst + static_cast<std::size_t>(o) * npix;
                for (int p = 0; p < npix; ++p) plane[p] += bv[o];
            }
        }
    }

    std::vector<std::shared_ptr<Node>> parents{x.node(), weight.node()};
    if (has_bias) parents.push_back(bias.node());
    return make_op(Shape{d.batch, d.out_ch, d.out_h, d.out_w}, std::move(out), std::move(parents),
                   [d, has_bias](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pw = *self.parents[1];
                       const int patch = d.in_ch * d.k * d.k;
                       const int npix = d.out_h * d.out_w;
                       std::vector<double> cols(static_cast<std::size_t>(npix) * patch);
                       std::vector<double> gmat(static_cast<std::size_t>(d.out_ch) * npix);
                       std::vector<double> dcols(static_cast<std::size_t>(npix) * patch);
                       if (px.needs_grad) px.ensure_grad();
                       if (pw.needs_grad) pw.ensure_grad();
                       for (int b = 0; b < d.batch; ++b) {
                           const double* g = self.grad.data() + static_cast<std::size_t>(b) * d.out_ch * npix;
                           if (pw.needs_grad) {
                               im2col(px.value.data() + static_cast<std::size_t>(b) * d.in_ch * d.in_h * d.in_w, d,
                                      cols.data());
                               // dW[o,patch] += G[o,pix] * cols[pix,patch]
                               mm(g, cols.data(), pw.grad.data(), d.out_ch, npix, patch, true);
                           }
                           if (px.needs_grad) {
                               // dcols[pix,patch] = G^T[pix,o] * W[o,patch]
                               mm_atb(g, pw.value.data(), dcols.data(), npix, d.out_ch, patch, false);
                               col2im_accum(dcols.data(), d,
                                            px.grad.data() + static_cast<std::size_t>(b) * d.in_ch * d.in_h * d.in_w);
                           }
                       }
                       if (has_bias) {
                           Node& pb = *self.parents[2];
                           if (pb.needs_grad) {
                               pb.ensure_grad();
                               for (int b = 0; b < d.batch; ++b) {
                                   const double* g = self.grad.data() + static_cast<std::size_t>(b) * d.out_ch * npix;
                                   for (int o = 0; o < d.out_ch; ++o) {
                                       double acc = 0.0;
                                       const double* plane = g + static_cast<std::size_t>(o) * npix;
                                       for (int p = 0; p < npix; ++p) acc += plane[p];
                                       pb.grad[static_cast<std::size_t>(o)] += acc;
                                   }
                               }
                           }
                       }
                   });
}

Tensor upsample2x_nearest(const Tensor& x) {
    check_defined(x, "upsample2x_nearest");
    if (x.shape().size() != 4) throw DimensionError("upsample2x_nearest: input must be [B,C,H,W]");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    std::vector<double> out(static_cast<std::size_t>(b) * c * h * 2 * w * 2);
    const auto xv = x.values();
    const int oh = 2 * h, ow = 2 * w;
    for (int i = 0; i < b * c; ++i) {
        const double* src = xv.data() + static_cast<std::size_t>(i) * h * w;
        double* dst = out.data() + static_cast<std::size_t>(i) * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx)
                dst[static_cast<std::size_t>(y) * ow + xx] = src[static_cast<std::size_t>(y / 2) * w + xx / 2];
    }
    return make_op(Shape{b, c, 2 * h, 2 * w}, std::move(out), {x.node()}, [b, c, h, w](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        const int oh = 2 * h, ow = 2 * w;
        for (int i = 0; i < b * c; ++i) {
            double* dst = p.grad.data() + static_cast<std::size_t>(i) * h * w;
            const double* g = self.grad.data() + static_cast<std::size_t>(i) * oh * ow;
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx)
                    dst[static_cast<std::size_t>(y / 2) * w + xx / 2] += g[static_cast<std::size_t>(y) * ow + xx];
        }
    });
}

Tensor avg_pool2d(const Tensor& x, int k) {
    check_defined(x, "avg_pool2d");
    if (x.shape().size() != 4) throw DimensionError("avg_pool2d: input must be [B,C,H,W]");
    if (k < 1) throw DimensionError("avg_pool2d: k must be >= 1");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % k != 0 || w % k != 0) throw DimensionError("avg_pool2d: spatial size must divide k");
    const int oh = h / k, ow = w / k;
    const double inv = 1.0 / (k * k);
    std::vector<double> out(static_cast<std::size_t>(b) * c * oh * ow);
    const auto xv = x.values();
    for (int i = 0; i < b * c; ++i) {
        const double* src = xv.data() + static_cast<std::size_t>(i) * h * w;
        double* dst = out.data() + static_cast<std::size_t>(i) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            for (int xx = 0; xx < ow; ++xx) {
                double acc = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx)
                        acc += src[static_cast<std::size_t>(y * k + dy) * w + (xx * k + dx)];
                dst[static_cast<std::size_t>(y) * ow + xx] = acc * inv;
            }
        }
    }
    return make_op(Shape{b, c, oh, ow}, std::move(out), {x.node()}, [b, c, h, w, k, inv](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        const int oh = h / k, ow = w / k;
        for (int i = 0; i < b * c; ++i) {
            double* dst = p.grad.data() + static_cast<std::size_t>(i) * h * w;
            const double* g = self.grad.data() + static_cast<std::size_t>(i) * oh * ow;
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) {
                    const double gv = g[static_cast<std::size_t>(y) * ow + xx] * inv;
                    for (int dy = 0; dy < k; ++dy)
                        for (int dx = 0; dx < k; ++dx)
                            dst[static_cast<std::size_t>(y * k + dy) * w + (xx * k + dx)] += gv;
                }
        }
    });
}

Tensor film(const Tensor& x, const Tensor& scale, const Tensor& shift) {
    check_defined(x, "film");
    check_defined(scale, "film");
    check_defined(shift, "film");
    if (x.shape().size() != 4) throw DimensionError("film: input must be [B,C,H,W]");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (scale.shape() != Shape{b, c} || shift.shape() != Shape{b, c})
        throw DimensionError("film: scale/shift must be [B,C]");
    const int npix = h * w;
    std::vector<double> out(static_cast<std::size_t>(b) * c * npix);
    const auto xv = x.values();
    const auto sv = scale.values();
    const auto tv = shift.values();
    for (int i = 0; i < b * c; ++i) {
        const double s = sv[static_cast<std::size_t>(i)];
        const double t = tv[static_cast<std::size_t>(i)];
        const double* src = xv.data() + static_cast<std::size_t>(i) * npix;
        double* dst = out.data() + static_cast<std::size_t>(i) * npix;
        for (int p = 0; p < npix; ++p) dst[p] = src[p] * s + t;
    }
    return make_op(Shape{b, c, h, w}, std::move(out), {x.node(), scale.node(), shift.node()}, [b, c, npix](Node& self) {
        Node& px = *self.parents[0];
        Node& ps = *self.parents[1];
        Node& pt = *self.parents[2];
        if (px.needs_grad) px.ensure_grad();
        if (ps.needs_grad) ps.ensure_grad();
        if (pt.needs_grad) pt.ensure_grad();
        for (int i = 0; i < b * c; ++i) {
            const double* g = self.grad.data() + static_cast<std::size_t>(i) * npix;
            const double* xvp = px.value.data() + static_cast<std::size_t>(i) * npix;
            if (px.needs_grad) {
                const double s = ps.value[static_cast<std::size_t>(i)];
                double* dst = px.grad.data() + static_cast<std::size_t>(i) * npix;
                for (int p = 0; p < npix; ++p) dst[p] += g[p] * s;
            }
            if (ps.needs_grad) {
                double acc = 0.0;
                for (int p = 0; p < npix; ++p) acc += g[p] * xvp[p];
                ps.grad[static_cast<std::size_t>(i)] += acc;
            }
            if (pt.needs_grad) {
                double acc = 0.0;
                for (int p = 0; p < npix; ++p) acc += g[p];
                pt.grad[static_cast<std::size_t>(i)] += acc;
            }
        }
    });
}

// ---------------------------------------------------------------------------
// layer_norm
// ---------------------------------------------------------------------------

Tensor layer_norm(const Tensor& x, int axis) {
    check_defined(x, "layer_norm");
    const auto& s = x.shape();
    const int rank = static_cast<int>(s.size());
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) throw DimensionError("layer_norm: axis out of range");
    constexpr double kEps = 1e-5;

    int outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
    const int len = s[static_cast<std::size_t>(axis)];
    for (int i = axis + 1; i < rank; ++i) inner *= s[static_cast<std::size_t>(i)];

    const auto xv = x.values();
    std::vector<double> out(xv.size());
    std::vector<double> inv_std(static_cast<std::size_t>(outer) * inner);
    for (int o = 0; o < outer; ++o) {
        for (int i = 0; i < inner; ++i) {
            const std::size_t base = static_cast<std::size_t>(o) * len * inner + i;
            double m = 0.0;
            for (int j = 0; j < len; ++j) m += xv[base + static_cast<std::size_t>(j) * inner];
            m /= len;
            double var = 0.0;
            for (int j = 0; j < len; ++j) {
                const double dv = xv[base + static_cast<std::size_t>(j) * inner] - m;
                var += dv * dv;
            }
            var /= len;
            const double is = 1.0 / std::sqrt(var + kEps);
            inv_std[static_cast<std::size_t>(o) * inner + i] = is;
            for (int j = 0; j < len; ++j) {
                const std::size_t idx = base + static_cast<std::size_t>(j) * inner;
                out[idx] = (xv[idx] - m) * is;
            }
        }
    }
    return make_op(x.shape(), std::move(out), {x.node()},
                   [outer, len, inner, inv_std = std::move(inv_std)](Node& self) {
                       Node& p = *self.parents[0];
                       if (!p.needs_grad) return;
                       p.ensure_grad();
                       for (int o = 0; o < outer; ++o) {
                           for (int i = 0; i < inner; ++i) {
                               const std::size_t base = static_cast<std::size_t>(o) * len * inner + i;
                               const double is = inv_std[static_cast<std::size_t>(o) * inner + i];
                               double gm = 0.0, gym = 0.0;
                               for (int j = 0; j < len; ++j) {
                                   const std::size_t idx = base + static_cast<std::size_t>(j) * inner;
                                   gm += self.grad[idx];
                                   gym += self.grad[idx] * self.value[idx];
                               }
                               gm /= len;
                               gym /= len;
                               for (int j = 0; j < len; ++j) {
                                   const std::size_t idx = base + static_cast<std::size_t>(j) * inner;
                                   p.grad[idx] += is * (self.grad[idx] - gm - self.value[idx] * gym);
                               }
                           }
                       }
                   });
}

// ---------------------------------------------------------------------------
// shape plumbing
// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape) {
    check_defined(x, "reshape");
    if (shape_numel(shape) != x.size()) throw DimensionError("reshape: element count mismatch");
    std::vector<double> out(x.values().begin(), x.values().end());
    return make_op(std::move(shape), std::move(out), {x.node()}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    });
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
    check_defined(a, "concat_last");
    check_defined(b, "concat_last");
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.size() != sb.size() || sa.empty()) throw DimensionError("concat_last: rank mismatch");
    for (std::size_t i = 0; i + 1 < sa.size(); ++i)
        if (sa[i] != sb[i]) throw DimensionError("concat_last: leading dimensions differ");
    const int la = sa.back(), lb = sb.back();
    int outer = 1;
    for (std::size_t i = 0; i + 1 < sa.size(); ++i) outer *= sa[i];
    Shape out_shape = sa;
    out_shape.back() = la + lb;
    std::vector<double> out(static_cast<std::size_t>(outer) * (la + lb));
    const auto av = a.values();
    const auto bv = b.values();
    for (int o = 0; o < outer; ++o) {
        std::copy_n(av.data() + static_cast<std::size_t>(o) * la, la,
                    out.data() + static_cast<std::size_t>(o) * (la + lb));
        std::copy_n(bv.data() + static_cast<std::size_t>(o) * lb, lb,
                    out.data() + static_cast<std::size_t>(o) * (la + lb) + la);
    }
    return make_op(std::move(out_shape), std::move(out), {a.node(), b.node()}, [outer, la, lb](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.needs_grad) pa.ensure_grad();
        if (pb.needs_grad) pb.ensure_grad();
        for (int o = 0; o < outer; ++o) {
            const double* g = self.grad.data() + static_cast<std::size_t>(o) * (la + lb);
            if (pa.needs_grad)
                for (int i = 0; i < la; ++i) pa.grad[static_cast<std::size_t>(o) * la + i] += g[i];
            if (pb.needs_grad)
                for (int i = 0; i < lb; ++i) pb.grad[static_cast<std::size_t>(o) * lb + i] += g[la + i];
        }
    });
}

Tensor slice_last(const Tensor& x, int start, int len) {
    check_defined(x, "slice_last");
    const auto& s = x.shape();
    if (s.empty()) throw DimensionError("slice_last: rank 0");
    const int last = s.back();
    if (start < 0 || len <= 0 || start + len > last) throw DimensionError("slice_last: range out of bounds");
    int outer = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) outer *= s[i];
    Shape out_shape = s;
    out_shape.back() = len;
    std::vector<double> out(static_cast<std::size_t>(outer) * len);
    const auto xv = x.values();
    for (int o = 0; o < outer; ++o)
        std::copy_n(xv.data() + static_cast<std::size_t>(o) * last + start, len,
                    out.data() + static_cast<std::size_t>(o) * len);
    return make_op(std::move(out_shape), std::move(out), {x.node()}, [outer, last, start, len](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        for (int o = 0; o < outer; ++o) {
            const double* g = self.grad.data() + static_cast<std::size_t>(o) * len;
            double* dst = p.grad.data() + static_cast<std::size_t>(o) * last + start;
            for (int i = 0; i < len; ++i) dst[i] += g[i];
        }
    });
}

Tensor select_level(const Tensor& x, int level) {
    check_defined(x, "select_level");
    if (x.shape().size() != 3) throw DimensionError("select_level: input must be [B,L,C]");
    const int b = x.dim(0), l = x.dim(1), c = x.dim(2);
    if (level < 0 || level >= l) throw DimensionError("select_level: level out of range");
    std::vector<double> out(static_cast<std::size_t>(b) * c);
    const auto xv = x.values();
    for (int i = 0; i < b; ++i)
        std::copy_n(xv.data() + (static_cast<std::size_t>(i) * l + level) * c, c,
                    out.data() + static_cast<std::size_t>(i) * c);
    return make_op(Shape{b, c}, std::move(out), {x.node()}, [b, l, c, level](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        for (int i = 0; i < b; ++i) {
            const double* g = self.grad.data() + static_cast<std::size_t>(i) * c;
            double* dst = p.grad.data() + (static_cast<std::size_t>(i) * l + level) * c;
            for (int j = 0; j < c; ++j) dst[j] += g[j];
        }
    });
}

Tensor stack_levels(const std::vector<Tensor>& levels) {
    if (levels.empty()) throw DimensionError("stack_levels: empty input");
    const int l = static_cast<int>(levels.size());
    for (const auto& t : levels) check_defined(t, "stack_levels");
    const int b = levels[0].dim(0), c = levels[0].dim(1);
    std::vector<std::shared_ptr<detail::Node>> parents;
    for (const auto& t : levels) {
        if (t.shape() != Shape{b, c}) throw DimensionError("stack_levels: inconsistent level shapes");
        parents.push_back(t.node());
    }
    std::vector<double> out(static_cast<std::size_t>(b) * l * c);
    for (int j = 0; j < l; ++j) {
        const auto lv = levels[static_cast<std::size_t>(j)].values();
        for (int i = 0; i < b; ++i)
            std::copy_n(lv.data() + static_cast<std::size_t>(i) * c, c,
                        out.data() + (static_cast<std::size_t>(i) * l + j) * c);
    }
    return make_op(Shape{b, l, c}, std::move(out), std::move(parents), [b, l, c](Node& self) {
        for (int j = 0; j < l; ++j) {
            Node& p = *self.parents[static_cast<std::size_t>(j)];
            if (!p.needs_grad) continue;
            p.ensure_grad();
            for (int i = 0; i < b; ++i) {
                const double* g = self.grad.data() + (static_cast<std::size_t>(i) * l + j) * c;
                double* dst = p.grad.data() + static_cast<std::size_t>(i) * c;
                for (int q = 0; q < c; ++q) dst[q] += g[q];
            }
        }
    });
}

Tensor broadcast_batch(const Tensor& x, int batch) {
    check_defined(x, "broadcast_batch");
    if (batch < 1) throw DimensionError("broadcast_batch: batch must be >= 1");
    const int n = x.size();
    Shape out_shape;
    out_shape.push_back(batch);
    for (int d : x.shape()) out_shape.push_back(d);
    std::vector<double> out(static_cast<std::size_t>(batch) * n);
    const auto xv = x.values();
    for (int b = 0; b < batch; ++b) std::copy_n(xv.data(), n, out.data() + static_cast<std::size_t>(b) * n);
    return make_op(std::move(out_shape), std::move(out), {x.node()}, [batch, n](Node& self) {
        Node& p = *self.parents[0];
        if (!p.needs_grad) return;
        p.ensure_grad();
        for (int b = 0; b < batch; ++b) {
            const double* g = self.grad.data() + static_cast<std::size_t>(b) * n;
            for (int i = 0; i < n; ++i) p.grad[static_cast<std::size_t>(i)] += g[i];
        }
    });
}

Tensor level_mix(const Tensor& v, const Tensor& weight, const Tensor& bias) {
    check_defined(v, "level_mix");
    check_defined(weight, "level_mix");
    check_defined(bias, "level_mix");
    if (v.shape().size() != 3) throw DimensionError("level_mix: input must be [B,L,C]");
    const int b = v.dim(0), l = v.dim(1), c = v.dim(2);
    if (weight.shape() != Shape{l, l}) throw DimensionError("level_mix: weight must be [L,L]");
    if (bias.size() != l) throw DimensionError("level_mix: bias must have length L");
    std::vector<double> out(static_cast<std::size_t>(b) * l * c);
    const auto vv = v.values();
    const auto wv = weight.values();
    const auto bv = bias.values();
    for (int i = 0; i < b; ++i) {
        const double* src = vv.data() + static_cast<std::size_t>(i) * l * c;
        double* dst = out.data() + static_cast<std::size_t>(i) * l * c;
        for (int t = 0; t < l; ++t) {
            double* drow = dst + static_cast<std::size_t>(t) * c;
            std::fill(drow, drow + c, bv[t]);
            for (int s = 0; s < l; ++s) {
                const double w = wv[static_cast<std::size_t>(t) * l + s];
                if (w == 0.0) continue;
                const double* srow = src + static_cast<std::size_t>(s) * c;
                for (int q = 0; q < c; ++q) drow[q] += w * srow[q];
            }
        }
    }
    return make_op(Shape{b, l, c}, std::move(out), {v.node(), weight.node(), bias.node()}, [b, l, c](Node& self) {
        Node& pv = *self.parents[0];
        Node& pw = *self.parents[1];
        Node& pb = *self.parents[2];
        if (pv.needs_grad) pv.ensure_grad();
        if (pw.needs_grad) pw.ensure_grad();
        if (pb.needs_grad) pb.ensure_grad();
        for (int i = 0; i < b; ++i) {
            const double* g = self.grad.data() + static_cast<std::size_t>(i) * l * c;
            const double* src = pv.value.data() + static_cast<std::size_t>(i) * l * c;
            for (int t = 0; t < l; ++t) {
                const double* grow = g + static_cast<std::size_t>(t) * c;
                if (pb.needs_grad) {
                    double acc = 0.0;
                    for (int q = 0; q < c; ++q) acc += grow[q];
                    pb.grad[static_cast<std::size_t>(t)] += acc;
                }
                for (int s = 0; s < l; ++s) {
                    const double* srow = src + static_cast<std::size_t>(s) * c;
                    if (pw.needs_grad) {
                        double acc = 0.0;
                        for (int q = 0; q < c; ++q) acc += grow[q] * srow[q];
                        pw.grad[static_cast<std::size_t>(t) * l + s] += acc;
                    }
                    if (pv.needs_grad) {
                        const double w = pw.value[static_cast<std::size_t>(t) * l + s];
                        if (w == 0.0) continue;
                        double* drow = pv.grad.data() + static_cast<std::size_t>(i) * l * c +
                                       static_cast<std::size_t>(s) * c;
                        for (int q = 0; q < c; ++q) drow[q] += w * grow[q];
                    }
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// verification helpers
// ---------------------------------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h) {
    if (!x.requires_grad() || !x.is_leaf()) throw UsageError("grad_check: x must be a leaf with requires_grad");
    x.zero_grad();
    Tensor loss = f(x);
    if (loss.size() != 1) throw UsageError("grad_check: f must return a scalar");
    loss.backward();
    std::vector<double> analytic(x.size(), 0.0);
    if (x.has_grad()) {
        const auto g = x.grad();
        analytic.assign(g.begin(), g.end());
    }

    auto vals = x.raw_values();
    double max_rel = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        const double orig = vals[i];
        vals[i] = orig + h;
        double fp, fm;
        {
            NoGradGuard ng;
            fp = f(x).item();
            vals[i] = orig - h;
            fm = f(x).item();
        }
        vals[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double denom = std::max({std::fabs(numeric), std::fabs(analytic[static_cast<std::size_t>(i)]), 1e-4});
        max_rel = std::max(max_rel, std::fabs(analytic[static_cast<std::size_t>(i)] - numeric) / denom);
    }
    return max_rel;
}

std::uint64_t value_checksum(const Tensor& t) {
    std::uint64_t hash = 1469598103934665603ull;
    for (double v : t.values()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            hash ^= (bits >> (8 * i)) & 0xFFu;
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

bool all_finite(const Tensor& t) {
    for (double v : t.values())
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace lsi
