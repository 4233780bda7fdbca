#include "hmptcp/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "hmptcp/nn/kernels.hpp"

namespace hmptcp::nn {

namespace {

void init_uniform(Matrix& m, double bound, sim::RandomStream& rng) {
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

void add_bias(Matrix& y, const Matrix& bias) {
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double* yr = y.row(r).data();
        for (std::size_t c = 0; c < y.cols(); ++c) yr[c] += bias(0, c);
    }
}

void accumulate_column_sums(const Matrix& d, Matrix& out) {
    for (std::size_t r = 0; r < d.rows(); ++r) kernels().axpy(d.cols(), 1.0, d.row(r).data(), out.data());
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void activate(Matrix& y, Activation act) {
    switch (act) {
        case Activation::Relu:
            for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Tanh:
            for (double& v : y.values()) v = std::tanh(v);
            break;
        case Activation::Linear: break;
    }
}

Matrix affine(const Matrix& x, const Parameter& w, const Parameter& b) {
    if (x.cols() != w.value.cols()) {
        throw std::invalid_argument("dense input width " + std::to_string(x.cols()) + " != " +
                                    std::to_string(w.value.cols()));
    }
    Matrix y(x.rows(), w.value.rows());
    kernels().gemm_nt(x.rows(), w.value.rows(), x.cols(), x.data(), w.value.data(), y.data());
    add_bias(y, b.value);
    return y;
}

}  // namespace

Dense::Dense(const std::string& name, std::size_t in, std::size_t out, Activation act, sim::RandomStream& rng)
    : weight(name + ".weight", out, in), bias(name + ".bias", 1, out), act_(act) {
    if (in == 0 || out == 0) throw std::invalid_argument("dense layer needs non-zero dimensions");
    init_uniform(weight.value, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

Matrix Dense::infer(const Matrix& x) const {
    Matrix y = affine(x, weight, bias);
    activate(y, act_);
    return y;
}

std::vector<double> Dense::apply(std::span<const double> x) const { return infer(Matrix::row_vector(x)).values(); }

const Matrix& Dense::forward(const Matrix& x) {
    z_ = affine(x, weight, bias);
    y_ = z_;
    activate(y_, act_);
    x_ = x;
    primed_ = true;
    return y_;
}

Matrix Dense::backward(const Matrix& dy, bool param_grads, const Matrix* dz_extra) {
    if (!primed_) throw std::logic_error("dense backward without a forward pass");
    if (!dy.same_shape(y_)) throw std::invalid_argument("dense backward: gradient shape mismatch");
    Matrix dz = dy;
    switch (act_) {
        case Activation::Relu:
            for (std::size_t i = 0; i < dz.size(); ++i) {
                if (!(y_.data()[i] > 0.0)) dz.data()[i] = 0.0;
            }
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < dz.size(); ++i) dz.data()[i] *= 1.0 - y_.data()[i] * y_.data()[i];
            break;
        case Activation::Linear: break;
    }
    if (dz_extra) {
        if (!dz_extra->same_shape(dz)) throw std::invalid_argument("dense backward: extra gradient shape mismatch");
        for (std::size_t i = 0; i < dz.size(); ++i) dz.data()[i] += dz_extra->data()[i];
    }
    const auto& k = kernels();
    if (param_grads) {
        k.gemm_tn(out(), in(), dz.rows(), dz.data(), x_.data(), weight.grad.data());
        accumulate_column_sums(dz, bias.grad);
    }
    Matrix dx(dz.rows(), in());
    k.gemm_nn(dz.rows(), in(), out(), dz.data(), weight.value.data(), dx.data());
    return dx;
}

Mlp::Mlp(const std::string& name, const std::vector<std::size_t>& widths, const std::vector<Activation>& acts,
         sim::RandomStream& rng) {
    if (widths.size() < 2 || acts.size() != widths.size() - 1) throw std::invalid_argument("bad mlp shape");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        layers_.emplace_back(name + "." + std::to_string(l), widths[l], widths[l + 1], acts[l], rng);
    }
}

const Matrix& Mlp::forward(const Matrix& x) {
    const Matrix* cur = &x;
    for (auto& layer : layers_) cur = &layer.forward(*cur);
    return *cur;
}

Matrix Mlp::infer(const Matrix& x) const {
    Matrix cur = x;
    for (const auto& layer : layers_) cur = layer.infer(cur);
    return cur;
}

Matrix Mlp::backward(const Matrix& dy, bool param_grads, const Matrix* dz_extra) {
    Matrix g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = it->backward(g, param_grads, it == layers_.rbegin() ? dz_extra : nullptr);
    }
    return g;
}

std::vector<Parameter*> Mlp::parameters() {
    std::vector<Parameter*> out;
    for (auto& layer : layers_) {
        for (auto* p : layer.parameters()) out.push_back(p);
    }
    return out;
}

Lstm::Lstm(const std::string& name, std::size_t in, std::size_t hidden, sim::RandomStream& rng)
    : wx(name + ".wx", 4 * hidden, in), wh(name + ".wh", 4 * hidden, hidden), b(name + ".b", 1, 4 * hidden) {
    if (in == 0 || hidden == 0) throw std::invalid_argument("lstm needs non-zero dimensions");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in + hidden));
    init_uniform(wx.value, bound, rng);
    init_uniform(wh.value, bound, rng);
    for (std::size_t j = hidden; j < 2 * hidden; ++j) b.value(0, j) = 1.0;
}

Lstm::State Lstm::zero_state(std::size_t batch) const { return State{Matrix(batch, hidden()), Matrix(batch, hidden())}; }

void Lstm::step_into(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev, Matrix& gates, Matrix& c,
                     Matrix& tanh_c, Matrix& h) const {
    const std::size_t n = x.rows(), hs = hidden();
    if (x.cols() != in()) throw std::invalid_argument("lstm input width mismatch");
    if (h_prev.rows() != n || h_prev.cols() != hs || !c_prev.same_shape(h_prev)) {
        throw std::invalid_argument("lstm state shape mismatch");
    }
    const auto& k = kernels();
    gates.resize(n, 4 * hs);
    k.gemm_nt(n, 4 * hs, in(), x.data(), wx.value.data(), gates.data());
    k.gemm_nt(n, 4 * hs, hs, h_prev.data(), wh.value.data(), gates.data());
    add_bias(gates, b.value);
    c.resize(n, hs);
    tanh_c.resize(n, hs);
    h.resize(n, hs);
    for (std::size_t r = 0; r < n; ++r) {
        double* g = gates.row(r).data();
        for (std::size_t j = 0; j < hs; ++j) {
            const double ig = sigmoid(g[j]);
            const double fg = sigmoid(g[hs + j]);
            const double cg = std::tanh(g[2 * hs + j]);
            const double og = sigmoid(g[3 * hs + j]);
            g[j] = ig;
            g[hs + j] = fg;
            g[2 * hs + j] = cg;
            g[3 * hs + j] = og;
            const double cv = fg * c_prev(r, j) + ig * cg;
            c(r, j) = cv;
            tanh_c(r, j) = std::tanh(cv);
            h(r, j) = og * tanh_c(r, j);
        }
    }
}

Lstm::State Lstm::step(const Matrix& x, const State& prev) const {
    Matrix gates, tanh_c;
    State next;
    step_into(x, prev.h, prev.c, gates, next.c, tanh_c, next.h);
    return next;
}

const Matrix& Lstm::forward(const std::vector<Matrix>& sequence) {
    if (sequence.empty()) throw std::invalid_argument("lstm needs a non-empty sequence");
    const std::size_t n = sequence.front().rows();
    cache_.assign(sequence.size(), StepCache{});
    Matrix h(n, hidden()), c(n, hidden());
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        auto& sc = cache_[t];
        sc.x = sequence[t];
        sc.h_prev = h;
        sc.c_prev = c;
        step_into(sc.x, sc.h_prev, sc.c_prev, sc.gates, sc.c, sc.tanh_c, h);
        c = sc.c;
    }
    h_final_ = std::move(h);
    return h_final_;
}

Matrix Lstm::infer(const std::vector<Matrix>& sequence) const {
    if (sequence.empty()) throw std::invalid_argument("lstm needs a non-empty sequence");
    State s = zero_state(sequence.front().rows());
    for (const auto& x : sequence) s = step(x, s);
    return s.h;
}

std::vector<Matrix> Lstm::backward(const Matrix& dh_final) {
    if (cache_.empty()) throw std::logic_error("lstm backward without a forward pass");
    if (!dh_final.same_shape(h_final_)) throw std::invalid_argument("lstm backward: gradient shape mismatch");
    const std::size_t n = dh_final.rows(), hs = hidden();
    const auto& k = kernels();
    std::vector<Matrix> dxs(cache_.size());
    Matrix dh = dh_final, dc(n, hs), dz(n, 4 * hs);
    for (std::size_t t = cache_.size(); t-- > 0;) {
        const auto& sc = cache_[t];
        for (std::size_t r = 0; r < n; ++r) {
            const double* g = sc.gates.row(r).data();
            double* z = dz.row(r).data();
            for (std::size_t j = 0; j < hs; ++j) {
                const double ig = g[j], fg = g[hs + j], cg = g[2 * hs + j], og = g[3 * hs + j];
                const double tc = sc.tanh_c(r, j);
                const double dhv = dh(r, j);
                const double dcv = dc(r, j) + dhv * og * (1.0 - tc * tc);
                z[j] = dcv * cg * ig * (1.0 - ig);
                z[hs + j] = dcv * sc.c_prev(r, j) * fg * (1.0 - fg);
                z[2 * hs + j] = dcv * ig * (1.0 - cg * cg);
                z[3 * hs + j] = dhv * tc * og * (1.0 - og);
                dc(r, j) = dcv * fg;
            }
        }
        k.gemm_tn(4 * hs, in(), n, dz.data(), sc.x.data(), wx.grad.data());
        k.gemm_tn(4 * hs, hs, n, dz.data(), sc.h_prev.data(), wh.grad.data());
        accumulate_column_sums(dz, b.grad);
        dxs[t].resize(n, in());
        k.gemm_nn(n, in(), 4 * hs, dz.data(), wx.value.data(), dxs[t].data());
        dh.fill(0.0);
        k.gemm_nn(n, hs, 4 * hs, dz.data(), wh.value.data(), dh.data());
    }
    return dxs;
}

double mse_loss(const Matrix& pred, const Matrix& target, Matrix& grad) {
    if (!pred.same_shape(target)) throw std::invalid_argument("mse: shape mismatch");
    grad.resize(pred.rows(), pred.cols());
    const double n = static_cast<double>(pred.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        loss += d * d;
        grad.data()[i] = 2.0 * d / n;
    }
    return loss / n;
}

void zero_grad(std::span<Parameter* const> params) {
    for (auto* p : params) p->grad.fill(0.0);
}

}  // namespace hmptcp::nn
