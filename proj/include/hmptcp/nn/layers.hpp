#pragma once

#include <span>
#include <string>
#include <vector>

#include "hmptcp/nn/matrix.hpp"
#include "hmptcp/sim/random.hpp"

namespace hmptcp::nn {

enum class Activation { Relu, Tanh, Linear };

/// y = act(x W^T + b) over a batch (one sample per row).
class Dense {
public:
    /// Weights uniform in +-1/sqrt(in), zero bias.
    Dense(const std::string& name, std::size_t in, std::size_t out, Activation act, sim::RandomStream& rng);

    std::size_t in() const { return weight.value.cols(); }
    std::size_t out() const { return weight.value.rows(); }
    Activation activation() const { return act_; }

    /// Records intermediates for backward(). Throws std::invalid_argument on a width mismatch.
    const Matrix& forward(const Matrix& x);
    /// Stateless evaluation.
    Matrix infer(const Matrix& x) const;
    std::vector<double> apply(std::span<const double> x) const;

    /// Accumulates parameter gradients (unless `param_grads` is false) and
    /// returns dL/dx. `dz_extra`, if given, is added to the gradient at the
    /// pre-activation. Throws std::logic_error without a prior forward().
    Matrix backward(const Matrix& dy, bool param_grads = true, const Matrix* dz_extra = nullptr);

    /// Pre-activation of the last forward().
    const Matrix& pre_activation() const { return z_; }

    std::vector<Parameter*> parameters() { return {&weight, &bias}; }

    Parameter weight;  // out x in
    Parameter bias;    // 1 x out

private:
    Activation act_;
    Matrix x_, z_, y_;
    bool primed_ = false;
};

/// Stack of dense layers.
class Mlp {
public:
    Mlp() = default;
    /// widths = {in, h1, ..., out}; acts has one entry per layer.
    Mlp(const std::string& name, const std::vector<std::size_t>& widths, const std::vector<Activation>& acts,
        sim::RandomStream& rng);

    const Matrix& forward(const Matrix& x);
    Matrix infer(const Matrix& x) const;
    /// `dz_extra` is added at the output layer's pre-activation.
    Matrix backward(const Matrix& dy, bool param_grads = true, const Matrix* dz_extra = nullptr);

    std::vector<Parameter*> parameters();
    std::vector<Dense>& layers() { return layers_; }
    std::size_t in() const { return layers_.front().in(); }
    std::size_t out() const { return layers_.back().out(); }

private:
    std::vector<Dense> layers_;
};

/// Standard LSTM: gates i, f, o are sigmoids, candidate g is tanh.
///   c' = f * c + i * g,   h' = o * tanh(c')
/// Gate pre-activations are stacked [i; f; g; o] in the rows of wx and wh.
class Lstm {
public:
    struct State {
        Matrix h;
        Matrix c;
    };

    /// Weights uniform in +-1/sqrt(in + hidden); zero biases except forget gate = 1.
    Lstm(const std::string& name, std::size_t in, std::size_t hidden, sim::RandomStream& rng);

    std::size_t in() const { return wx.value.cols(); }
    std::size_t hidden() const { return wh.value.cols(); }

    /// One recurrence step over a batch. Throws std::invalid_argument on a shape mismatch.
    State step(const Matrix& x, const State& prev) const;
    State zero_state(std::size_t batch) const;

    /// Runs the sequence from the zero state, records intermediates and returns the final hidden state.
    const Matrix& forward(const std::vector<Matrix>& sequence);
    Matrix infer(const std::vector<Matrix>& sequence) const;
    /// Backpropagates dL/dh_final through time; returns dL/dx for every step.
    std::vector<Matrix> backward(const Matrix& dh_final);

    std::vector<Parameter*> parameters() { return {&wx, &wh, &b}; }

    Parameter wx;  // 4H x in
    Parameter wh;  // 4H x H
    Parameter b;   // 1 x 4H

private:
    struct StepCache {
        Matrix x, h_prev, c_prev, gates, c, tanh_c;
    };
    void step_into(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev, Matrix& gates, Matrix& c,
                   Matrix& tanh_c, Matrix& h) const;

    std::vector<StepCache> cache_;
    Matrix h_final_;
};

/// Mean squared error over all entries; writes dL/dpred into `grad`.
double mse_loss(const Matrix& pred, const Matrix& target, Matrix& grad);

void zero_grad(std::span<Parameter* const> params);

}  // namespace hmptcp::nn
