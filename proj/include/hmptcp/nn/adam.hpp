#pragma once

#include <cstdint>
#include <vector>

#include "hmptcp/nn/matrix.hpp"

namespace hmptcp::nn {

/// Adam with bias correction over a fixed list of parameters.
class Adam {
public:
    Adam() = default;
    explicit Adam(std::vector<Parameter*> params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    /// Applies one update from the accumulated gradients. Throws std::invalid_argument
    /// when a gradient's shape differs from its parameter's.
    void step();
    void zero_grad();

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    std::uint64_t step_count() const { return t_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

    const std::vector<Parameter*>& parameters() const { return params_; }
    std::vector<Matrix>& first_moments() { return m_; }
    std::vector<Matrix>& second_moments() { return v_; }

private:
    std::vector<Parameter*> params_;
    std::vector<Matrix> m_, v_;
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::uint64_t t_ = 0;
};

}  // namespace hmptcp::nn
