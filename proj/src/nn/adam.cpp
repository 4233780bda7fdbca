#include "hmptcp/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "hmptcp/nn/kernels.hpp"

namespace hmptcp::nn {

Adam::Adam(std::vector<Parameter*> params, double learning_rate, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
    }
}

void Adam::step() {
    for (auto* p : params_) {
        if (!p->grad.same_shape(p->value)) {
            throw std::invalid_argument("adam: gradient of " + p->name + " is " + shape_string(p->grad) +
                                        ", parameter is " + shape_string(p->value));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto& k = kernels();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto* p = params_[i];
        k.adam(p->value.size(), p->value.data(), m_[i].data(), v_[i].data(), p->grad.data(), lr_, beta1_, beta2_,
               eps_, c1, c2);
    }
}

void Adam::zero_grad() {
    for (auto* p : params_) p->grad.fill(0.0);
}

}  // namespace hmptcp::nn
