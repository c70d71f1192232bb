#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "ppm/nn/param_store.hpp"

namespace ppm::nn {

// Bias-corrected Adam. State is keyed by parameter name and persists across
// steps; iteration follows the store's sorted name order.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore& params) {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (auto& [name, p] : params.entries()) {
            if (!p.requires_grad() || !p.has_grad()) continue;
            auto& slot = state_[name];
            auto& v = p.values();
            auto& g = p.grad();
            if (slot.m.empty()) {
                slot.m.assign(v.size(), 0.0);
                slot.v.assign(v.size(), 0.0);
            }
            for (std::size_t i = 0; i < v.size(); ++i) {
                slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * g[i];
                slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * g[i] * g[i];
                double mhat = slot.m[i] / bc1;
                double vhat = slot.v[i] / bc2;
                v[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    long steps_taken() const { return t_; }

private:
    struct Slot {
        std::vector<double> m, v;
    };
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::map<std::string, Slot> state_;
};

}  // namespace ppm::nn
