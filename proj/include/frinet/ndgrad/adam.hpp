// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <string>

#include "frinet/ndgrad/params.hpp"

namespace frinet::ndgrad {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4; // decoupled, applied as θ ← θ − lr·wd·θ
};

/// Adam with decoupled weight decay. Only parameters touched since the last
/// step are updated; each keeps its own step count for bias correction.
template <typename T>
class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    AdamConfig& config() { return cfg_; }
    const AdamConfig& config() const { return cfg_; }

    /// Per-parameter learning-rate multiplier (e.g. for latent tables).
    void set_lr_scale(const std::string& prefix, double s) { lr_scale_[prefix] = s; }

    void step(ParamSet<T>& params, double grad_scale = 1.0) {
        for (auto& [name, p] : params) {
            if (!p.touched) continue;
            State& st = state_[name];
            if (st.m.rows() != p.value.rows() || st.m.cols() != p.value.cols()) {
                st.m = Array2<double>(p.value.rows(), p.value.cols());
                st.v = Array2<double>(p.value.rows(), p.value.cols());
                st.t = 0;
            }
            ++st.t;
            const double lr = cfg_.lr * scale_for(name);
            const double bc1 = 1.0 - std::pow(cfg_.beta1, double(st.t));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, double(st.t));
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = double(p.grad[i]) * grad_scale;
                st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
                st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = st.m[i] / bc1;
                const double vhat = st.v[i] / bc2;
                double x = double(p.value[i]);
                x -= lr * cfg_.weight_decay * x;
                x -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
                p.value[i] = T(x);
            }
        }
    }

    /// Learning-rate multiplier for a parameter: longest matching prefix wins.
    double scale_for(const std::string& name) const {
        double s = 1.0;
        std::size_t best = 0;
        for (const auto& [prefix, v] : lr_scale_) {
            if (name.compare(0, prefix.size(), prefix) == 0 && prefix.size() >= best) {
                best = prefix.size();
                s = v;
            }
        }
        return s;
    }

  private:
    struct State {
        Array2<double> m, v;
        long t = 0;
    };


    AdamConfig cfg_;
    std::map<std::string, State> state_;
    std::map<std::string, double> lr_scale_;
};

} // namespace frinet::ndgrad
