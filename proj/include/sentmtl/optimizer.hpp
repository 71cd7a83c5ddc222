#ifndef SENTMTL_OPTIMIZER_HPP
#define SENTMTL_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "sentmtl/errors.hpp"
#include "sentmtl/model.hpp"

namespace sentmtl {

struct AdamConfig {
    double learning_rate = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam state for one parameter vector. The timestep is tracked per group:
/// a head that is sampled rarely still gets correct bias correction for the
/// updates it does receive.
class AdamState {
public:
    void step(std::span<double> params, std::span<const double> grads, const AdamConfig& cfg)
    {
        if (params.size() != grads.size()) {
            throw ShapeError("adam: parameter and gradient sizes differ");
        }
        if (m_.size() != params.size()) {
            m_.assign(params.size(), 0.0);
            v_.assign(params.size(), 0.0);
            t_ = 0;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
            v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }

private:
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

/// Optimizer over a whole bundle. One step touches exactly the shared layer
/// and the head of the sampled task; the other heads' parameters and
/// optimizer state stay untouched.
class BundleOptimizer {
public:
    explicit BundleOptimizer(AdamConfig cfg) : cfg_(cfg) {}

    void apply(ModelBundle& bundle, Granularity task, const Gradients& grads)
    {
        auto head_it = bundle.heads.find(task);
        if (head_it == bundle.heads.end()) {
            throw ConfigError(std::string("optimizer: bundle has no head for task '")
                              + to_string(task) + "'");
        }
        shared_weights_.step(bundle.shared.weights.data, grads.shared_weights.data, cfg_);
        shared_bias_.step(bundle.shared.bias, grads.shared_bias, cfg_);
        auto& head_states = heads_[task];
        head_states.weights.step(head_it->second.weights.data, grads.head_weights.data, cfg_);
        head_states.bias.step(head_it->second.bias, grads.head_bias, cfg_);
    }

    const AdamConfig& config() const { return cfg_; }

private:
    struct HeadStates {
        AdamState weights;
        AdamState bias;
    };

    AdamConfig cfg_;
    AdamState shared_weights_;
    AdamState shared_bias_;
    std::map<Granularity, HeadStates> heads_;
};

}  // namespace sentmtl

#endif  // SENTMTL_OPTIMIZER_HPP
