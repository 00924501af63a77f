#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "advdial/rng.hpp"
#include "advdial/tensor.hpp"

namespace advdial {

/// One trainable array with its gradient and Adam moment buffers.
/// All four tensors share one shape.
struct ParamEntry {
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
};

/// A named, flattened collection of trainable arrays. Iteration order is the
/// lexicographic name order, so whole-set operations (clipping, Adam,
/// serialization) are deterministic.
class ParameterSet {
public:
    ParamEntry& add(const std::string& name, Tensor init) {
        if (entries_.count(name)) {
            throw ConfigError("duplicate parameter name: " + name);
        }
        init.check_finite(name);
        ParamEntry e;
        e.grad = Tensor::zeros(init.shape());
        e.adam_m = Tensor::zeros(init.shape());
        e.adam_v = Tensor::zeros(init.shape());
        e.value = std::move(init);
        auto [it, ok] = entries_.emplace(name, std::move(e));
        (void)ok;
        return it->second;
    }

    ParamEntry& at(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    const ParamEntry& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    std::map<std::string, ParamEntry>& entries() { return entries_; }
    const std::map<std::string, ParamEntry>& entries() const { return entries_; }

    std::int64_t step_count() const { return step_count_; }
    void set_step_count(std::int64_t s) { step_count_ = s; }

    void zero_gradients() {
        for (auto& [name, e] : entries_) e.grad.fill(0.0);
    }

    double gradient_norm() const {
        double sq = 0.0;
        for (const auto& [name, e] : entries_) {
            for (double g : e.grad.data()) sq += g * g;
        }
        return std::sqrt(sq);
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& [name, e] : entries_) n += e.value.size();
        return n;
    }

private:
    std::map<std::string, ParamEntry> entries_;
    std::int64_t step_count_ = 0;
};

/// Scales all gradients by threshold/norm when the global L2 norm exceeds
/// the threshold. Direction is preserved.
inline void clip_gradients(ParameterSet& params, double threshold) {
    double norm = params.gradient_norm();
    if (norm <= threshold || norm == 0.0) return;
    double scale = threshold / norm;
    for (auto& [name, e] : params.entries()) {
        for (double& g : e.grad.data()) g *= scale;
    }
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One Adam step with bias correction over every entry in the set.
/// Gradients are zeroed after they are applied.
inline void adam_update(ParameterSet& params, const AdamConfig& cfg) {
    params.set_step_count(params.step_count() + 1);
    const double t = static_cast<double>(params.step_count());
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (auto& [name, e] : params.entries()) {
        auto& w = e.value.data();
        auto& g = e.grad.data();
        auto& m = e.adam_m.data();
        auto& v = e.adam_v.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            g[i] = 0.0;
        }
        e.value.check_finite(name);
    }
}

/// Xavier/Glorot-uniform initialization: U(-b, b) with b = sqrt(6/(in+out)).
inline Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> v(rows * cols);
    for (double& x : v) x = rng.uniform(-bound, bound);
    return Tensor::matrix(rows, cols, std::move(v));
}

}  // namespace advdial
