#pragma once

#include <string>
#include <utility>
#include <vector>

#include "advdial/autodiff.hpp"
#include "advdial/parameters.hpp"
#include "advdial/rng.hpp"
#include "advdial/tensor.hpp"

namespace advdial {

/// Hidden/cell pair of a recurrent cell. Both tensors share one shape.
struct RecurrentState {
    Tensor hidden;
    Tensor cell;

    static RecurrentState zeros(std::size_t width) {
        return {Tensor::zeros({width}), Tensor::zeros({width})};
    }
};

enum class Activation { kSoftmax, kSigmoid, kTanh, kLinear };

// ---------------------------------------------------------------------------
// LSTM cell. Parameters under `prefix`: wx (4H,in), wh (4H,H), b (4H), with
// gate order input/forget/candidate/output and forget-gate bias +1 at init.
// ---------------------------------------------------------------------------

inline void init_lstm(ParameterSet& ps, const std::string& prefix, std::size_t input_width,
                      std::size_t hidden, Rng& rng) {
    ps.add(prefix + ".wx", xavier_uniform(4 * hidden, input_width, rng));
    ps.add(prefix + ".wh", xavier_uniform(4 * hidden, hidden, rng));
    Tensor b = Tensor::zeros({4 * hidden});
    for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;
    ps.add(prefix + ".b", std::move(b));
}

struct LstmNodes {
    Tape::NodeId hidden;
    Tape::NodeId cell;
};

inline LstmNodes lstm_step(Tape& t, ParameterSet& ps, const std::string& prefix,
                           Tape::NodeId h_prev, Tape::NodeId c_prev, Tape::NodeId x) {
    auto wx = t.param(ps, prefix + ".wx");
    auto wh = t.param(ps, prefix + ".wh");
    auto b = t.param(ps, prefix + ".b");
    std::size_t H = t.value(b).size() / 4;
    if (t.value(h_prev).size() != H || t.value(c_prev).size() != H) {
        throw DimensionError("lstm_step: state width does not match " + prefix + ".wh");
    }
    auto z = t.add(t.add(t.matvec(wx, x), t.matvec(wh, h_prev)), b);
    auto gi = t.sigmoid(t.slice(z, 0, H));
    auto gf = t.sigmoid(t.slice(z, H, H));
    auto gc = t.tanh_op(t.slice(z, 2 * H, H));
    auto go = t.sigmoid(t.slice(z, 3 * H, H));
    auto c = t.add(t.mul(gf, c_prev), t.mul(gi, gc));
    auto h = t.mul(go, t.tanh_op(c));
    return {h, c};
}

/// Tensor-level single step, for callers that do not need gradients.
inline RecurrentState lstm_step(ParameterSet& ps, const std::string& prefix,
                                const RecurrentState& prev, const Tensor& input) {
    require_same_shape(prev.hidden, prev.cell, "lstm_step state");
    Tape t;
    auto r = lstm_step(t, ps, prefix, t.input(prev.hidden), t.input(prev.cell), t.input(input));
    return {t.value(r.hidden), t.value(r.cell)};
}

// ---------------------------------------------------------------------------
// Single-hidden-layer MLP with tanh hidden activation. Parameters under
// `prefix`: w1 (hidden,in), b1 (hidden), w2 (out,hidden), b2 (out).
// ---------------------------------------------------------------------------

inline void init_mlp(ParameterSet& ps, const std::string& prefix, std::size_t input_width,
                     std::size_t hidden, std::size_t output, Rng& rng) {
    ps.add(prefix + ".w1", xavier_uniform(hidden, input_width, rng));
    ps.add(prefix + ".b1", Tensor::zeros({hidden}));
    ps.add(prefix + ".w2", xavier_uniform(output, hidden, rng));
    ps.add(prefix + ".b2", Tensor::zeros({output}));
}

inline Tape::NodeId mlp_logits(Tape& t, ParameterSet& ps, const std::string& prefix,
                               Tape::NodeId x, double dropout_p = 0.0, bool training = false,
                               Rng* rng = nullptr) {
    auto h = t.tanh_op(t.add(t.matvec(t.param(ps, prefix + ".w1"), x), t.param(ps, prefix + ".b1")));
    h = t.dropout(h, dropout_p, training, rng);
    return t.add(t.matvec(t.param(ps, prefix + ".w2"), h), t.param(ps, prefix + ".b2"));
}

inline Tape::NodeId mlp_forward(Tape& t, ParameterSet& ps, const std::string& prefix,
                                Tape::NodeId x, Activation act, double dropout_p = 0.0,
                                bool training = false, Rng* rng = nullptr) {
    auto y = mlp_logits(t, ps, prefix, x, dropout_p, training, rng);
    switch (act) {
        case Activation::kSoftmax: return t.softmax(y);
        case Activation::kSigmoid: return t.sigmoid(y);
        case Activation::kTanh: return t.tanh_op(y);
        case Activation::kLinear: return y;
    }
    return y;
}

inline Tensor mlp_forward(ParameterSet& ps, const std::string& prefix, const Tensor& input,
                          Activation act) {
    Tape t;
    return t.value(mlp_forward(t, ps, prefix, t.input(input), act));
}

// ---------------------------------------------------------------------------
// Embedding tables.
// ---------------------------------------------------------------------------

inline void init_embedding(ParameterSet& ps, const std::string& name, std::size_t vocab,
                           std::size_t dim, Rng& rng) {
    ps.add(name, xavier_uniform(vocab, dim, rng));
}

inline Tape::NodeId embed(Tape& t, ParameterSet& ps, const std::string& name, std::size_t index) {
    return t.row(t.param(ps, name), index);
}

// ---------------------------------------------------------------------------
// Tensor-level dropout, matching the tape op convention.
// ---------------------------------------------------------------------------

inline Tensor dropout(const Tensor& input, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1)");
    Tensor out = input;
    if (!training || p == 0.0) return out;
    double keep = 1.0 / (1.0 - p);
    for (double& x : out.data()) x = rng.bernoulli(p) ? 0.0 : x * keep;
    return out;
}

}  // namespace advdial
