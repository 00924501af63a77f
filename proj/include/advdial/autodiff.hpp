#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "advdial/parameters.hpp"
#include "advdial/rng.hpp"
#include "advdial/tensor.hpp"

namespace advdial {

/// Tape-based reverse-mode differentiation over vectors and matrices.
///
/// A Tape records the forward computation as a flat list of nodes; backward()
/// sweeps the list in reverse and accumulates gradients into the bound
/// ParameterSet entries. Gradients are additive across backward() calls, so a
/// mini-batch may be differentiated either as one recorded graph or as a sum
/// of per-example graphs.
class Tape {
public:
    using NodeId = std::int32_t;

    enum class Op : std::uint8_t {
        kInput,
        kParam,
        kMatVec,
        kAdd,
        kMul,
        kSigmoid,
        kTanh,
        kSoftmax,
        kSlice,
        kConcat,
        kRow,
        kScale,
        kAddN,
        kPickLogSoftmax,
        kBceWithLogits,
        kSquaredError,
        kMaxList,
        kAvgList,
        kWeightedSum,
        kDropout,
        kSum,
    };

    NodeId input(Tensor t) {
        Node n;
        n.op = Op::kInput;
        n.value = std::move(t);
        return push(std::move(n));
    }

    /// Leaf bound to a parameter. The value is snapshotted at record time;
    /// repeated requests for the same entry reuse one node.
    NodeId param(ParameterSet& ps, const std::string& name) {
        ParamEntry& e = ps.at(name);
        auto it = param_cache_.find(&e);
        if (it != param_cache_.end()) return it->second;
        Node n;
        n.op = Op::kParam;
        n.value = e.value;
        n.entry = &e;
        n.pname = name;
        NodeId id = push(std::move(n));
        param_cache_.emplace(&e, id);
        return id;
    }

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    Tensor& grad(NodeId id) { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }

    /// y = W x, with W (m,n) and x (n).
    NodeId matvec(NodeId w, NodeId x) {
        const Tensor& W = val(w);
        const Tensor& X = val(x);
        if (W.rank() != 2 || X.rank() != 1 || W.cols() != X.size()) {
            throw DimensionError("matvec: incompatible shapes " + W.shape_string() + " x " +
                                 X.shape_string());
        }
        Tensor out = Tensor::zeros({W.rows()});
        for (std::size_t i = 0; i < W.rows(); ++i) {
            double acc = 0.0;
            const double* wrow = W.data().data() + i * W.cols();
            for (std::size_t j = 0; j < W.cols(); ++j) acc += wrow[j] * X[j];
            out[i] = acc;
        }
        return push(binary(Op::kMatVec, w, x, std::move(out)));
    }

    NodeId add(NodeId a, NodeId b) {
        require_same_shape(val(a), val(b), "add");
        Tensor out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += val(b)[i];
        return push(binary(Op::kAdd, a, b, std::move(out)));
    }

    NodeId mul(NodeId a, NodeId b) {
        require_same_shape(val(a), val(b), "mul");
        Tensor out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= val(b)[i];
        return push(binary(Op::kMul, a, b, std::move(out)));
    }

    NodeId sigmoid(NodeId a) {
        Tensor out = val(a);
        for (double& x : out.data()) x = 1.0 / (1.0 + std::exp(-x));
        return push(unary(Op::kSigmoid, a, std::move(out)));
    }

    NodeId tanh_op(NodeId a) {
        Tensor out = val(a);
        for (double& x : out.data()) x = std::tanh(x);
        return push(unary(Op::kTanh, a, std::move(out)));
    }

    /// Numerically stable softmax over a rank-1 tensor.
    NodeId softmax(NodeId a) {
        Tensor out = val(a);
        double mx = out[0];
        for (double x : out.data()) mx = std::max(mx, x);
        double sum = 0.0;
        for (double& x : out.data()) {
            x = std::exp(x - mx);
            sum += x;
        }
        for (double& x : out.data()) x /= sum;
        return push(unary(Op::kSoftmax, a, std::move(out)));
    }

    NodeId slice(NodeId a, std::size_t offset, std::size_t len) {
        const Tensor& A = val(a);
        if (offset + len > A.size()) throw DimensionError("slice out of range");
        Tensor out = Tensor::zeros({len});
        for (std::size_t i = 0; i < len; ++i) out[i] = A[offset + i];
        Node n = unary(Op::kSlice, a, std::move(out));
        n.aux_i = static_cast<std::int64_t>(offset);
        return push(std::move(n));
    }

    NodeId concat(const std::vector<NodeId>& parts) {
        if (parts.empty()) throw DimensionError("concat: empty list");
        std::size_t total = 0;
        for (NodeId p : parts) total += val(p).size();
        Tensor out = Tensor::zeros({total});
        std::size_t pos = 0;
        for (NodeId p : parts) {
            for (std::size_t i = 0; i < val(p).size(); ++i) out[pos + i] = val(p)[i];
            pos += val(p).size();
        }
        Node n;
        n.op = Op::kConcat;
        n.list = parts;
        n.value = std::move(out);
        return push(std::move(n));
    }

    /// Row r of a rank-2 node (embedding lookup).
    NodeId row(NodeId m, std::size_t r) {
        const Tensor& M = val(m);
        if (M.rank() != 2 || r >= M.rows()) throw DimensionError("row: index out of range");
        Tensor out = Tensor::zeros({M.cols()});
        for (std::size_t j = 0; j < M.cols(); ++j) out[j] = M.at(r, j);
        Node n = unary(Op::kRow, m, std::move(out));
        n.aux_i = static_cast<std::int64_t>(r);
        return push(std::move(n));
    }

    NodeId scale(NodeId a, double c) {
        Tensor out = val(a);
        for (double& x : out.data()) x *= c;
        Node n = unary(Op::kScale, a, std::move(out));
        n.aux_d = c;
        return push(std::move(n));
    }

    NodeId add_n(const std::vector<NodeId>& parts) {
        if (parts.empty()) throw DimensionError("add_n: empty list");
        Tensor out = val(parts[0]);
        for (std::size_t k = 1; k < parts.size(); ++k) {
            require_same_shape(out, val(parts[k]), "add_n");
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += val(parts[k])[i];
        }
        Node n;
        n.op = Op::kAddN;
        n.list = parts;
        n.value = std::move(out);
        return push(std::move(n));
    }

    /// log softmax(logits)[target], as a scalar node.
    NodeId pick_log_softmax(NodeId logits, std::size_t target) {
        const Tensor& L = val(logits);
        if (target >= L.size()) throw DimensionError("pick_log_softmax: target out of range");
        double mx = L[0];
        for (double x : L.data()) mx = std::max(mx, x);
        double sum = 0.0;
        Tensor probs = L;
        for (double& x : probs.data()) {
            x = std::exp(x - mx);
            sum += x;
        }
        for (double& x : probs.data()) x /= sum;
        double lse = mx + std::log(sum);
        Node n = unary(Op::kPickLogSoftmax, logits, Tensor::scalar(L[target] - lse));
        n.aux_i = static_cast<std::int64_t>(target);
        n.aux_t = std::move(probs);
        return push(std::move(n));
    }

    /// Binary cross-entropy of sigmoid(logit) against label, stable form.
    NodeId bce_with_logits(NodeId logit, double label) {
        const Tensor& Z = val(logit);
        if (Z.size() != 1) throw DimensionError("bce_with_logits: logit must be scalar");
        double z = Z[0];
        double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::fabs(z)));
        Node n = unary(Op::kBceWithLogits, logit, Tensor::scalar(loss));
        n.aux_d = label;
        n.aux_t = Tensor::scalar(1.0 / (1.0 + std::exp(-z)));
        return push(std::move(n));
    }

    NodeId squared_error(NodeId pred, double target) {
        const Tensor& P = val(pred);
        if (P.size() != 1) throw DimensionError("squared_error: prediction must be scalar");
        double d = P[0] - target;
        Node n = unary(Op::kSquaredError, pred, Tensor::scalar(d * d));
        n.aux_d = target;
        return push(std::move(n));
    }

    /// Elementwise max over a list of same-shape vectors.
    NodeId max_list(const std::vector<NodeId>& parts) {
        if (parts.empty()) throw DimensionError("max_list: empty list");
        Tensor out = val(parts[0]);
        Tensor arg = Tensor::zeros(out.shape());
        for (std::size_t k = 1; k < parts.size(); ++k) {
            require_same_shape(out, val(parts[k]), "max_list");
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (val(parts[k])[i] > out[i]) {
                    out[i] = val(parts[k])[i];
                    arg[i] = static_cast<double>(k);
                }
            }
        }
        Node n;
        n.op = Op::kMaxList;
        n.list = parts;
        n.value = std::move(out);
        n.aux_t = std::move(arg);
        return push(std::move(n));
    }

    NodeId avg_list(const std::vector<NodeId>& parts) {
        NodeId s = add_n(parts);
        return scale(s, 1.0 / static_cast<double>(parts.size()));
    }

    /// sum_k alpha[k] * parts[k]; alpha is a rank-1 node of length K.
    NodeId weighted_sum(const std::vector<NodeId>& parts, NodeId alpha) {
        const Tensor& A = val(alpha);
        if (A.size() != parts.size()) throw DimensionError("weighted_sum: weight count mismatch");
        Tensor out = Tensor::zeros(val(parts[0]).shape());
        for (std::size_t k = 0; k < parts.size(); ++k) {
            require_same_shape(out, val(parts[k]), "weighted_sum");
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += A[k] * val(parts[k])[i];
        }
        Node n;
        n.op = Op::kWeightedSum;
        n.list = parts;
        n.a = alpha;
        n.value = std::move(out);
        return push(std::move(n));
    }

    /// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
    /// Identity when not training or p == 0.
    NodeId dropout(NodeId a, double p, bool training, Rng* rng) {
        if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1)");
        if (!training || p == 0.0) return a;
        Tensor mask = Tensor::zeros(val(a).shape());
        double keep = 1.0 / (1.0 - p);
        for (double& m : mask.data()) m = rng->bernoulli(p) ? 0.0 : keep;
        Tensor out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
        Node n = unary(Op::kDropout, a, std::move(out));
        n.aux_t = std::move(mask);
        return push(std::move(n));
    }

    NodeId sum(NodeId a) {
        double s = 0.0;
        for (double x : val(a).data()) s += x;
        return push(unary(Op::kSum, a, Tensor::scalar(s)));
    }

    /// Reverse sweep from a scalar loss. Parameter gradients accumulate into
    /// the bound ParameterSet entries (additive with prior contents).
    void backward(NodeId loss) {
        if (val(loss).size() != 1) throw DimensionError("backward: loss must be scalar");
        val(loss).check_finite("loss");
        touched_.assign(nodes_.size(), 0);
        for (auto& n : nodes_) n.grad = Tensor();
        nodes_[loss].grad = Tensor::scalar(1.0);
        touched_[loss] = 1;
        for (std::int32_t i = loss; i >= 0; --i) {
            if (!touched_[i]) continue;
            dispatch(i);
        }
    }

    void clear() {
        nodes_.clear();
        param_cache_.clear();
        touched_.clear();
    }

private:
    struct Node {
        Op op = Op::kInput;
        Tensor value;
        Tensor grad;
        NodeId a = -1;
        NodeId b = -1;
        std::vector<NodeId> list;
        std::int64_t aux_i = 0;
        double aux_d = 0.0;
        Tensor aux_t;
        ParamEntry* entry = nullptr;
        std::string pname;
    };

    const Tensor& val(NodeId id) const { return nodes_[id].value; }

    Node unary(Op op, NodeId a, Tensor out) {
        Node n;
        n.op = op;
        n.a = a;
        n.value = std::move(out);
        return n;
    }
    Node binary(Op op, NodeId a, NodeId b, Tensor out) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.value = std::move(out);
        return n;
    }

    NodeId push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    Tensor& touch(NodeId id) {
        Node& n = nodes_[id];
        if (!touched_[id]) {
            n.grad = Tensor::zeros(n.value.shape());
            touched_[id] = 1;
        }
        return n.grad;
    }

    void dispatch(NodeId id) {
        Node& n = nodes_[id];
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::kInput:
                break;
            case Op::kParam: {
                Tensor& pg = n.entry->grad;
                for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
                pg.check_finite(n.pname + ".grad");
                break;
            }
            case Op::kMatVec: {
                const Tensor& W = val(n.a);
                const Tensor& X = val(n.b);
                Tensor& gw = touch(n.a);
                Tensor& gx = touch(n.b);
                for (std::size_t i = 0; i < W.rows(); ++i) {
                    const double gi = g[i];
                    double* gwrow = gw.data().data() + i * W.cols();
                    const double* wrow = W.data().data() + i * W.cols();
                    for (std::size_t j = 0; j < W.cols(); ++j) {
                        gwrow[j] += gi * X[j];
                        gx[j] += wrow[j] * gi;
                    }
                }
                break;
            }
            case Op::kAdd: {
                Tensor& ga = touch(n.a);
                Tensor& gb = touch(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i];
                    gb[i] += g[i];
                }
                break;
            }
            case Op::kMul: {
                Tensor& ga = touch(n.a);
                Tensor& gb = touch(n.b);
                const Tensor& A = val(n.a);
                const Tensor& B = val(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * B[i];
                    gb[i] += g[i] * A[i];
                }
                break;
            }
            case Op::kSigmoid: {
                Tensor& ga = touch(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double y = n.value[i];
                    ga[i] += g[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::kTanh: {
                Tensor& ga = touch(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double y = n.value[i];
                    ga[i] += g[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::kSoftmax: {
                Tensor& ga = touch(n.a);
                double dot = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * n.value[i];
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += n.value[i] * (g[i] - dot);
                }
                break;
            }
            case Op::kSlice: {
                Tensor& ga = touch(n.a);
                std::size_t off = static_cast<std::size_t>(n.aux_i);
                for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
                break;
            }
            case Op::kConcat: {
                std::size_t pos = 0;
                for (NodeId p : n.list) {
                    Tensor& gp = touch(p);
                    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[pos + i];
                    pos += gp.size();
                }
                break;
            }
            case Op::kRow: {
                Tensor& gm = touch(n.a);
                std::size_t r = static_cast<std::size_t>(n.aux_i);
                std::size_t c = val(n.a).cols();
                for (std::size_t j = 0; j < g.size(); ++j) gm[r * c + j] += g[j];
                break;
            }
            case Op::kScale: {
                Tensor& ga = touch(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux_d;
                break;
            }
            case Op::kAddN: {
                for (NodeId p : n.list) {
                    Tensor& gp = touch(p);
                    for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
                }
                break;
            }
            case Op::kPickLogSoftmax: {
                Tensor& ga = touch(n.a);
                const Tensor& p = n.aux_t;
                std::size_t t = static_cast<std::size_t>(n.aux_i);
                double g0 = g[0];
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    ga[i] += g0 * ((i == t ? 1.0 : 0.0) - p[i]);
                }
                break;
            }
            case Op::kBceWithLogits: {
                Tensor& ga = touch(n.a);
                ga[0] += g[0] * (n.aux_t[0] - n.aux_d);
                break;
            }
            case Op::kSquaredError: {
                Tensor& ga = touch(n.a);
                ga[0] += g[0] * 2.0 * (val(n.a)[0] - n.aux_d);
                break;
            }
            case Op::kMaxList: {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    NodeId src = n.list[static_cast<std::size_t>(n.aux_t[i])];
                    touch(src)[i] += g[i];
                }
                break;
            }
            case Op::kAvgList:
                break;  // composed of add_n + scale, never stored directly
            case Op::kWeightedSum: {
                const Tensor& A = val(n.a);
                Tensor& galpha = touch(n.a);
                for (std::size_t k = 0; k < n.list.size(); ++k) {
                    const Tensor& hk = val(n.list[k]);
                    Tensor& ghk = touch(n.list[k]);
                    double dot = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        ghk[i] += A[k] * g[i];
                        dot += g[i] * hk[i];
                    }
                    galpha[k] += dot;
                }
                break;
            }
            case Op::kDropout: {
                Tensor& ga = touch(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux_t[i];
                break;
            }
            case Op::kSum: {
                Tensor& ga = touch(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
                break;
            }
        }
    }

    std::vector<Node> nodes_;
    std::map<const ParamEntry*, NodeId> param_cache_;
    std::vector<char> touched_;
};

}  // namespace advdial
