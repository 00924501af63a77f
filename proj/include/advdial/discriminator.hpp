#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advdial/autodiff.hpp"
#include "advdial/domain.hpp"
#include "advdial/nn.hpp"
#include "advdial/parameters.hpp"
#include "advdial/rng.hpp"

namespace advdial {

enum class PoolingMethod { kLast, kMax, kAvg, kAttn };

inline PoolingMethod parse_pooling(const std::string& name) {
    if (name == "last") return PoolingMethod::kLast;
    if (name == "max") return PoolingMethod::kMax;
    if (name == "avg") return PoolingMethod::kAvg;
    if (name == "attn") return PoolingMethod::kAttn;
    throw ConfigError("unknown pooling method: " + name + " (expected last|max|avg|attn)");
}

inline std::string pooling_name(PoolingMethod m) {
    switch (m) {
        case PoolingMethod::kLast: return "last";
        case PoolingMethod::kMax: return "max";
        case PoolingMethod::kAvg: return "avg";
        case PoolingMethod::kAttn: return "attn";
    }
    return "?";
}

struct DiscriminatorConfig {
    std::size_t embed_dim = 32;
    std::size_t hidden = 48;  // per direction
    PoolingMethod pooling = PoolingMethod::kMax;
    double dropout = 0.5;

    static DiscriminatorConfig for_profile(const std::string& profile) {
        DiscriminatorConfig cfg;
        if (profile == "dstc2-scale") cfg.hidden = 200;
        return cfg;
    }
};

/// Final dialog representation and score.
struct DialogScore {
    double probability = 0.0;
    Tensor pooled;
    std::optional<Tensor> attention_weights;
};

struct DiscriminatorMetrics {
    double accuracy = 0.0;
    double mean_success_prob = 0.0;
    double mean_fail_prob = 0.0;
    double loss = 0.0;
};

/// Dialog-level success estimator: a bidirectional LSTM over per-turn
/// encodings [U_k, E_k, A_k], one of four pooling strategies, and a logistic
/// output. Owns its own embedding tables, parameter-disjoint from the
/// generator.
class Discriminator {
public:
    Discriminator(const World& world, DiscriminatorConfig cfg, Rng& init_rng)
        : world_(world), cfg_(cfg) {
        build_vocab();
        const std::size_t E = cfg_.embed_dim;
        init_embedding(params_, "emb.uact", world_.ontology.user_acts.size(), E, init_rng);
        init_embedding(params_, "emb.usv", sv_vocab_.size(), E, init_rng);
        init_embedding(params_, "emb.act", world_.actions.size(), E, init_rng);
        turn_width_ = 2 * E + QuerySummary::kWidth + E;
        init_lstm(params_, "fwd", turn_width_, cfg_.hidden, init_rng);
        init_lstm(params_, "bwd", turn_width_, cfg_.hidden, init_rng);
        params_.add("attn.w", xavier_uniform(1, 2 * cfg_.hidden, init_rng));
        params_.add("attn.b", Tensor::zeros({1}));
        params_.add("out.w", xavier_uniform(1, 2 * cfg_.hidden, init_rng));
        params_.add("out.b", Tensor::zeros({1}));
    }

    const DiscriminatorConfig& config() const { return cfg_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    void set_pooling(PoolingMethod m) { cfg_.pooling = m; }

    Tape::NodeId turn_encoding(Tape& t, const DialogTurn& turn) {
        auto x_act = embed(t, params_, "emb.uact", user_act_index(turn.user.act));
        Tape::NodeId x_sv;
        if (turn.user.slot_values.empty()) {
            x_sv = t.input(Tensor::zeros({cfg_.embed_dim}));
        } else {
            std::vector<Tape::NodeId> rows;
            for (const auto& [slot, value] : turn.user.slot_values) {
                rows.push_back(embed(t, params_, "emb.usv", slot_value_index(slot, value)));
            }
            x_sv = rows.size() == 1 ? rows[0] : t.add_n(rows);
        }
        auto x_summary = t.input(Tensor({QuerySummary::kWidth}, turn.summary.features()));
        auto x_action = embed(t, params_, "emb.act", static_cast<std::size_t>(turn.action));
        return t.concat({x_act, x_sv, x_summary, x_action});
    }

    /// Per-step bidirectional states h_k = [fwd_k, bwd_k], aligned to turns.
    std::vector<Tape::NodeId> encode_dialog(Tape& t, const Dialog& dialog) {
        if (dialog.turns.empty()) throw DataError("encode_dialog: empty dialog");
        const std::size_t K = dialog.turns.size();
        std::vector<Tape::NodeId> xs(K);
        for (std::size_t k = 0; k < K; ++k) xs[k] = turn_encoding(t, dialog.turns[k]);

        std::vector<Tape::NodeId> hf(K), hb(K);
        auto h = t.input(Tensor::zeros({cfg_.hidden}));
        auto c = t.input(Tensor::zeros({cfg_.hidden}));
        for (std::size_t k = 0; k < K; ++k) {
            auto s = lstm_step(t, params_, "fwd", h, c, xs[k]);
            hf[k] = s.hidden;
            h = s.hidden;
            c = s.cell;
        }
        h = t.input(Tensor::zeros({cfg_.hidden}));
        c = t.input(Tensor::zeros({cfg_.hidden}));
        for (std::size_t k = K; k-- > 0;) {
            auto s = lstm_step(t, params_, "bwd", h, c, xs[k]);
            hb[k] = s.hidden;
            h = s.hidden;
            c = s.cell;
        }
        std::vector<Tape::NodeId> hs(K);
        for (std::size_t k = 0; k < K; ++k) hs[k] = t.concat({hf[k], hb[k]});
        return hs;
    }

    /// Combines the step states into the dialog representation d.
    /// last: [fwd_K, bwd_1]; max/avg: elementwise; attn: softmax(g(h_k)).
    Tape::NodeId pool(Tape& t, const std::vector<Tape::NodeId>& hs,
                      Tape::NodeId* alphas_out = nullptr) {
        if (hs.empty()) throw DataError("pool: empty state list");
        const std::size_t H = cfg_.hidden;
        switch (cfg_.pooling) {
            case PoolingMethod::kLast:
                return t.concat({t.slice(hs.back(), 0, H), t.slice(hs.front(), H, H)});
            case PoolingMethod::kMax:
                return t.max_list(hs);
            case PoolingMethod::kAvg:
                return t.avg_list(hs);
            case PoolingMethod::kAttn: {
                std::vector<Tape::NodeId> scores;
                scores.reserve(hs.size());
                for (auto hk : hs) {
                    scores.push_back(
                        t.add(t.matvec(t.param(params_, "attn.w"), hk), t.param(params_, "attn.b")));
                }
                auto alphas = t.softmax(t.concat(scores));
                if (alphas_out) *alphas_out = alphas;
                return t.weighted_sum(hs, alphas);
            }
        }
        throw ConfigError("pool: bad pooling method");
    }

    Tape::NodeId score_logit(Tape& t, const Dialog& dialog, bool training, Rng* rng,
                             Tape::NodeId* alphas_out = nullptr) {
        auto hs = encode_dialog(t, dialog);
        auto d = pool(t, hs, alphas_out);
        d = t.dropout(d, training ? cfg_.dropout : 0.0, training, rng);
        return t.add(t.matvec(t.param(params_, "out.w"), d), t.param(params_, "out.b"));
    }

    /// D(d) with dropout disabled: deterministic in the parameters.
    double score(const Dialog& dialog) {
        Tape t;
        auto logit = score_logit(t, dialog, false, nullptr);
        return 1.0 / (1.0 + std::exp(-t.value(logit)[0]));
    }

    DialogScore score_detailed(const Dialog& dialog) {
        Tape t;
        Tape::NodeId alphas = -1;
        auto hs = encode_dialog(t, dialog);
        auto d = pool(t, hs, &alphas);
        auto logit = t.add(t.matvec(t.param(params_, "out.w"), d), t.param(params_, "out.b"));
        DialogScore out;
        out.probability = 1.0 / (1.0 + std::exp(-t.value(logit)[0]));
        out.pooled = t.value(d);
        if (cfg_.pooling == PoolingMethod::kAttn) out.attention_weights = t.value(alphas);
        return out;
    }

    // -- training ---------------------------------------------------------------

    struct PretrainConfig {
        int epochs = 10;
        int batch = 32;
        double lr = 1e-3;
        double clip = 5.0;
        double holdout = 0.2;
    };

    struct UpdateStats {
        double loss = 0.0;
        double batch_accuracy = 0.0;
    };

    /// Mean binary cross-entropy over a labeled batch, as one graph.
    Tape::NodeId batch_loss(Tape& t, const std::vector<std::pair<const Dialog*, double>>& batch,
                            bool training, Rng* rng) {
        std::vector<Tape::NodeId> terms;
        terms.reserve(batch.size());
        for (const auto& [dialog, label] : batch) {
            terms.push_back(t.bce_with_logits(score_logit(t, *dialog, training, rng), label));
        }
        return t.scale(t.add_n(terms), 1.0 / static_cast<double>(terms.size()));
    }

    /// Supervised pretraining on successful positives vs random negatives.
    /// Returns held-out metrics of the final model.
    DiscriminatorMetrics pretrain(const std::vector<Dialog>& positives,
                                  const std::vector<Dialog>& negatives, const PretrainConfig& cfg,
                                  Rng& rng) {
        if (positives.empty() || negatives.empty()) {
            throw DataError("discriminator pretrain: empty example set");
        }
        std::vector<std::pair<const Dialog*, double>> pool;
        for (const auto& d : positives) pool.push_back({&d, 1.0});
        for (const auto& d : negatives) pool.push_back({&d, 0.0});
        shuffle(pool, rng);
        std::size_t held = std::min(pool.size() - 1,
                                    static_cast<std::size_t>(cfg.holdout * pool.size()));
        std::vector<std::pair<const Dialog*, double>> heldout(pool.begin(), pool.begin() + held);
        std::vector<std::pair<const Dialog*, double>> train(pool.begin() + held, pool.end());

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            shuffle(train, rng);
            for (std::size_t start = 0; start < train.size();
                 start += static_cast<std::size_t>(cfg.batch)) {
                std::size_t stop = std::min(train.size(), start + static_cast<std::size_t>(cfg.batch));
                Tape t;
                std::vector<std::pair<const Dialog*, double>> batch(train.begin() + start,
                                                                    train.begin() + stop);
                auto loss = batch_loss(t, batch, true, &rng);
                params_.zero_gradients();
                t.backward(loss);
                clip_gradients(params_, cfg.clip);
                AdamConfig adam;
                adam.lr = cfg.lr;
                adam_update(params_, adam);
            }
        }
        return evaluate(heldout.empty() ? train : heldout);
    }

    /// One gradient step on the Eq.-8 objective: positives from the sample
    /// pool against freshly simulated dialogs as negatives.
    UpdateStats adversarial_update(const std::vector<const Dialog*>& positives,
                                   const std::vector<const Dialog*>& negatives, double lr,
                                   double clip) {
        if (positives.empty() || negatives.empty()) {
            throw DataError("adversarial_update: empty batch");
        }
        std::vector<std::pair<const Dialog*, double>> batch;
        for (const Dialog* d : positives) batch.push_back({d, 1.0});
        for (const Dialog* d : negatives) batch.push_back({d, 0.0});
        Tape t;
        auto loss = batch_loss(t, batch, false, nullptr);
        params_.zero_gradients();
        t.backward(loss);
        clip_gradients(params_, clip);
        AdamConfig adam;
        adam.lr = lr;
        adam_update(params_, adam);

        UpdateStats stats;
        stats.loss = t.value(loss)[0];
        std::size_t hits = 0;
        for (const auto& [dialog, label] : batch) {
            double p = score(*dialog);
            hits += (p > 0.5) == (label > 0.5);
        }
        stats.batch_accuracy = static_cast<double>(hits) / static_cast<double>(batch.size());
        return stats;
    }

    /// Threshold-0.5 accuracy plus mean probabilities by true outcome.
    DiscriminatorMetrics evaluate(const std::vector<std::pair<const Dialog*, double>>& labeled) {
        DiscriminatorMetrics m;
        if (labeled.empty()) return m;
        std::size_t hits = 0, n_pos = 0, n_neg = 0;
        double sum_pos = 0.0, sum_neg = 0.0, loss = 0.0;
        for (const auto& [dialog, label] : labeled) {
            double p = score(*dialog);
            hits += (p > 0.5) == (label > 0.5);
            if (label > 0.5) {
                sum_pos += p;
                ++n_pos;
                loss += -std::log(std::max(p, 1e-12));
            } else {
                sum_neg += p;
                ++n_neg;
                loss += -std::log(std::max(1.0 - p, 1e-12));
            }
        }
        m.accuracy = static_cast<double>(hits) / static_cast<double>(labeled.size());
        m.mean_success_prob = n_pos ? sum_pos / static_cast<double>(n_pos) : 0.0;
        m.mean_fail_prob = n_neg ? sum_neg / static_cast<double>(n_neg) : 0.0;
        m.loss = loss / static_cast<double>(labeled.size());
        return m;
    }

private:
    std::size_t user_act_index(const std::string& act) const {
        const auto& acts = world_.ontology.user_acts;
        for (std::size_t i = 0; i < acts.size(); ++i) {
            if (acts[i] == act) return i;
        }
        throw DataError("unknown user act: " + act);
    }

    std::size_t slot_value_index(const std::string& slot, const std::string& value) const {
        auto it = sv_vocab_.find({slot, value});
        if (it == sv_vocab_.end()) {
            throw DataError("unknown slot-value pair: " + slot + "=" + value);
        }
        return it->second;
    }

    void build_vocab() {
        std::size_t idx = 0;
        for (const auto& slot : world_.ontology.informable_slots) {
            for (const auto& value : world_.ontology.informable_values.at(slot)) {
                sv_vocab_[{slot, value}] = idx++;
            }
        }
        for (const auto& slot : world_.ontology.requestable_slots) {
            sv_vocab_[{slot, kRequestWildcard}] = idx++;
        }
    }

    template <typename T>
    static void shuffle(std::vector<T>& v, Rng& rng) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[rng.uniform_index(i)]);
        }
    }

    const World& world_;
    DiscriminatorConfig cfg_;
    ParameterSet params_;
    std::map<std::pair<std::string, std::string>, std::size_t> sv_vocab_;
    std::size_t turn_width_ = 0;
};

}  // namespace advdial
