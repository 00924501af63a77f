#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "advdial/autodiff.hpp"
#include "advdial/corpus.hpp"
#include "advdial/domain.hpp"
#include "advdial/nn.hpp"
#include "advdial/parameters.hpp"
#include "advdial/policy.hpp"
#include "advdial/rng.hpp"

namespace advdial {

struct AgentConfig {
    std::size_t embed_dim = 32;
    std::size_t lstm_hidden = 64;
    std::size_t policy_hidden = 48;
    std::size_t belief_hidden = 48;
    double dropout = 0.5;

    static AgentConfig for_profile(const std::string& profile) {
        AgentConfig cfg;
        if (profile == "dstc2-scale") {
            cfg.lstm_hidden = 150;
            cfg.policy_hidden = 100;
            cfg.belief_hidden = 100;
        }
        return cfg;
    }
};

/// Recurrent dialog agent: an LSTM over turn encodings maintains the dialog
/// state, per-slot softmax heads track the user goal, and a softmax policy
/// head over the system action inventory selects the next action from
/// (state, beliefs, query summary).
class NeuralAgent : public DialogPolicy {
public:
    NeuralAgent(const World& world, AgentConfig cfg, Rng& init_rng)
        : world_(world), cfg_(cfg) {
        build_vocab();
        const std::size_t E = cfg_.embed_dim;
        init_embedding(params_, "emb.uact", world_.ontology.user_acts.size(), E, init_rng);
        init_embedding(params_, "emb.usv", sv_vocab_.size(), E, init_rng);
        init_embedding(params_, "emb.aprev", world_.actions.size() + 1, E, init_rng);
        init_lstm(params_, "lstm", 3 * E, cfg_.lstm_hidden, init_rng);
        for (const auto& slot : world_.ontology.informable_slots) {
            std::size_t options = world_.ontology.informable_values.at(slot).size() + 1;
            init_mlp(params_, "belief." + slot, cfg_.lstm_hidden, cfg_.belief_hidden, options,
                     init_rng);
        }
        std::size_t belief_width = 0;
        for (const auto& slot : world_.ontology.informable_slots) {
            belief_width += world_.ontology.informable_values.at(slot).size() + 1;
        }
        policy_input_width_ = cfg_.lstm_hidden + belief_width + QuerySummary::kWidth;
        init_mlp(params_, "policy", policy_input_width_, cfg_.policy_hidden,
                 world_.actions.size(), init_rng);
    }

    const World& world() const { return world_; }
    const AgentConfig& config() const { return cfg_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    int start_action_index() const { return static_cast<int>(world_.actions.size()); }

    // -- encoding ------------------------------------------------------------

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

    /// [U_k embedding, A_{k-1} embedding]: act-type embedding concatenated
    /// with a summed slot-value embedding (zero vector when the act carries
    /// no slots), then the previous-action embedding (a dedicated start
    /// symbol on the first turn).
    Tape::NodeId encode_turn_input(Tape& t, const DialogAct& user, int prev_action) {
        auto x_act = embed(t, params_, "emb.uact", user_act_index(user.act));
        Tape::NodeId x_sv;
        if (user.slot_values.empty()) {
            x_sv = t.input(Tensor::zeros({cfg_.embed_dim}));
        } else {
            std::vector<Tape::NodeId> rows;
            rows.reserve(user.slot_values.size());
            for (const auto& [slot, value] : user.slot_values) {
                rows.push_back(embed(t, params_, "emb.usv", slot_value_index(slot, value)));
            }
            x_sv = rows.size() == 1 ? rows[0] : t.add_n(rows);
        }
        std::size_t prev_index = prev_action < 0 ? world_.actions.size()
                                                 : static_cast<std::size_t>(prev_action);
        auto x_prev = embed(t, params_, "emb.aprev", prev_index);
        return t.concat({x_act, x_sv, x_prev});
    }

    Tensor encode_turn_input(const DialogAct& user, int prev_action) {
        Tape t;
        return t.value(encode_turn_input(t, user, prev_action));
    }

    // -- single-turn forward pieces -------------------------------------------

    struct TurnNodes {
        Tape::NodeId hidden = -1;
        Tape::NodeId cell = -1;
        Tape::NodeId head_input = -1;             // hidden after optional dropout
        std::vector<Tape::NodeId> belief_logits;  // one per informable slot
    };

    TurnNodes forward_turn(Tape& t, Tape::NodeId h_prev, Tape::NodeId c_prev,
                           const DialogAct& user, int prev_action, bool training, Rng* rng) {
        auto x = encode_turn_input(t, user, prev_action);
        auto s = lstm_step(t, params_, "lstm", h_prev, c_prev, x);
        TurnNodes out;
        out.hidden = s.hidden;
        out.cell = s.cell;
        out.head_input = t.dropout(s.hidden, training ? cfg_.dropout : 0.0, training, rng);
        for (const auto& slot : world_.ontology.informable_slots) {
            out.belief_logits.push_back(mlp_logits(t, params_, "belief." + slot, out.head_input,
                                                   training ? cfg_.dropout : 0.0, training, rng));
        }
        return out;
    }

    Tape::NodeId policy_logits(Tape& t, const TurnNodes& turn, const QuerySummary& summary,
                               bool training, Rng* rng) {
        std::vector<Tape::NodeId> parts;
        parts.push_back(turn.head_input);
        for (auto logits : turn.belief_logits) parts.push_back(t.softmax(logits));
        parts.push_back(t.input(Tensor({QuerySummary::kWidth}, summary.features())));
        auto x = t.concat(parts);
        return mlp_logits(t, params_, "policy", x, training ? cfg_.dropout : 0.0, training, rng);
    }

    // -- DialogPolicy ----------------------------------------------------------

    void begin_dialog() override {
        tape_.clear();
        run_h_ = tape_.input(Tensor::zeros({cfg_.lstm_hidden}));
        run_c_ = tape_.input(Tensor::zeros({cfg_.lstm_hidden}));
        prev_action_ = -1;
        turn_ready_ = false;
    }

    void observe_user(const DialogAct& user) override {
        current_ = forward_turn(tape_, run_h_, run_c_, user, prev_action_, false, nullptr);
        run_h_ = current_.hidden;
        run_c_ = current_.cell;
        turn_ready_ = true;
    }

    std::map<std::string, std::string> query_constraints() const override {
        std::map<std::string, std::string> out;
        auto beliefs = final_beliefs();
        for (auto& [slot, value] : beliefs) {
            if (value != kNotMentioned) out[slot] = value;
        }
        return out;
    }

    int act(const QuerySummary& summary, ActionMode mode, Rng& rng, double* log_prob) override {
        auto logits = policy_logits(tape_, current_, summary, false, nullptr);
        Tensor dist = tape_.value(tape_.softmax(logits));
        int chosen = mode == ActionMode::kSample ? sample_index(dist, rng) : greedy_index(dist);
        if (log_prob) *log_prob = std::log(dist[static_cast<std::size_t>(chosen)]);
        prev_action_ = chosen;
        return chosen;
    }

    void observe_system(const RealizedAct& realized) override {
        prev_action_ = realized.action_id;
    }

    std::map<std::string, std::string> final_beliefs() const override {
        std::map<std::string, std::string> out;
        if (!turn_ready_) {
            for (const auto& slot : world_.ontology.informable_slots) out[slot] = kNotMentioned;
            return out;
        }
        for (std::size_t m = 0; m < world_.ontology.informable_slots.size(); ++m) {
            const auto& slot = world_.ontology.informable_slots[m];
            const Tensor& logits = tape_.value(current_.belief_logits[m]);
            std::size_t best = 0;
            for (std::size_t i = 1; i < logits.size(); ++i) {
                if (logits[i] > logits[best]) best = i;
            }
            const auto& values = world_.ontology.informable_values.at(slot);
            out[slot] = best < values.size() ? values[best] : kNotMentioned;
        }
        return out;
    }

    Tensor state_snapshot() const override {
        return turn_ready_ ? tape_.value(current_.hidden) : Tensor::zeros({cfg_.lstm_hidden});
    }

    /// Belief distributions for the current turn (softmax over values plus
    /// the not-mentioned option).
    std::vector<Tensor> belief_distributions() {
        std::vector<Tensor> out;
        for (auto logits : current_.belief_logits) {
            out.push_back(tape_.value(tape_.softmax(logits)));
        }
        return out;
    }

    // -- teacher-forced replay (shared by pretraining and policy gradient) ----

    struct ReplayNodes {
        std::vector<Tape::NodeId> action_logits;
        std::vector<Tape::NodeId> action_log_probs;  // log pi(a_k taken)
        std::vector<Tape::NodeId> hiddens;
        std::vector<std::vector<Tape::NodeId>> belief_logits;
    };

    ReplayNodes replay_turns(Tape& t, const std::vector<DialogTurn>& turns, bool training,
                             Rng* rng) {
        ReplayNodes out;
        auto h = t.input(Tensor::zeros({cfg_.lstm_hidden}));
        auto c = t.input(Tensor::zeros({cfg_.lstm_hidden}));
        int prev = -1;
        for (const auto& turn : turns) {
            TurnNodes tn = forward_turn(t, h, c, turn.user, prev, training, rng);
            auto logits = policy_logits(t, tn, turn.summary, training, rng);
            out.action_logits.push_back(logits);
            out.action_log_probs.push_back(
                t.pick_log_softmax(logits, static_cast<std::size_t>(turn.action)));
            out.hiddens.push_back(tn.hidden);
            out.belief_logits.push_back(tn.belief_logits);
            h = tn.hidden;
            c = tn.cell;
            prev = turn.action;
        }
        return out;
    }

    // -- supervised pretraining -------------------------------------------------

    struct PretrainConfig {
        int epochs = 15;
        int batch = 32;
        double lr = 1e-3;
        double clip = 5.0;
        double holdout = 0.15;
        bool per_turn_slots = true;  // slot supervision every turn vs final turn only
    };

    struct EpochMetrics {
        double train_loss = 0.0;
        double heldout_action_acc = 0.0;
        double heldout_slot_acc = 0.0;
        double heldout_final_slot_acc = 0.0;
    };

    std::size_t belief_label_index(const std::string& slot, const std::string& label) const {
        const auto& values = world_.ontology.informable_values.at(slot);
        if (label == kNotMentioned) return values.size();
        return world_.ontology.value_index(slot, label);
    }

    std::vector<EpochMetrics> supervised_pretrain(const std::vector<CorpusRecord>& corpus,
                                                  const PretrainConfig& cfg, Rng& rng) {
        if (corpus.empty()) throw DataError("supervised_pretrain: empty corpus");
        for (const auto& rec : corpus) {
            if (rec.turns.empty()) {
                throw DataError("supervised_pretrain: dialog " + rec.dialog_id + " has no turns");
            }
        }
        std::vector<std::size_t> order(corpus.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, rng);
        std::size_t held = std::min(corpus.size() - 1,
                                    static_cast<std::size_t>(cfg.holdout * corpus.size()));
        std::vector<std::size_t> heldout(order.begin(), order.begin() + held);
        std::vector<std::size_t> train(order.begin() + held, order.end());

        std::vector<EpochMetrics> history;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            shuffle(train, rng);
            double loss_sum = 0.0;
            std::size_t loss_batches = 0;
            for (std::size_t start = 0; start < train.size();
                 start += static_cast<std::size_t>(cfg.batch)) {
                std::size_t stop = std::min(train.size(), start + static_cast<std::size_t>(cfg.batch));
                Tape t;
                std::vector<Tape::NodeId> terms;
                std::size_t turn_count = 0;
                for (std::size_t bi = start; bi < stop; ++bi) {
                    const CorpusRecord& rec = corpus[train[bi]];
                    Dialog d = to_dialog(rec);
                    ReplayNodes rn = replay_turns(t, d.turns, true, &rng);
                    for (std::size_t k = 0; k < rec.turns.size(); ++k) {
                        terms.push_back(rn.action_log_probs[k]);
                        bool slot_turn = cfg.per_turn_slots || k + 1 == rec.turns.size();
                        if (!slot_turn) continue;
                        for (std::size_t m = 0; m < world_.ontology.informable_slots.size(); ++m) {
                            const auto& slot = world_.ontology.informable_slots[m];
                            auto it = rec.turns[k].gold_labels.find(slot);
                            if (it == rec.turns[k].gold_labels.end()) {
                                throw DataError("dialog " + rec.dialog_id +
                                                " missing gold label for slot " + slot);
                            }
                            terms.push_back(t.pick_log_softmax(
                                rn.belief_logits[k][m], belief_label_index(slot, it->second)));
                        }
                        ++turn_count;
                    }
                }
                auto loss = t.scale(t.add_n(terms),
                                    -1.0 / static_cast<double>(std::max<std::size_t>(1, turn_count)));
                params_.zero_gradients();
                t.backward(loss);
                clip_gradients(params_, cfg.clip);
                AdamConfig adam;
                adam.lr = cfg.lr;
                adam_update(params_, adam);
                loss_sum += t.value(loss)[0];
                ++loss_batches;
            }
            EpochMetrics em;
            em.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, loss_batches));
            evaluate_heldout(corpus, heldout.empty() ? train : heldout, em);
            history.push_back(em);
        }
        return history;
    }

    /// Held-out accuracy of the policy head against gold actions and of the
    /// belief heads against gold labels.
    void evaluate_heldout(const std::vector<CorpusRecord>& corpus,
                          const std::vector<std::size_t>& indices, EpochMetrics& em) {
        std::size_t action_hits = 0, turns = 0;
        std::size_t slot_hits = 0, slot_total = 0;
        std::size_t final_hits = 0, final_total = 0;
        for (std::size_t idx : indices) {
            const CorpusRecord& rec = corpus[idx];
            Dialog d = to_dialog(rec);
            Tape t;
            ReplayNodes rn = replay_turns(t, d.turns, false, nullptr);
            for (std::size_t k = 0; k < rec.turns.size(); ++k) {
                const Tensor& logits = t.value(rn.action_logits[k]);
                std::size_t best = 0;
                for (std::size_t i = 1; i < logits.size(); ++i) {
                    if (logits[i] > logits[best]) best = i;
                }
                action_hits += best == static_cast<std::size_t>(rec.turns[k].gold_action);
                ++turns;
                for (std::size_t m = 0; m < world_.ontology.informable_slots.size(); ++m) {
                    const auto& slot = world_.ontology.informable_slots[m];
                    const Tensor& bl = t.value(rn.belief_logits[k][m]);
                    std::size_t arg = 0;
                    for (std::size_t i = 1; i < bl.size(); ++i) {
                        if (bl[i] > bl[arg]) arg = i;
                    }
                    std::size_t gold = belief_label_index(slot, rec.turns[k].gold_labels.at(slot));
                    bool hit = arg == gold;
                    slot_hits += hit;
                    ++slot_total;
                    if (k + 1 == rec.turns.size()) {
                        final_hits += hit;
                        ++final_total;
                    }
                }
            }
        }
        em.heldout_action_acc = turns ? static_cast<double>(action_hits) / turns : 0.0;
        em.heldout_slot_acc = slot_total ? static_cast<double>(slot_hits) / slot_total : 0.0;
        em.heldout_final_slot_acc =
            final_total ? static_cast<double>(final_hits) / final_total : 0.0;
    }

    static int sample_index(const Tensor& dist, Rng& rng) {
        double x = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            acc += dist[i];
            if (x < acc) return static_cast<int>(i);
        }
        return static_cast<int>(dist.size() - 1);
    }

    static int greedy_index(const Tensor& dist) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < dist.size(); ++i) {
            if (dist[i] > dist[best]) best = i;  // ties keep the lowest id
        }
        return static_cast<int>(best);
    }

private:
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

    static void shuffle(std::vector<std::size_t>& v, Rng& rng) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[rng.uniform_index(i)]);
        }
    }

    const World& world_;
    AgentConfig cfg_;
    ParameterSet params_;
    std::map<std::pair<std::string, std::string>, std::size_t> sv_vocab_;
    std::size_t policy_input_width_ = 0;

    // per-dialog runtime state
    Tape tape_;
    Tape::NodeId run_h_ = -1;
    Tape::NodeId run_c_ = -1;
    TurnNodes current_;
    int prev_action_ = -1;
    bool turn_ready_ = false;
};

}  // namespace advdial
