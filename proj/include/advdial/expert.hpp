#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "advdial/domain.hpp"
#include "advdial/policy.hpp"

namespace advdial {

/// Rule-based agent that plays the system side well enough to produce
/// demonstration corpora: request missing constraints, offer a matching
/// entity, answer requested attributes, close on bye. Tracks exactly what
/// the user stated, so its per-turn slot labels double as gold belief
/// labels for supervised pretraining.
class ScriptedExpert : public DialogPolicy {
public:
    explicit ScriptedExpert(const World& world) : world_(world) {}

    void begin_dialog() override {
        heard_.clear();
        pending_.clear();
        labels_.clear();
        offered_valid_ = false;
        user_bye_ = false;
    }

    void observe_user(const DialogAct& user) override {
        if (user.act == "inform") {
            for (const auto& [slot, value] : user.slot_values) {
                if (!world_.ontology.is_informable(slot)) continue;
                auto it = heard_.find(slot);
                if (it != heard_.end() && it->second != value) offered_valid_ = false;
                heard_[slot] = value;
            }
        } else if (user.act == "request") {
            for (const auto& [slot, value] : user.slot_values) {
                if (!world_.ontology.is_requestable(slot)) continue;
                if (std::find(pending_.begin(), pending_.end(), slot) == pending_.end()) {
                    pending_.push_back(slot);
                }
            }
        } else if (user.act == "bye") {
            user_bye_ = true;
        }
        labels_.push_back(belief_argmax());
    }

    std::map<std::string, std::string> query_constraints() const override { return heard_; }

    int act(const QuerySummary& summary, ActionMode, Rng&, double* log_prob) override {
        if (log_prob) *log_prob = 0.0;
        const ActionInventory& inv = world_.actions;
        if (user_bye_) return inv.by_label("bye").id;
        for (const auto& slot : world_.ontology.informable_slots) {
            if (!heard_.count(slot)) return inv.by_label("request_" + slot).id;
        }
        if (summary.count_bucket == 0) return inv.by_label("offer").id;
        if (!offered_valid_) return inv.by_label("offer").id;
        if (!pending_.empty()) return inv.by_label("inform_" + pending_.front()).id;
        return inv.by_label("confirm_" + world_.ontology.informable_slots.front()).id;
    }

    void observe_system(const RealizedAct& realized) override {
        if (realized.act == "offer") offered_valid_ = realized.entity_id >= 0;
        if (realized.act == "inform" && !pending_.empty() && pending_.front() == realized.slot) {
            pending_.pop_front();
        }
    }

    std::map<std::string, std::string> final_beliefs() const override { return belief_argmax(); }

    /// Gold per-slot labels after each user turn so far.
    const std::vector<std::map<std::string, std::string>>& turn_labels() const { return labels_; }

private:
    std::map<std::string, std::string> belief_argmax() const {
        std::map<std::string, std::string> out;
        for (const auto& slot : world_.ontology.informable_slots) {
            auto it = heard_.find(slot);
            out[slot] = it == heard_.end() ? kNotMentioned : it->second;
        }
        return out;
    }

    const World& world_;
    std::map<std::string, std::string> heard_;
    std::deque<std::string> pending_;
    std::vector<std::map<std::string, std::string>> labels_;
    bool offered_valid_ = false;
    bool user_bye_ = false;
};

}  // namespace advdial
