#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "advdial/domain.hpp"
#include "advdial/policy.hpp"
#include "advdial/rng.hpp"

namespace advdial {

struct SimulatorConfig {
    double epsilon = 0.15;             // chance of a random in-grammar act per turn
    int patience = 12;                 // user turns before giving up
    double unsatisfiable_fraction = 0.10;
    int min_requests = 1;
    int max_requests = 3;
};

/// Samples a goal constraining every informable slot. With probability
/// (1 - unsatisfiable_fraction) the constraint set is copied from a random
/// entity, so at least one KB match exists; otherwise a value combination
/// with no KB match is drawn.
inline UserGoal sample_goal(const Ontology& ont, const KnowledgeBase& kb,
                            const SimulatorConfig& cfg, Rng& rng) {
    if (kb.entities.empty()) throw DataError("sample_goal: empty knowledge base");
    UserGoal goal;
    bool want_unsatisfiable = rng.bernoulli(cfg.unsatisfiable_fraction);
    if (!want_unsatisfiable) {
        const Entity& e = kb.entities[rng.uniform_index(kb.entities.size())];
        for (const auto& slot : ont.informable_slots) goal.constraints[slot] = e.values.at(slot);
    } else {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            goal.constraints.clear();
            for (const auto& slot : ont.informable_slots) {
                const auto& vals = ont.informable_values.at(slot);
                goal.constraints[slot] = vals[rng.uniform_index(vals.size())];
            }
            if (query_kb(kb, ont, goal.constraints).empty()) break;
        }
    }
    int span = cfg.max_requests - cfg.min_requests + 1;
    int n_requests = cfg.min_requests + static_cast<int>(rng.uniform_index(span));
    n_requests = std::min<int>(n_requests, static_cast<int>(ont.requestable_slots.size()));
    std::vector<std::string> pool = ont.requestable_slots;
    for (int i = 0; i < n_requests; ++i) {
        std::size_t pick = rng.uniform_index(pool.size());
        goal.requests.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return goal;
}

/// Agenda-based stochastic user. Pursues a sampled goal across turns:
/// informs constraints, answers confirms, re-informs after a wrong confirm
/// or a mismatched offer, requests pending attributes once a good entity is
/// offered, and says bye when every request has been answered. With
/// probability epsilon a turn is replaced by a random in-grammar act.
class UserSimulator {
public:
    UserSimulator(const World& world, SimulatorConfig cfg) : world_(world), cfg_(cfg) {}

    const SimulatorConfig& config() const { return cfg_; }

    void begin_dialog(UserGoal goal) {
        goal_ = std::move(goal);
        patience_ = cfg_.patience;
        informed_.clear();
        satisfied_.clear();
        pending_ = goal_.requests;
        entity_ok_ = false;
        done_ = false;
    }

    const UserGoal& goal() const { return goal_; }
    bool done() const { return done_; }
    int patience_left() const { return patience_; }

    /// One user turn. `system_prev` is the grounded system action from the
    /// previous turn (null on the opening turn).
    DialogAct next_turn(const RealizedAct* system_prev, Rng& rng) {
        if (done_) return make_bye();
        --patience_;
        DialogAct act;
        if (patience_ <= 0) {
            act = make_bye();
        } else if (rng.bernoulli(cfg_.epsilon)) {
            act = random_act(rng);
        } else {
            act = react(system_prev, rng);
        }
        if (act.act == "bye") done_ = true;
        return act;
    }

private:
    static DialogAct make_bye() { return DialogAct{"bye", {}}; }

    DialogAct make_inform(const std::string& slot) {
        informed_.insert(slot);
        return DialogAct{"inform", {{slot, goal_.constraints.at(slot)}}};
    }

    DialogAct make_request(const std::string& slot) const {
        return DialogAct{"request", {{slot, kRequestWildcard}}};
    }

    std::optional<std::string> first_uninformed() const {
        for (const auto& slot : world_.ontology.informable_slots) {
            if (goal_.constraints.count(slot) && !informed_.count(slot)) return slot;
        }
        return std::nullopt;
    }

    DialogAct react(const RealizedAct* sys, Rng& rng) {
        if (sys == nullptr) {
            // opening turn: state one or two constraints
            DialogAct act{"inform", {}};
            int n = 1 + static_cast<int>(rng.uniform_index(2));
            for (int i = 0; i < n; ++i) {
                auto slot = first_uninformed();
                if (!slot) break;
                informed_.insert(*slot);
                act.slot_values.emplace_back(*slot, goal_.constraints.at(*slot));
            }
            if (act.slot_values.empty()) return fallback(rng);
            return act;
        }
        const std::string& a = sys->act;
        if (a == "request") {
            if (goal_.constraints.count(sys->slot)) return make_inform(sys->slot);
            return fallback(rng);
        }
        if (a == "confirm") {
            auto it = goal_.constraints.find(sys->slot);
            if (it != goal_.constraints.end() && it->second == sys->value) {
                return DialogAct{"affirm", {}};
            }
            if (it != goal_.constraints.end()) return make_inform(sys->slot);
            return fallback(rng);
        }
        if (a == "offer") {
            if (sys->entity_id < 0) {
                // nothing matched; restate anything missing, give up otherwise
                auto slot = first_uninformed();
                if (slot) return make_inform(*slot);
                return make_bye();
            }
            const Entity& e = world_.kb.entities[static_cast<std::size_t>(sys->entity_id)];
            for (const auto& [slot, value] : goal_.constraints) {
                if (e.values.at(slot) != value) {
                    entity_ok_ = false;
                    return make_inform(slot);
                }
            }
            entity_ok_ = true;
            if (!pending_.empty()) return make_request(pending_.front());
            return make_bye();
        }
        if (a == "inform") {
            auto it = std::find(pending_.begin(), pending_.end(), sys->slot);
            if (it != pending_.end() && entity_ok_) {
                satisfied_.insert(sys->slot);
                pending_.erase(it);
                if (!pending_.empty()) return make_request(pending_.front());
                return make_bye();
            }
            return fallback(rng);
        }
        if (a == "bye") return make_bye();
        return fallback(rng);
    }

    DialogAct fallback(Rng& rng) {
        auto slot = first_uninformed();
        if (slot) return make_inform(*slot);
        if (entity_ok_ && !pending_.empty()) return make_request(pending_.front());
        if (entity_ok_ && pending_.empty()) return make_bye();
        // everything stated but no good entity yet: restate a random constraint
        const auto& slots = world_.ontology.informable_slots;
        return make_inform(slots[rng.uniform_index(slots.size())]);
    }

    DialogAct random_act(Rng& rng) {
        double x = rng.uniform();
        if (x < 0.50) {
            const auto& slots = world_.ontology.informable_slots;
            return make_inform(slots[rng.uniform_index(slots.size())]);
        }
        if (x < 0.80 && !goal_.requests.empty()) {
            return make_request(goal_.requests[rng.uniform_index(goal_.requests.size())]);
        }
        if (x < 0.95) return DialogAct{"affirm", {}};
        return make_bye();
    }

    const World& world_;
    SimulatorConfig cfg_;

    UserGoal goal_;
    int patience_ = 0;
    std::set<std::string> informed_;
    std::vector<std::string> pending_;
    std::set<std::string> satisfied_;
    bool entity_ok_ = false;
    bool done_ = false;
};

/// Optional end-of-dialog user feedback: successful dialogs yield a positive
/// signal with probability `rate`; failed dialogs never do.
inline bool feedback(const Dialog& dialog, const UserGoal& goal, double rate, Rng& rng) {
    if (rate < 0.0 || rate > 1.0) throw ConfigError("feedback rate must be in [0,1]");
    if (!evaluate_success(dialog, goal)) return false;
    return rng.bernoulli(rate);
}

}  // namespace advdial
