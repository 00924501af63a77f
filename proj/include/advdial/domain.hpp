#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "advdial/rng.hpp"
#include "advdial/tensor.hpp"

namespace advdial {

/// Wildcard slot value used by request acts ("give me the <slot>").
inline const std::string kRequestWildcard = "?";
/// Belief-tracker option for "the user has not mentioned this slot".
inline const std::string kNotMentioned = "";

// ---------------------------------------------------------------------------
// Ontology
// ---------------------------------------------------------------------------

struct Ontology {
    std::string name;
    std::vector<std::string> informable_slots;  // fixed order
    std::map<std::string, std::vector<std::string>> informable_values;
    std::vector<std::string> requestable_slots;
    std::vector<std::string> user_acts;
    std::vector<std::string> system_acts;

    void validate() const {
        if (informable_slots.empty()) throw DataError("ontology: no informable slots");
        for (const auto& slot : informable_slots) {
            auto it = informable_values.find(slot);
            if (it == informable_values.end() || it->second.empty()) {
                throw DataError("ontology: slot '" + slot + "' has no values");
            }
            std::set<std::string> seen(it->second.begin(), it->second.end());
            if (seen.size() != it->second.size()) {
                throw DataError("ontology: duplicate values for slot '" + slot + "'");
            }
        }
        if (user_acts.empty() || system_acts.empty()) {
            throw DataError("ontology: act inventories must be non-empty");
        }
    }

    bool is_informable(const std::string& slot) const {
        return std::find(informable_slots.begin(), informable_slots.end(), slot) !=
               informable_slots.end();
    }
    bool is_requestable(const std::string& slot) const {
        return std::find(requestable_slots.begin(), requestable_slots.end(), slot) !=
               requestable_slots.end();
    }

    std::size_t slot_index(const std::string& slot) const {
        for (std::size_t i = 0; i < informable_slots.size(); ++i) {
            if (informable_slots[i] == slot) return i;
        }
        throw DataError("unknown informable slot: " + slot);
    }

    std::size_t value_index(const std::string& slot, const std::string& value) const {
        const auto& vals = informable_values.at(slot);
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (vals[i] == value) return i;
        }
        throw DataError("unknown value '" + value + "' for slot '" + slot + "'");
    }

    /// Stable content hash used to pair checkpoints with their ontology.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](const std::string& s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 0x100000001b3ULL;
            }
            h ^= 0x1f;
            h *= 0x100000001b3ULL;
        };
        mix(name);
        for (const auto& s : informable_slots) {
            mix(s);
            for (const auto& v : informable_values.at(s)) mix(v);
        }
        for (const auto& s : requestable_slots) mix(s);
        for (const auto& s : user_acts) mix(s);
        for (const auto& s : system_acts) mix(s);
        return h;
    }
};

// ---------------------------------------------------------------------------
// Acts and actions
// ---------------------------------------------------------------------------

/// One participant utterance at the act level.
struct DialogAct {
    std::string act;
    std::vector<std::pair<std::string, std::string>> slot_values;

    bool operator==(const DialogAct& other) const {
        return act == other.act && slot_values == other.slot_values;
    }
};

/// One entry of the fixed system action inventory, e.g. confirm_food.
struct SystemAction {
    int id = -1;
    std::string label;
    std::string act;   // act type, e.g. "confirm"
    std::string slot;  // empty for slot-free acts
};

/// The full cross product of system act types and applicable slots plus the
/// slot-free acts, built once from the ontology and then frozen.
class ActionInventory {
public:
    explicit ActionInventory(const Ontology& ont) {
        for (const auto& act : ont.system_acts) {
            if (act == "request" || act == "confirm") {
                for (const auto& slot : ont.informable_slots) push(act, slot);
            } else if (act == "inform") {
                for (const auto& slot : ont.requestable_slots) push(act, slot);
            } else if (act == "offer" || act == "bye") {
                push(act, "");
            } else {
                throw DataError("unknown system act type: " + act);
            }
        }
    }

    std::size_t size() const { return actions_.size(); }
    const SystemAction& by_id(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= actions_.size()) {
            throw DataError("system action id out of range");
        }
        return actions_[static_cast<std::size_t>(id)];
    }
    const SystemAction& by_label(const std::string& label) const {
        auto it = by_label_.find(label);
        if (it == by_label_.end()) throw DataError("unknown system action label: " + label);
        return actions_[it->second];
    }
    bool has_label(const std::string& label) const { return by_label_.count(label) != 0; }
    const std::vector<SystemAction>& all() const { return actions_; }

private:
    void push(const std::string& act, const std::string& slot) {
        SystemAction a;
        a.id = static_cast<int>(actions_.size());
        a.act = act;
        a.slot = slot;
        a.label = slot.empty() ? act : act + "_" + slot;
        by_label_[a.label] = actions_.size();
        actions_.push_back(std::move(a));
    }

    std::vector<SystemAction> actions_;
    std::map<std::string, std::size_t> by_label_;
};

// ---------------------------------------------------------------------------
// Knowledge base
// ---------------------------------------------------------------------------

struct Entity {
    int id = 0;
    std::map<std::string, std::string> values;  // informables + requestable attributes
};

struct KnowledgeBase {
    std::vector<Entity> entities;

    void validate(const Ontology& ont) const {
        for (const auto& e : entities) {
            for (const auto& slot : ont.informable_slots) {
                if (!e.values.count(slot)) {
                    throw DataError("entity " + std::to_string(e.id) + " missing slot '" + slot +
                                    "'");
                }
            }
        }
    }
};

/// Entities matching every given constraint, in ascending id order.
inline std::vector<const Entity*> query_kb(const KnowledgeBase& kb, const Ontology& ont,
                                           const std::map<std::string, std::string>& constraints) {
    for (const auto& [slot, value] : constraints) {
        if (!ont.is_informable(slot)) throw DataError("query_kb: unknown slot '" + slot + "'");
    }
    std::vector<const Entity*> out;
    for (const auto& e : kb.entities) {
        bool ok = true;
        for (const auto& [slot, value] : constraints) {
            auto it = e.values.find(slot);
            if (it == e.values.end() || it->second != value) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(&e);
    }
    std::sort(out.begin(), out.end(),
              [](const Entity* a, const Entity* b) { return a->id < b->id; });
    return out;
}

// ---------------------------------------------------------------------------
// Query summary (E_k)
// ---------------------------------------------------------------------------

/// Compact summary of a KB lookup: a one-hot count bucket over {0, 1, 2-4, 5+}
/// plus a flag for "an entity is currently offered".
struct QuerySummary {
    int count_bucket = 0;
    bool available = false;

    static constexpr std::size_t kBuckets = 4;
    static constexpr std::size_t kWidth = kBuckets + 1;

    static int bucket_of(std::size_t count) {
        if (count == 0) return 0;
        if (count == 1) return 1;
        if (count <= 4) return 2;
        return 3;
    }

    std::vector<double> features() const {
        std::vector<double> f(kWidth, 0.0);
        f[static_cast<std::size_t>(count_bucket)] = 1.0;
        f[kBuckets] = available ? 1.0 : 0.0;
        return f;
    }

    bool operator==(const QuerySummary& o) const {
        return count_bucket == o.count_bucket && available == o.available;
    }
};

inline QuerySummary summarize(std::size_t result_count, bool offered) {
    QuerySummary s;
    s.count_bucket = QuerySummary::bucket_of(result_count);
    s.available = offered;
    return s;
}

// ---------------------------------------------------------------------------
// Goals and dialogs
// ---------------------------------------------------------------------------

struct UserGoal {
    std::map<std::string, std::string> constraints;
    std::vector<std::string> requests;  // duplicate-free, sampled order

    bool operator==(const UserGoal& o) const {
        return constraints == o.constraints && requests == o.requests;
    }
};

/// One exchange: user act, query summary at decision time, system action.
struct DialogTurn {
    DialogAct user;
    QuerySummary summary;
    int action = -1;
    double action_log_prob = 0.0;

    bool operator==(const DialogTurn& o) const {
        return user == o.user && summary == o.summary && action == o.action &&
               action_log_prob == o.action_log_prob;
    }
};

/// A full dialog plus the outcome metadata needed for success evaluation:
/// the agent's final belief argmax per informable slot (kNotMentioned when
/// nothing was tracked) and the set of requestable slots the agent answered
/// while its belief-consistent entity set was non-empty.
struct Dialog {
    std::vector<DialogTurn> turns;
    std::map<std::string, std::string> final_beliefs;
    std::set<std::string> fulfilled_requests;
    UserGoal goal;
    bool success = false;
    bool reached_turn_cap = false;

    bool operator==(const Dialog& o) const {
        return turns == o.turns && final_beliefs == o.final_beliefs &&
               fulfilled_requests == o.fulfilled_requests && goal == o.goal &&
               success == o.success && reached_turn_cap == o.reached_turn_cap;
    }
};

inline bool evaluate_success(const Dialog& dialog, const UserGoal& goal) {
    for (const auto& [slot, value] : goal.constraints) {
        auto it = dialog.final_beliefs.find(slot);
        if (it == dialog.final_beliefs.end() || it->second != value) return false;
    }
    for (const auto& slot : goal.requests) {
        if (!dialog.fulfilled_requests.count(slot)) return false;
    }
    return true;
}

/// +1 per correctly tracked informable; if all informables are correct,
/// +1 per fulfilled requested slot.
inline double designed_reward(const Dialog& dialog, const UserGoal& goal) {
    double score = 0.0;
    bool all_informables = true;
    for (const auto& [slot, value] : goal.constraints) {
        auto it = dialog.final_beliefs.find(slot);
        if (it != dialog.final_beliefs.end() && it->second == value) {
            score += 1.0;
        } else {
            all_informables = false;
        }
    }
    if (all_informables) {
        for (const auto& slot : goal.requests) {
            if (dialog.fulfilled_requests.count(slot)) score += 1.0;
        }
    }
    return score;
}

inline double oracle_reward(const Dialog& dialog, const UserGoal& goal) {
    return evaluate_success(dialog, goal) ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// World = ontology + action inventory + knowledge base
// ---------------------------------------------------------------------------

struct World {
    Ontology ontology;
    ActionInventory actions;
    KnowledgeBase kb;

    World(Ontology ont, KnowledgeBase base)
        : ontology(std::move(ont)), actions(ontology), kb(std::move(base)) {
        ontology.validate();
        kb.validate(ontology);
    }
};

// ---------------------------------------------------------------------------
// Built-in profiles
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> default_user_acts() { return {"inform", "request", "affirm", "bye"}; }
inline std::vector<std::string> default_system_acts() {
    return {"request", "confirm", "offer", "inform", "bye"};
}

inline KnowledgeBase synth_kb(const Ontology& ont, std::size_t n_entities, std::uint64_t seed) {
    KnowledgeBase kb;
    Rng rng(seed);
    for (std::size_t i = 0; i < n_entities; ++i) {
        Entity e;
        e.id = static_cast<int>(i);
        for (std::size_t s = 0; s < ont.informable_slots.size(); ++s) {
            const auto& slot = ont.informable_slots[s];
            const auto& vals = ont.informable_values.at(slot);
            // cycle through early values so every value is represented,
            // then fill the rest uniformly
            std::size_t vi = (i < vals.size()) ? i : rng.uniform_index(vals.size());
            e.values[slot] = vals[vi];
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "venue_%02zu", i);
        e.values["name"] = buf;
        std::snprintf(buf, sizeof(buf), "555-01%02zu", i);
        e.values["phone"] = buf;
        std::snprintf(buf, sizeof(buf), "%zu main street", i + 1);
        e.values["address"] = buf;
        std::snprintf(buf, sizeof(buf), "pc%03zu", i);
        e.values["postcode"] = buf;
        kb.entities.push_back(std::move(e));
    }
    return kb;
}

}  // namespace detail

/// Small controlled domain for fast experiments: 3 informable slots with
/// 4/6/3 values, 4 requestables, 20 entities.
inline World make_toy_world() {
    Ontology ont;
    ont.name = "toy";
    ont.informable_slots = {"area", "food", "price_range"};
    ont.informable_values["area"] = {"north", "south", "east", "west"};
    ont.informable_values["food"] = {"italian", "chinese", "indian", "thai", "french", "mexican"};
    ont.informable_values["price_range"] = {"cheap", "moderate", "expensive"};
    ont.requestable_slots = {"name", "phone", "address", "postcode"};
    ont.user_acts = detail::default_user_acts();
    ont.system_acts = detail::default_system_acts();
    ont.validate();
    KnowledgeBase kb = detail::synth_kb(ont, 20, 1234);
    return World(std::move(ont), std::move(kb));
}

/// DSTC2-scale profile: informable value counts 5/91/3, synthetic strings.
inline World make_dstc2_scale_world() {
    Ontology ont;
    ont.name = "dstc2-scale";
    ont.informable_slots = {"area", "food", "price_range"};
    for (int i = 0; i < 5; ++i) ont.informable_values["area"].push_back("area_" + std::to_string(i));
    for (int i = 0; i < 91; ++i) ont.informable_values["food"].push_back("food_" + std::to_string(i));
    for (int i = 0; i < 3; ++i) {
        ont.informable_values["price_range"].push_back("price_" + std::to_string(i));
    }
    ont.requestable_slots = {"name", "phone", "address", "postcode"};
    ont.user_acts = detail::default_user_acts();
    ont.system_acts = detail::default_system_acts();
    ont.validate();
    KnowledgeBase kb = detail::synth_kb(ont, 110, 5678);
    return World(std::move(ont), std::move(kb));
}

inline World make_world(const std::string& profile) {
    if (profile == "toy") return make_toy_world();
    if (profile == "dstc2-scale") return make_dstc2_scale_world();
    throw ConfigError("unknown profile: " + profile + " (expected toy or dstc2-scale)");
}

}  // namespace advdial
