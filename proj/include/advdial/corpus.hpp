#pragma once

#include <map>
#include <string>
#include <vector>

#include "advdial/domain.hpp"
#include "advdial/expert.hpp"
#include "advdial/rollout.hpp"
#include "advdial/simulator.hpp"

namespace advdial {

/// One aligned supervised-training turn: user act, the gold system action,
/// gold per-slot labels (kNotMentioned when unstated), and the query summary
/// the gold agent saw.
struct CorpusTurn {
    DialogAct user;
    int gold_action = -1;
    std::map<std::string, std::string> gold_labels;
    QuerySummary summary;

    bool operator==(const CorpusTurn& o) const {
        return user == o.user && gold_action == o.gold_action && gold_labels == o.gold_labels &&
               summary == o.summary;
    }
};

struct CorpusRecord {
    std::string dialog_id;
    std::vector<CorpusTurn> turns;
    UserGoal goal;
    bool success = false;
    bool success_known = true;  // chat sessions are recorded with unknown outcome

    bool operator==(const CorpusRecord& o) const {
        return dialog_id == o.dialog_id && turns == o.turns && goal == o.goal &&
               success == o.success && success_known == o.success_known;
    }
};

/// Projects a corpus record onto the Dialog form the discriminator and the
/// success evaluator consume. Final beliefs are the last turn's gold labels;
/// fulfilled requests are re-derived from the transcript (an inform of a
/// requested slot while the summary showed a non-empty match set).
inline Dialog to_dialog(const CorpusRecord& rec) {
    Dialog d;
    d.goal = rec.goal;
    for (const auto& t : rec.turns) {
        d.turns.push_back(DialogTurn{t.user, t.summary, t.gold_action, 0.0});
    }
    if (!rec.turns.empty()) d.final_beliefs = rec.turns.back().gold_labels;
    d.success = rec.success;
    return d;
}

/// Inventory-aware projection: also re-derives fulfilled requests so that
/// evaluate_success agrees with the stored success flag for gold corpora.
inline Dialog to_dialog(const CorpusRecord& rec, const ActionInventory& inventory) {
    Dialog d = to_dialog(rec);
    std::set<std::string> seen_requests;
    for (const auto& t : rec.turns) {
        if (t.user.act == "request") {
            for (const auto& [slot, value] : t.user.slot_values) seen_requests.insert(slot);
        }
        if (t.gold_action >= 0) {
            const SystemAction& sa = inventory.by_id(t.gold_action);
            if (sa.act == "inform" && seen_requests.count(sa.slot) && t.summary.count_bucket > 0) {
                d.fulfilled_requests.insert(sa.slot);
            }
        }
    }
    return d;
}

struct CorpusStats {
    std::size_t dialogs = 0;
    double success_fraction = 0.0;
    double average_turns = 0.0;
};

/// Simulates `n` dialogs between the scripted expert and the user simulator
/// and returns them as aligned supervised records.
inline std::vector<CorpusRecord> generate_corpus(const World& world, const SimulatorConfig& sim_cfg,
                                                 std::size_t n, Rng& rng,
                                                 CorpusStats* stats = nullptr) {
    if (n == 0) throw ConfigError("generate_corpus: n must be >= 1");
    std::vector<CorpusRecord> out;
    UserSimulator sim(world, sim_cfg);
    ScriptedExpert expert(world);
    std::size_t successes = 0;
    std::size_t total_turns = 0;
    for (std::size_t i = 0; i < n; ++i) {
        UserGoal goal = sample_goal(world.ontology, world.kb, sim_cfg, rng);
        RolloutResult rr = rollout(expert, sim, world, goal, 20, ActionMode::kGreedy, rng);
        const auto& labels = expert.turn_labels();

        CorpusRecord rec;
        rec.dialog_id = "d" + std::to_string(out.size());
        rec.goal = rr.dialog.goal;
        rec.success = rr.dialog.success;
        for (std::size_t k = 0; k < rr.dialog.turns.size(); ++k) {
            CorpusTurn t;
            t.user = rr.dialog.turns[k].user;
            t.gold_action = rr.dialog.turns[k].action;
            t.summary = rr.dialog.turns[k].summary;
            t.gold_labels = labels[k];
            rec.turns.push_back(std::move(t));
        }
        successes += rec.success ? 1 : 0;
        total_turns += rec.turns.size();
        out.push_back(std::move(rec));
    }
    if (stats) {
        stats->dialogs = n;
        stats->success_fraction = static_cast<double>(successes) / static_cast<double>(n);
        stats->average_turns = static_cast<double>(total_turns) / static_cast<double>(n);
    }
    return out;
}

}  // namespace advdial
