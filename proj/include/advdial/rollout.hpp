#pragma once

#include <set>
#include <string>
#include <vector>

#include "advdial/domain.hpp"
#include "advdial/policy.hpp"
#include "advdial/simulator.hpp"
#include "advdial/tensor.hpp"

namespace advdial {

/// A simulated dialog plus the per-turn agent state snapshots the value
/// baseline consumes (empty tensors for policies without a numeric state).
struct RolloutResult {
    Dialog dialog;
    std::vector<Tensor> states;
};

/// Runs one dialog between a policy and the user simulator.
///
/// Per turn: user speaks, the agent updates its state, the KB is queried with
/// the agent's constraints to form E_k, the agent acts, and the action is
/// grounded (offers resolve to the lowest-id matching entity, confirms carry
/// the agent's belief argmax, informs carry the offered entity's attribute).
/// The dialog ends on a bye from either side or at the turn cap.
inline RolloutResult rollout(DialogPolicy& agent, UserSimulator& sim, const World& world,
                             UserGoal goal, int max_turns, ActionMode mode, Rng& rng) {
    sim.begin_dialog(std::move(goal));
    agent.begin_dialog();

    RolloutResult rr;
    rr.dialog.goal = sim.goal();

    RealizedAct prev;
    bool have_prev = false;
    int offered = -1;
    std::set<std::string> requested;
    bool ended = false;

    for (int k = 0; k < max_turns && !ended; ++k) {
        DialogAct user = sim.next_turn(have_prev ? &prev : nullptr, rng);

        if (user.act == "request") {
            for (const auto& [slot, value] : user.slot_values) requested.insert(slot);
        }
        if (user.act == "inform" && offered >= 0) {
            const Entity& e = world.kb.entities[static_cast<std::size_t>(offered)];
            for (const auto& [slot, value] : user.slot_values) {
                auto it = e.values.find(slot);
                if (it != e.values.end() && it->second != value) {
                    offered = -1;  // the standing offer contradicts the user
                    break;
                }
            }
        }

        agent.observe_user(user);
        auto constraints = agent.query_constraints();
        auto results = query_kb(world.kb, world.ontology, constraints);
        QuerySummary summary = summarize(results.size(), offered >= 0);

        double log_prob = 0.0;
        int action_id = agent.act(summary, mode, rng, &log_prob);
        const SystemAction& sa = world.actions.by_id(action_id);

        RealizedAct real;
        real.action_id = action_id;
        real.act = sa.act;
        real.slot = sa.slot;
        if (sa.act == "confirm") {
            auto beliefs = agent.final_beliefs();
            auto it = beliefs.find(sa.slot);
            real.value = it == beliefs.end() ? kNotMentioned : it->second;
        } else if (sa.act == "offer") {
            if (!results.empty()) {
                offered = results.front()->id;
                real.entity_id = offered;
                auto it = results.front()->values.find("name");
                if (it != results.front()->values.end()) real.value = it->second;
            } else {
                offered = -1;
                real.entity_id = -1;
            }
        } else if (sa.act == "inform") {
            const Entity* source = nullptr;
            if (offered >= 0) {
                source = &world.kb.entities[static_cast<std::size_t>(offered)];
            } else if (!results.empty()) {
                source = results.front();
            }
            if (source) {
                auto it = source->values.find(sa.slot);
                if (it != source->values.end()) real.value = it->second;
            }
            if (requested.count(sa.slot) && !results.empty()) {
                rr.dialog.fulfilled_requests.insert(sa.slot);
            }
        }
        agent.observe_system(real);

        rr.dialog.turns.push_back(DialogTurn{user, summary, action_id, log_prob});
        rr.states.push_back(agent.state_snapshot());

        prev = real;
        have_prev = true;
        ended = (user.act == "bye") || (sa.act == "bye");
    }
    rr.dialog.reached_turn_cap = !ended;
    rr.dialog.final_beliefs = agent.final_beliefs();
    rr.dialog.success = evaluate_success(rr.dialog, rr.dialog.goal);
    return rr;
}

}  // namespace advdial
