#include <catch2/catch_amalgamated.hpp>

#include "advdial/corpus.hpp"
#include "advdial/expert.hpp"
#include "advdial/rollout.hpp"
#include "advdial/simulator.hpp"

using namespace advdial;

TEST_CASE("sample_goal is reproducible and honors satisfiability") {
    World toy = make_toy_world();
    SimulatorConfig cfg;

    Rng a(7), b(7);
    UserGoal ga = sample_goal(toy.ontology, toy.kb, cfg, a);
    UserGoal gb = sample_goal(toy.ontology, toy.kb, cfg, b);
    REQUIRE(ga == gb);
    REQUIRE(ga.constraints.size() == 3);
    REQUIRE(ga.requests.size() >= 1);
    REQUIRE(ga.requests.size() <= 3);

    SimulatorConfig always_sat = cfg;
    always_sat.unsatisfiable_fraction = 0.0;
    Rng r1(11);
    for (int i = 0; i < 1000; ++i) {
        UserGoal g = sample_goal(toy.ontology, toy.kb, always_sat, r1);
        REQUIRE_FALSE(query_kb(toy.kb, toy.ontology, g.constraints).empty());
    }

    SimulatorConfig never_sat = cfg;
    never_sat.unsatisfiable_fraction = 1.0;
    Rng r2(13);
    for (int i = 0; i < 1000; ++i) {
        UserGoal g = sample_goal(toy.ontology, toy.kb, never_sat, r2);
        REQUIRE(query_kb(toy.kb, toy.ontology, g.constraints).empty());
    }
}

TEST_CASE("user reacts to confirms and offers per the agenda rules") {
    World toy = make_toy_world();
    SimulatorConfig cfg;
    cfg.epsilon = 0.0;
    UserSimulator sim(toy, cfg);

    UserGoal goal;
    goal.constraints = {{"area", "north"}, {"food", "italian"}, {"price_range", "cheap"}};
    goal.requests = {"phone"};

    // correct confirm -> affirm
    sim.begin_dialog(goal);
    Rng rng(1);
    sim.next_turn(nullptr, rng);
    RealizedAct confirm;
    confirm.act = "confirm";
    confirm.slot = "area";
    confirm.value = "north";
    DialogAct act = sim.next_turn(&confirm, rng);
    REQUIRE(act.act == "affirm");

    // wrong confirm -> re-inform with the goal value
    confirm.value = "south";
    act = sim.next_turn(&confirm, rng);
    REQUIRE(act.act == "inform");
    REQUIRE(act.slot_values.size() == 1);
    REQUIRE(act.slot_values[0].first == "area");
    REQUIRE(act.slot_values[0].second == "north");

    // matching offer with all requests satisfied -> bye, done
    UserGoal no_requests = goal;
    no_requests.requests.clear();
    // find the entity that matches the constraints, if any; otherwise craft one
    auto matches = query_kb(toy.kb, toy.ontology, goal.constraints);
    if (!matches.empty()) {
        sim.begin_dialog(no_requests);
        sim.next_turn(nullptr, rng);
        RealizedAct offer;
        offer.act = "offer";
        offer.entity_id = matches.front()->id;
        act = sim.next_turn(&offer, rng);
        REQUIRE(act.act == "bye");
        REQUIRE(sim.done());
    }
}

TEST_CASE("feedback only fires on successful dialogs at the configured rate") {
    World toy = make_toy_world();
    UserGoal goal;
    goal.constraints = {{"area", "north"}};
    Dialog success_dialog;
    success_dialog.final_beliefs = {{"area", "north"}};
    Dialog failed_dialog;
    failed_dialog.final_beliefs = {{"area", "south"}};

    Rng rng(3);
    REQUIRE_FALSE(feedback(success_dialog, goal, 0.0, rng));
    REQUIRE(feedback(success_dialog, goal, 1.0, rng));
    REQUIRE_FALSE(feedback(failed_dialog, goal, 1.0, rng));
    REQUIRE_THROWS_AS(feedback(success_dialog, goal, 1.5, rng), ConfigError);

    int positives = 0;
    for (int i = 0; i < 10000; ++i) {
        positives += feedback(success_dialog, goal, 0.1, rng) ? 1 : 0;
    }
    REQUIRE(positives >= 850);
    REQUIRE(positives <= 1150);
}

TEST_CASE("scripted expert completes every satisfiable goal without noise") {
    World toy = make_toy_world();
    SimulatorConfig cfg;
    cfg.epsilon = 0.0;
    cfg.unsatisfiable_fraction = 0.0;
    UserSimulator sim(toy, cfg);
    ScriptedExpert expert(toy);
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
        UserGoal goal = sample_goal(toy.ontology, toy.kb, cfg, rng);
        RolloutResult rr = rollout(expert, sim, toy, goal, 20, ActionMode::kGreedy, rng);
        INFO("dialog " << i << " turns " << rr.dialog.turns.size());
        REQUIRE(rr.dialog.success);
        REQUIRE_FALSE(rr.dialog.reached_turn_cap);
    }
}

TEST_CASE("rollouts terminate within the cap and stay in the ontology") {
    World toy = make_toy_world();
    SimulatorConfig cfg;  // default noise
    UserSimulator sim(toy, cfg);
    ScriptedExpert expert(toy);
    Rng rng(22);
    int successes = 0;
    for (int i = 0; i < 1000; ++i) {
        UserGoal goal = sample_goal(toy.ontology, toy.kb, cfg, rng);
        RolloutResult rr = rollout(expert, sim, toy, goal, 20, ActionMode::kGreedy, rng);
        REQUIRE(rr.dialog.turns.size() <= 20);
        REQUIRE(!rr.dialog.turns.empty());
        successes += rr.dialog.success ? 1 : 0;
        for (const auto& turn : rr.dialog.turns) {
            bool known_act = false;
            for (const auto& a : toy.ontology.user_acts) known_act |= a == turn.user.act;
            REQUIRE(known_act);
            for (const auto& [slot, value] : turn.user.slot_values) {
                if (turn.user.act == "inform") {
                    REQUIRE(toy.ontology.is_informable(slot));
                    REQUIRE_NOTHROW(toy.ontology.value_index(slot, value));
                } else if (turn.user.act == "request") {
                    REQUIRE(toy.ontology.is_requestable(slot));
                    REQUIRE(value == kRequestWildcard);
                }
            }
        }
    }
    // noise and unsatisfiable goals produce a mixture of outcomes
    REQUIRE(successes > 300);
    REQUIRE(successes < 1000);
}

TEST_CASE("fixed seeds reproduce the full transcript bitwise") {
    World toy = make_toy_world();
    SimulatorConfig cfg;
    auto run = [&](std::uint64_t seed) {
        UserSimulator sim(toy, cfg);
        ScriptedExpert expert(toy);
        Rng rng(seed);
        std::vector<Dialog> dialogs;
        for (int i = 0; i < 25; ++i) {
            UserGoal goal = sample_goal(toy.ontology, toy.kb, cfg, rng);
            dialogs.push_back(rollout(expert, sim, toy, goal, 20, ActionMode::kGreedy, rng).dialog);
        }
        return dialogs;
    };
    auto a = run(5), b = run(5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("generate_corpus aligns labels with turns") {
    World toy = make_toy_world();
    SimulatorConfig cfg;
    Rng rng(8);
    CorpusStats stats;
    auto corpus = generate_corpus(toy, cfg, 50, rng, &stats);
    REQUIRE(corpus.size() == 50);
    REQUIRE(stats.dialogs == 50);
    REQUIRE(stats.average_turns > 2.0);
    for (const auto& rec : corpus) {
        REQUIRE(!rec.turns.empty());
        for (const auto& turn : rec.turns) {
            REQUIRE(turn.gold_action >= 0);
            REQUIRE(turn.gold_labels.size() == toy.ontology.informable_slots.size());
        }
        // stored success must agree with evaluate_success on gold beliefs
        Dialog d = to_dialog(rec, toy.actions);
        REQUIRE(evaluate_success(d, rec.goal) == rec.success);
    }

    // noise-free corpora over satisfiable goals are uniformly successful
    SimulatorConfig clean = cfg;
    clean.epsilon = 0.0;
    clean.unsatisfiable_fraction = 0.0;
    Rng rng2(9);
    auto clean_corpus = generate_corpus(toy, clean, 30, rng2);
    for (const auto& rec : clean_corpus) REQUIRE(rec.success);
}
