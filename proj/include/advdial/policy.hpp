#pragma once

#include <map>
#include <string>

#include "advdial/domain.hpp"
#include "advdial/rng.hpp"
#include "advdial/tensor.hpp"

namespace advdial {

/// A system action after grounding against the knowledge base: confirms carry
/// the value being confirmed, informs carry the attribute value, offers carry
/// the entity being offered (entity_id < 0 when nothing matched).
struct RealizedAct {
    int action_id = -1;
    std::string act;
    std::string slot;
    std::string value;
    int entity_id = -1;
};

enum class ActionMode { kSample, kGreedy };

/// Turn-level dialog policy. Implemented by the neural agent and by the
/// scripted expert; the rollout harness drives either through this surface.
class DialogPolicy {
public:
    virtual ~DialogPolicy() = default;

    virtual void begin_dialog() = 0;

    /// Consumes the user act for the current turn.
    virtual void observe_user(const DialogAct& user) = 0;

    /// The constraints this policy would query the KB with right now
    /// (belief argmaxes for the neural agent, heard values for the expert).
    virtual std::map<std::string, std::string> query_constraints() const = 0;

    /// Chooses a system action given the query summary for this turn.
    virtual int act(const QuerySummary& summary, ActionMode mode, Rng& rng,
                    double* log_prob) = 0;

    /// Notification of the grounded form of this policy's own action.
    virtual void observe_system(const RealizedAct& realized) = 0;

    /// Final per-slot belief argmax (kNotMentioned when untracked).
    virtual std::map<std::string, std::string> final_beliefs() const = 0;

    /// Numeric dialog-state snapshot for the value baseline; empty for
    /// policies without one.
    virtual Tensor state_snapshot() const { return Tensor(); }
};

}  // namespace advdial
