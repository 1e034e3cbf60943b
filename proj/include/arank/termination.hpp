#pragma once

#include "arank/messages.hpp"

#include <optional>
#include <span>
#include <vector>

namespace arank {

/// Computing-UE side of the centralized termination protocol. The
/// persistence counter delays CONVERGE until pc_max consecutive positive
/// checks, absorbing in-flight messages that could destroy convergence.
struct UEProtocolState {
    int pc_max = 1;
    int pc = 0;
    bool converged = false;
};

/// Feed one local convergence check. Returns CONVERGE when pc first
/// reaches pc_max (the counter then saturates, so CONVERGE is emitted at
/// most once per converged episode) and DIVERGE when convergence is lost.
std::optional<ControlMessage> ue_on_check(UEProtocolState& state, int ue_id,
                                          bool locally_converged);

/// Monitor side: tracks each UE's last report and applies the same
/// persistence-counter mechanics with the all-converged predicate as the
/// convergence check.
struct MonitorState {
    std::vector<bool> ue_status; // last report per UE, true == CONVERGE
    int pc_max = 1;
    int pc = 0;
    bool converged = false;
    bool stopped = false;

    explicit MonitorState(int p = 0, int pc_max_ = 1)
        : ue_status(static_cast<std::size_t>(p), false), pc_max(pc_max_) {}
};

/// Process one CONVERGE/DIVERGE report. Returns true exactly once, when
/// STOP must be broadcast to all computing UEs.
bool monitor_on_message(MonitorState& state, const ControlMessage& msg);

// Deterministic scenario harness for protocol tests.

struct ScenarioEvent {
    enum class Kind { check, deliver };
    Kind kind = Kind::check;
    int ue = 0;
    bool value = false; // locally_converged, for check events

    static ScenarioEvent check(int ue, bool value) {
        return {Kind::check, ue, value};
    }
    static ScenarioEvent deliver(int ue) { return {Kind::deliver, ue, false}; }
};

struct ScenarioTrace {
    struct Sent {
        int event_index;
        ControlMessage msg;
    };
    std::vector<Sent> sent;          // messages emitted by UEs, in emission order
    std::vector<Sent> delivered;     // messages processed by the monitor
    std::vector<UEProtocolState> ue_states;
    MonitorState monitor{0, 1};
    int stop_count = 0;
    int stop_event_index = -1; // index of the delivery that triggered STOP
};

/// Replays a script of per-UE convergence checks and explicit delivery
/// events. deliver(ue) hands the monitor the oldest undelivered message
/// from that UE; a STOP ends the scenario (remaining events are ignored).
ScenarioTrace run_protocol_scenario(int p, int pc_max_ue, int pc_max_monitor,
                                    std::span<const ScenarioEvent> script);

} // namespace arank
