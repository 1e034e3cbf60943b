#include "arank/termination.hpp"

#include "arank/error.hpp"

#include <deque>

namespace arank {

const char* to_string(ControlKind kind) {
    switch (kind) {
    case ControlKind::converge: return "CONVERGE";
    case ControlKind::diverge: return "DIVERGE";
    case ControlKind::stop: return "STOP";
    }
    return "?";
}

std::optional<ControlMessage> ue_on_check(UEProtocolState& state, int ue_id,
                                          bool locally_converged) {
    if (locally_converged) {
        state.converged = true;
        if (state.pc < state.pc_max) {
            ++state.pc;
            if (state.pc == state.pc_max)
                return ControlMessage{ControlKind::converge, ue_id};
        }
        return std::nullopt;
    }
    if (state.converged) {
        state.converged = false;
        state.pc = 0;
        return ControlMessage{ControlKind::diverge, ue_id};
    }
    return std::nullopt;
}

bool monitor_on_message(MonitorState& state, const ControlMessage& msg) {
    if (state.stopped)
        throw ProtocolError("monitor received a message after STOP");
    if (msg.kind == ControlKind::stop)
        throw ProtocolError("monitor received STOP");
    if (msg.sender < 0 || static_cast<std::size_t>(msg.sender) >= state.ue_status.size())
        throw ProtocolError("monitor received a message from an unknown UE");

    state.ue_status[msg.sender] = msg.kind == ControlKind::converge;

    bool all_converged = true;
    for (bool status : state.ue_status)
        all_converged = all_converged && status;

    if (all_converged) {
        state.converged = true;
        if (state.pc < state.pc_max) {
            ++state.pc;
            if (state.pc == state.pc_max) {
                state.stopped = true;
                return true;
            }
        }
        return false;
    }
    if (state.converged) {
        state.converged = false;
        state.pc = 0;
    }
    return false;
}

ScenarioTrace run_protocol_scenario(int p, int pc_max_ue, int pc_max_monitor,
                                    std::span<const ScenarioEvent> script) {
    if (p < 1)
        throw ScriptError("scenario: need at least one UE");
    if (pc_max_ue < 1 || pc_max_monitor < 1)
        throw ScriptError("scenario: pc_max must be >= 1");

    ScenarioTrace trace;
    trace.ue_states.assign(p, UEProtocolState{pc_max_ue, 0, false});
    trace.monitor = MonitorState(p, pc_max_monitor);
    std::vector<std::deque<ControlMessage>> pending(p);

    int index = 0;
    for (const ScenarioEvent& event : script) {
        if (event.ue < 0 || event.ue >= p)
            throw ScriptError("scenario: UE id out of range");
        switch (event.kind) {
        case ScenarioEvent::Kind::check:
            if (auto msg = ue_on_check(trace.ue_states[event.ue], event.ue, event.value)) {
                pending[event.ue].push_back(*msg);
                trace.sent.push_back({index, *msg});
            }
            break;
        case ScenarioEvent::Kind::deliver:
            if (!pending[event.ue].empty()) {
                ControlMessage msg = pending[event.ue].front();
                pending[event.ue].pop_front();
                trace.delivered.push_back({index, msg});
                if (monitor_on_message(trace.monitor, msg)) {
                    ++trace.stop_count;
                    trace.stop_event_index = index;
                    return trace;
                }
            }
            break;
        }
        ++index;
    }
    return trace;
}

} // namespace arank
