#pragma once

#include "arank/kernels.hpp"
#include "arank/messages.hpp"
#include "arank/termination.hpp"
#include "arank/transport.hpp"
#include "arank/webgraph.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace arank {

enum class KernelKind { power, linear };

/// Delay model driving the deterministic engine. Lockstep delivers every
/// fragment with zero delay (reproducing the synchronous iteration);
/// seeded-random injects bounded random staleness and skipped deliveries;
/// scripted replays an explicit event sequence. delay_bound caps the
/// realized staleness in iterations, so every fragment is eventually
/// superseded or delivered (total asynchronism is excluded).
struct Schedule {
    enum class Mode { lockstep, seeded_random, scripted };
    Mode mode = Mode::lockstep;
    std::uint64_t seed = 0;
    std::uint32_t delay_bound = 0;
    double drop_rate = 0.0;

    void validate() const;

    static Schedule lockstep() { return {}; }
    static Schedule seeded(std::uint64_t seed, std::uint32_t delay_bound, double drop_rate) {
        return {Mode::seeded_random, seed, delay_bound, drop_rate};
    }
};

struct ScriptEvent {
    enum class Kind { step, deliver };
    Kind kind = Kind::step;
    int ue = 0;             // stepping UE, or receiver for deliver
    int peer = -1;          // sender for deliver
    std::int64_t iter = -1; // fragment to deliver; -1 means the sender's latest

    static ScriptEvent step(int ue) { return {Kind::step, ue, -1, -1}; }
    static ScriptEvent deliver(int receiver, int sender, std::int64_t iter = -1) {
        return {Kind::deliver, receiver, sender, iter};
    }
};

/// Per-UE working state: the stale full-length view, iteration counter,
/// per-peer freshness watermarks and import accounting.
struct UEState {
    int id = 0;
    RankVector view;
    std::uint64_t local_iter = 0;
    std::vector<std::uint64_t> last_seen;      // latest local_iter received per peer
    bool converged = false;                    // last local residual below tolerance
    std::vector<std::uint64_t> import_counts;  // fragments consumed per peer; own
                                               // entry equals local_iter

    static UEState initial(int id, const Partition& partition, const RankVector& x0);
};

/// One asynchronous update: applies the chosen kernel to the current view,
/// replaces the owner's slice and returns the new fragment together with
/// the 1-norm change of that slice.
std::pair<Fragment, double> ue_step(UEState& state, const TransitionBlock& block,
                                    const GoogleParams& params, KernelKind kernel);

/// Latest-value ingest: a fragment is accepted only if strictly fresher
/// than everything already seen from its sender.
bool ingest_fragment(UEState& state, const Fragment& fragment, const Partition& partition);

struct TerminationParams {
    int pc_max_ue = 1;
    int pc_max_monitor = 1;
};

struct AsyncResult {
    RankVector x; // assembled from each UE's own freshest fragment
    std::vector<std::uint64_t> per_ue_iters;
    std::vector<double> per_ue_time_sec;
    std::vector<std::vector<std::uint64_t>> import_matrix; // [receiver][sender]
    double global_residual = 0.0;                          // ||x - Gx||_1 after assembly
    bool converged = false;
};

enum class TraceKind { step, ingest, reject, converge, diverge, stop };

struct TraceEvent {
    std::uint64_t virtual_time = 0;
    int ue = 0;
    TraceKind kind = TraceKind::step;
    int peer = -1;
    std::uint64_t local_iter = 0;
    double residual = 0.0;
};

const char* to_string(TraceKind kind);
/// One event per line: virtual_time, ue_id, event_kind, peer_id,
/// local_iter, residual, tab-separated.
std::string format_trace(std::span<const TraceEvent> trace);

struct SimOptions {
    bool record_trace = false;
    bool record_iterates = false;    // assembled vector after every round
    std::uint32_t history_window = 64; // fragments retained per UE for delivery
};

struct SimOutput {
    AsyncResult result;
    std::vector<TraceEvent> trace;
    std::vector<RankVector> iterates;
};

/// Deterministic virtual-time engine driven by a lockstep or
/// seeded-random schedule. Identical inputs give bitwise-identical
/// traces and results.
SimOutput run_async_sim(const AdjacencyGraph& graph, const GoogleParams& params,
                        const Partition& partition, KernelKind kernel,
                        const Schedule& schedule, double tolerance,
                        const TerminationParams& termination,
                        std::uint64_t max_iters = 10000, const SimOptions& options = {});

/// Single-threaded replay of an explicit event script; the trace records
/// every step, ingest and protocol event so staleness bookkeeping can be
/// asserted literally.
SimOutput simulate_deterministic(const AdjacencyGraph& graph, const GoogleParams& params,
                                 const Partition& partition, KernelKind kernel,
                                 std::span<const ScriptEvent> script, double tolerance,
                                 const TerminationParams& termination,
                                 std::uint64_t max_iters = 10000,
                                 const SimOptions& options = {});

/// Concurrent engine: one unit of execution per computing UE plus a
/// monitor, all data flowing through the given endpoints (ids 0..p-1
/// computing, id p the monitor).
AsyncResult run_async_concurrent(const AdjacencyGraph& graph, const GoogleParams& params,
                                 const Partition& partition, KernelKind kernel,
                                 double tolerance, const TerminationParams& termination,
                                 std::uint64_t max_iters,
                                 std::span<Endpoint* const> endpoints);

} // namespace arank
