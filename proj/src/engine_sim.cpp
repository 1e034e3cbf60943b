#include "arank/engine.hpp"

#include "arank/error.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <random>
#include <sstream>

namespace arank {

void Schedule::validate() const {
    if (mode == Mode::lockstep && (delay_bound != 0 || drop_rate != 0.0))
        throw InvalidArgument("lockstep schedule requires delay_bound = 0 and drop_rate = 0");
    if (drop_rate < 0.0 || drop_rate >= 1.0)
        throw InvalidArgument("drop_rate must lie in [0,1)");
}

UEState UEState::initial(int id, const Partition& partition, const RankVector& x0) {
    UEState state;
    state.id = id;
    state.view = x0;
    state.last_seen.assign(partition.p, 0);
    state.import_counts.assign(partition.p, 0);
    return state;
}

std::pair<Fragment, double> ue_step(UEState& state, const TransitionBlock& block,
                                    const GoogleParams& params, KernelKind kernel) {
    Fragment fragment;
    fragment.sender = state.id;
    fragment.begin = block.row_begin;
    fragment.values.resize(block.rows());
    if (kernel == KernelKind::power)
        apply_google_block(block, state.view, params, fragment.values);
    else
        apply_linear_block(block, state.view, params, fragment.values);

    std::span<const double> own(state.view.data() + block.row_begin, block.rows());
    const double residual = residual_l1(fragment.values, own);

    ++state.local_iter;
    fragment.local_iter = state.local_iter;
    state.last_seen[state.id] = state.local_iter;
    state.import_counts[state.id] = state.local_iter;
    std::copy(fragment.values.begin(), fragment.values.end(),
              state.view.begin() + block.row_begin);
    return {std::move(fragment), residual};
}

bool ingest_fragment(UEState& state, const Fragment& fragment, const Partition& partition) {
    const int sender = fragment.sender;
    if (sender == state.id)
        throw ProtocolError("UE received its own fragment");
    if (sender < 0 || sender >= partition.p)
        throw ProtocolError("fragment from unknown UE " + std::to_string(sender));
    if (fragment.begin != partition.begin(sender) ||
        fragment.end() != partition.end(sender))
        throw ProtocolError("fragment range does not match sender's partition block");

    if (fragment.local_iter <= state.last_seen[sender])
        return false;
    std::copy(fragment.values.begin(), fragment.values.end(),
              state.view.begin() + fragment.begin);
    state.last_seen[sender] = fragment.local_iter;
    ++state.import_counts[sender];
    return true;
}

const char* to_string(TraceKind kind) {
    switch (kind) {
    case TraceKind::step: return "step";
    case TraceKind::ingest: return "ingest";
    case TraceKind::reject: return "reject";
    case TraceKind::converge: return "converge";
    case TraceKind::diverge: return "diverge";
    case TraceKind::stop: return "stop";
    }
    return "?";
}

std::string format_trace(std::span<const TraceEvent> trace) {
    std::ostringstream out;
    out.precision(17);
    for (const TraceEvent& e : trace)
        out << e.virtual_time << '\t' << e.ue << '\t' << to_string(e.kind) << '\t'
            << e.peer << '\t' << e.local_iter << '\t' << e.residual << '\n';
    return out.str();
}

namespace {

// Deterministic single-threaded engine core. Advances virtual time one
// primitive at a time; delivery and stepping policies live in the
// drivers below.
class Simulator {
public:
    Simulator(const AdjacencyGraph& graph, const GoogleParams& params,
              const Partition& partition, KernelKind kernel, double tolerance,
              const TerminationParams& termination, std::uint64_t max_iters,
              const SimOptions& options)
        : params_(params), partition_(partition), kernel_(kernel), tolerance_(tolerance),
          max_iters_(max_iters), options_(options), monitor_(partition.p, termination.pc_max_monitor) {
        if (tolerance <= 0.0)
            throw InvalidArgument("tolerance must be positive");
        if (termination.pc_max_ue < 1 || termination.pc_max_monitor < 1)
            throw InvalidArgument("pc_max must be >= 1");
        params_.validate(graph.n);
        blocks_ = build_all_blocks(graph, partition);

        const RankVector x0 = uniform_vector(graph.n);
        const int p = partition.p;
        for (int id = 0; id < p; ++id) {
            states_.push_back(UEState::initial(id, partition, x0));
            protocol_.push_back(UEProtocolState{termination.pc_max_ue, 0, false});
            Fragment seed;
            seed.sender = id;
            seed.local_iter = 0;
            seed.begin = partition.begin(id);
            seed.values.assign(x0.begin() + partition.begin(id), x0.begin() + partition.end(id));
            history_.emplace_back();
            history_.back().push_back(std::move(seed));
        }
        mailbox_.resize(p);
        step_seconds_.assign(p, 0.0);
    }

    int p() const { return partition_.p; }
    bool stopped() const { return stopped_; }
    bool aborted() const { return aborted_; }
    std::uint64_t latest_iter(int ue) const { return states_[ue].local_iter; }

    void deliver(int receiver, int sender, std::int64_t iter) {
        if (receiver < 0 || receiver >= p() || sender < 0 || sender >= p() ||
            receiver == sender)
            throw ScriptError("deliver: invalid receiver/sender pair");
        const auto& history = history_[sender];
        const Fragment* found = nullptr;
        if (iter < 0) {
            found = &history.back();
        } else {
            for (const Fragment& f : history)
                if (f.local_iter == static_cast<std::uint64_t>(iter)) {
                    found = &f;
                    break;
                }
            if (!found)
                throw ScriptError("deliver: fragment " + std::to_string(iter) +
                                  " from UE " + std::to_string(sender) +
                                  " is no longer available");
        }
        mailbox_[receiver].push_back(*found);
    }

    // Ingest pending fragments, update, broadcast, report. Returns false
    // when the UE has already halted.
    bool step(int ue) {
        if (ue < 0 || ue >= p())
            throw ScriptError("step: UE id out of range");
        if (stopped_)
            return false;

        UEState& state = states_[ue];
        for (const Fragment& fragment : mailbox_[ue]) {
            const bool accepted = ingest_fragment(state, fragment, partition_);
            trace(ue, accepted ? TraceKind::ingest : TraceKind::reject, fragment.sender,
                  fragment.local_iter, 0.0);
        }
        mailbox_[ue].clear();

        const auto t0 = std::chrono::steady_clock::now();
        auto [fragment, residual] = ue_step(state, blocks_[ue], params_, kernel_);
        step_seconds_[ue] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        state.converged = residual < tolerance_;
        trace(ue, TraceKind::step, -1, state.local_iter, residual);

        history_[ue].push_back(std::move(fragment));
        while (history_[ue].size() > options_.history_window)
            history_[ue].pop_front();

        if (auto msg = ue_on_check(protocol_[ue], ue, state.converged)) {
            trace(ue, msg->kind == ControlKind::converge ? TraceKind::converge
                                                         : TraceKind::diverge,
                  p(), state.local_iter, residual);
            if (monitor_on_message(monitor_, *msg)) {
                stopped_ = true;
                trace(p(), TraceKind::stop, -1, 0, 0.0);
            }
        }
        if (state.local_iter >= max_iters_)
            aborted_ = true;
        return true;
    }

    void record_round_iterate() {
        if (!options_.record_iterates)
            return;
        iterates_.push_back(assemble());
    }

    SimOutput finish() {
        SimOutput out;
        AsyncResult& result = out.result;
        result.x = assemble();
        if (kernel_ == KernelKind::power)
            result.x = renormalize(result.x);
        result.per_ue_iters.reserve(p());
        result.import_matrix.reserve(p());
        for (const UEState& state : states_) {
            result.per_ue_iters.push_back(state.local_iter);
            result.import_matrix.push_back(state.import_counts);
        }
        result.per_ue_time_sec = step_seconds_;
        result.global_residual = global_residual(result.x);
        result.converged = stopped_;
        out.trace = std::move(trace_);
        out.iterates = std::move(iterates_);
        return out;
    }

private:
    RankVector assemble() const {
        RankVector x(partition_.n);
        for (const UEState& state : states_) {
            const std::uint32_t begin = partition_.begin(state.id);
            const std::uint32_t end = partition_.end(state.id);
            std::copy(state.view.begin() + begin, state.view.begin() + end, x.begin() + begin);
        }
        return x;
    }

    double global_residual(const RankVector& x) const {
        RankVector gx(partition_.n);
        for (const TransitionBlock& block : blocks_) {
            std::span<double> rows(gx.data() + block.row_begin, block.rows());
            apply_google_block(block, x, params_, rows);
        }
        return residual_l1(x, gx);
    }

    void trace(int ue, TraceKind kind, int peer, std::uint64_t local_iter, double residual) {
        if (!options_.record_trace)
            return;
        trace_.push_back({virtual_time_++, ue, kind, peer, local_iter, residual});
    }

    GoogleParams params_;
    Partition partition_;
    KernelKind kernel_;
    double tolerance_;
    std::uint64_t max_iters_;
    SimOptions options_;

    std::vector<TransitionBlock> blocks_;
    std::vector<UEState> states_;
    std::vector<UEProtocolState> protocol_;
    MonitorState monitor_;
    std::vector<std::deque<Fragment>> history_;
    std::vector<std::vector<Fragment>> mailbox_;
    std::vector<double> step_seconds_;

    bool stopped_ = false;
    bool aborted_ = false;
    std::uint64_t virtual_time_ = 0;
    std::vector<TraceEvent> trace_;
    std::vector<RankVector> iterates_;
};

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

SimOutput run_async_sim(const AdjacencyGraph& graph, const GoogleParams& params,
                        const Partition& partition, KernelKind kernel,
                        const Schedule& schedule, double tolerance,
                        const TerminationParams& termination, std::uint64_t max_iters,
                        const SimOptions& options) {
    schedule.validate();
    if (schedule.mode == Schedule::Mode::scripted)
        throw InvalidArgument("scripted schedules run through simulate_deterministic");

    SimOptions adjusted = options;
    adjusted.history_window =
        std::max<std::uint32_t>(adjusted.history_window, schedule.delay_bound + 2);
    Simulator sim(graph, params, partition, kernel, tolerance, termination, max_iters,
                  adjusted);

    std::mt19937_64 rng(schedule.seed);
    const int p = partition.p;
    const std::uint64_t delay = schedule.delay_bound;
    // last_delivered[i][j]: freshest iteration of UE j delivered to UE i.
    std::vector<std::vector<std::uint64_t>> last_delivered(
        p, std::vector<std::uint64_t>(p, 0));

    for (std::uint64_t round = 1; !sim.stopped() && !sim.aborted(); ++round) {
        // Delivery phase. Each link offers the fragment produced
        // delay-many rounds ago (delay drawn per link per round); a
        // delivery is skipped with probability drop_rate unless the
        // receiver's staleness would exceed delay_bound.
        for (int receiver = 0; receiver < p; ++receiver) {
            for (int sender = 0; sender < p; ++sender) {
                if (sender == receiver)
                    continue;
                std::uint64_t& last = last_delivered[receiver][sender];
                const std::uint64_t produced = sim.latest_iter(sender); // == round - 1
                if (produced <= last)
                    continue;
                const bool forced = last + delay < produced;
                if (!forced && schedule.drop_rate > 0.0 &&
                    unit_draw(rng) < schedule.drop_rate)
                    continue;
                std::uint64_t offset = delay > 0 ? rng() % (delay + 1) : 0;
                offset = std::min(offset, produced); // rounds below delay_bound
                const std::uint64_t target = produced - offset;
                if (target <= last)
                    continue; // nothing fresher scheduled this round
                sim.deliver(receiver, sender, static_cast<std::int64_t>(target));
                last = target;
            }
        }
        for (int ue = 0; ue < p; ++ue)
            sim.step(ue);
        sim.record_round_iterate();
    }
    return sim.finish();
}

SimOutput simulate_deterministic(const AdjacencyGraph& graph, const GoogleParams& params,
                                 const Partition& partition, KernelKind kernel,
                                 std::span<const ScriptEvent> script, double tolerance,
                                 const TerminationParams& termination,
                                 std::uint64_t max_iters, const SimOptions& options) {
    SimOptions adjusted = options;
    adjusted.record_trace = true;
    Simulator sim(graph, params, partition, kernel, tolerance, termination, max_iters,
                  adjusted);
    for (const ScriptEvent& event : script) {
        if (sim.stopped() || sim.aborted())
            break;
        switch (event.kind) {
        case ScriptEvent::Kind::step:
            sim.step(event.ue);
            break;
        case ScriptEvent::Kind::deliver:
            sim.deliver(event.ue, event.peer, event.iter);
            break;
        }
    }
    return sim.finish();
}

} // namespace arank
