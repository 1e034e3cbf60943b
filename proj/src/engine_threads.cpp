#include "arank/engine.hpp"

#include "arank/error.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace arank {

namespace {

struct SharedRun {
    std::atomic<bool> start{false};
    std::atomic<bool> abort{false};       // max_iters or transport failure
    std::atomic<bool> stop_issued{false}; // monitor broadcast STOP
    std::mutex error_mutex;
    std::string error;

    void fail(int ue, const std::string& what) {
        {
            std::lock_guard lock(error_mutex);
            if (error.empty())
                error = "UE " + std::to_string(ue) + ": " + what;
        }
        abort.store(true);
    }
};

void ue_loop(int id, UEState& state, const TransitionBlock& block,
             const GoogleParams& params, KernelKind kernel, double tolerance,
             const Partition& partition, int pc_max, std::uint64_t max_iters,
             Endpoint& endpoint, int monitor_id, SharedRun& shared, double& seconds) {
    while (!shared.start.load(std::memory_order_acquire))
        std::this_thread::yield();
    const auto t0 = std::chrono::steady_clock::now();
    UEProtocolState protocol{pc_max, 0, false};
    bool stop_received = false;

    try {
        while (!stop_received && !shared.abort.load(std::memory_order_relaxed)) {
            for (Message& msg : endpoint.poll_receive()) {
                if (auto* fragment = std::get_if<Fragment>(&msg)) {
                    ingest_fragment(state, *fragment, partition);
                } else if (std::get<ControlMessage>(msg).kind == ControlKind::stop) {
                    stop_received = true;
                }
            }
            if (stop_received)
                break; // the current step, if any, already completed

            auto [fragment, residual] = ue_step(state, block, params, kernel);
            state.converged = residual < tolerance;
            for (int peer = 0; peer < partition.p; ++peer)
                if (peer != id)
                    endpoint.send_nonblocking(peer, Message{fragment});
            if (auto msg = ue_on_check(protocol, id, state.converged))
                endpoint.send_nonblocking(monitor_id, Message{*msg});
            if (state.local_iter >= max_iters) {
                shared.abort.store(true);
                break;
            }
        }
    } catch (const std::exception& e) {
        shared.fail(id, e.what());
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void monitor_loop(int p, int pc_max, Endpoint& endpoint, SharedRun& shared,
                  bool& stopped_out) {
    while (!shared.start.load(std::memory_order_acquire))
        std::this_thread::yield();
    MonitorState monitor(p, pc_max);
    try {
        while (!shared.abort.load(std::memory_order_relaxed)) {
            bool had_messages = false;
            for (Message& msg : endpoint.poll_receive()) {
                had_messages = true;
                const auto* control = std::get_if<ControlMessage>(&msg);
                if (!control)
                    continue; // monitor ignores stray fragments
                if (monitor_on_message(monitor, *control)) {
                    for (int ue = 0; ue < p; ++ue)
                        endpoint.send_nonblocking(ue, Message{ControlMessage{
                                                           ControlKind::stop, p}});
                    shared.stop_issued.store(true);
                    stopped_out = true;
                    return;
                }
            }
            if (!had_messages)
                std::this_thread::sleep_for(std::chrono::microseconds(100));
        }
    } catch (const std::exception& e) {
        shared.fail(p, e.what());
    }
}

} // namespace

AsyncResult run_async_concurrent(const AdjacencyGraph& graph, const GoogleParams& params,
                                 const Partition& partition, KernelKind kernel,
                                 double tolerance, const TerminationParams& termination,
                                 std::uint64_t max_iters,
                                 std::span<Endpoint* const> endpoints) {
    const int p = partition.p;
    if (static_cast<int>(endpoints.size()) != p + 1)
        throw InvalidArgument("run_async_concurrent: need p computing endpoints plus a monitor");
    if (tolerance <= 0.0)
        throw InvalidArgument("tolerance must be positive");
    params.validate(graph.n);

    std::vector<TransitionBlock> blocks = build_all_blocks(graph, partition);
    const RankVector x0 = uniform_vector(graph.n);
    std::vector<UEState> states;
    states.reserve(p);
    for (int id = 0; id < p; ++id)
        states.push_back(UEState::initial(id, partition, x0));

    SharedRun shared;
    std::vector<double> seconds(p, 0.0);
    bool stopped = false;

    std::vector<std::thread> threads;
    threads.reserve(p + 1);
    for (int id = 0; id < p; ++id)
        threads.emplace_back(ue_loop, id, std::ref(states[id]), std::cref(blocks[id]),
                             std::cref(params), kernel, tolerance, std::cref(partition),
                             termination.pc_max_ue, max_iters, std::ref(*endpoints[id]), p,
                             std::ref(shared), std::ref(seconds[id]));
    threads.emplace_back(monitor_loop, p, termination.pc_max_monitor,
                         std::ref(*endpoints[p]), std::ref(shared), std::ref(stopped));
    shared.start.store(true, std::memory_order_release);
    for (std::thread& t : threads)
        t.join();

    {
        std::lock_guard lock(shared.error_mutex);
        if (!shared.error.empty())
            throw Error("asynchronous run failed: " + shared.error);
    }

    AsyncResult result;
    result.x.resize(graph.n);
    for (int id = 0; id < p; ++id) {
        const std::uint32_t begin = partition.begin(id);
        const std::uint32_t end = partition.end(id);
        std::copy(states[id].view.begin() + begin, states[id].view.begin() + end,
                  result.x.begin() + begin);
        result.per_ue_iters.push_back(states[id].local_iter);
        result.import_matrix.push_back(states[id].import_counts);
    }
    if (kernel == KernelKind::power)
        result.x = renormalize(result.x);
    result.per_ue_time_sec = seconds;

    RankVector gx(graph.n);
    for (const TransitionBlock& block : blocks) {
        std::span<double> rows(gx.data() + block.row_begin, block.rows());
        apply_google_block(block, result.x, params, rows);
    }
    result.global_residual = residual_l1(result.x, gx);
    result.converged = stopped;
    return result;
}

} // namespace arank
