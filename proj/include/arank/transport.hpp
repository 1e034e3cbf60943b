#pragma once

#include "arank/messages.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <vector>

namespace arank {

struct TransportStats {
    std::uint64_t fragments_sent = 0;
    std::uint64_t fragments_superseded = 0;
    std::uint64_t controls_sent = 0;
    std::uint64_t messages_delivered = 0;
    std::uint64_t corrupt_frames = 0;
};

/// One endpoint of the message fabric, owned by a single unit of
/// execution. Sends never block beyond the configured timeout. A
/// fragment still pending on a link is superseded by a newer one from
/// the same sender; control messages are queued reliably and per-link
/// send order is preserved among surviving messages.
class Endpoint {
public:
    virtual ~Endpoint() = default;

    virtual int id() const = 0;

    /// Queues a message to one peer. Returns true when accepted
    /// (superseding an older pending fragment counts as accepted).
    virtual bool send_nonblocking(int peer, const Message& msg) = 0;

    /// Drains everything currently deliverable, preserving per-sender
    /// arrival order; senders are visited in ascending id order.
    virtual std::vector<Message> poll_receive() = 0;

    /// Test hook: a paused link accepts (and supersedes) sends but
    /// delivers nothing until resumed.
    virtual void set_link_paused(int peer, bool paused) = 0;

    virtual TransportStats stats() const = 0;
};

/// Shared-memory fabric connecting endpoint_count endpoints (computing
/// UEs plus the monitor at the highest id).
class InProcessNetwork {
public:
    explicit InProcessNetwork(int endpoint_count);
    ~InProcessNetwork();

    int size() const;
    Endpoint& endpoint(int id);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct TcpOptions {
    std::uint16_t base_port = 4700;
    int endpoint_count = 0; // ids [0, endpoint_count), each listening on base_port + id
    std::chrono::milliseconds send_timeout{2000};
};

/// TCP endpoint: listens on base_port + id, lazily connects to peers on
/// first send. Frames travel as encoded by the wire codec with no extra
/// framing. An unreachable peer surfaces as a transport error within
/// send_timeout.
std::unique_ptr<Endpoint> make_tcp_endpoint(int id, const TcpOptions& options);

} // namespace arank
