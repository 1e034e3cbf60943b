#include "arank/transport.hpp"

#include "arank/error.hpp"

#include <deque>
#include <mutex>

namespace arank {

namespace {

struct Link {
    std::mutex mutex;
    std::deque<Message> queue;
    bool has_pending_fragment = false;
    bool paused = false;
};

// Drops the pending fragment (there is at most one) and appends the new
// one at the tail, so a superseding fragment never jumps ahead of a
// control message sent in between.
bool enqueue(Link& link, const Message& msg, TransportStats& stats) {
    std::lock_guard lock(link.mutex);
    if (std::holds_alternative<Fragment>(msg)) {
        if (link.has_pending_fragment) {
            for (auto it = link.queue.begin(); it != link.queue.end(); ++it) {
                if (std::holds_alternative<Fragment>(*it)) {
                    link.queue.erase(it);
                    ++stats.fragments_superseded;
                    break;
                }
            }
        }
        link.has_pending_fragment = true;
        ++stats.fragments_sent;
    } else {
        ++stats.controls_sent;
    }
    link.queue.push_back(msg);
    return true;
}

} // namespace

struct InProcessNetwork::Impl {
    int count;
    std::vector<std::unique_ptr<Link[]>> links; // links[to][from]
    std::vector<TransportStats> stats;
    std::vector<std::mutex> stats_mutex;
    std::vector<std::unique_ptr<Endpoint>> endpoints;

    explicit Impl(int endpoint_count)
        : count(endpoint_count), stats(endpoint_count), stats_mutex(endpoint_count) {
        links.reserve(count);
        for (int to = 0; to < count; ++to)
            links.emplace_back(new Link[count]);
    }

    Link& link(int from, int to) { return links[to][from]; }
};

namespace {

class InProcessEndpoint final : public Endpoint {
public:
    InProcessEndpoint(InProcessNetwork::Impl& net, int id) : net_(net), id_(id) {}

    int id() const override { return id_; }

    bool send_nonblocking(int peer, const Message& msg) override {
        check_peer(peer);
        std::lock_guard lock(net_.stats_mutex[id_]);
        return enqueue(net_.link(id_, peer), msg, net_.stats[id_]);
    }

    std::vector<Message> poll_receive() override {
        std::vector<Message> out;
        for (int from = 0; from < net_.count; ++from) {
            if (from == id_)
                continue;
            Link& link = net_.link(from, id_);
            std::lock_guard lock(link.mutex);
            if (link.paused)
                continue;
            while (!link.queue.empty()) {
                out.push_back(std::move(link.queue.front()));
                link.queue.pop_front();
            }
            link.has_pending_fragment = false;
        }
        if (!out.empty()) {
            std::lock_guard lock(net_.stats_mutex[id_]);
            net_.stats[id_].messages_delivered += out.size();
        }
        return out;
    }

    void set_link_paused(int peer, bool paused) override {
        check_peer(peer);
        Link& link = net_.link(id_, peer);
        std::lock_guard lock(link.mutex);
        link.paused = paused;
    }

    TransportStats stats() const override {
        std::lock_guard lock(net_.stats_mutex[id_]);
        return net_.stats[id_];
    }

private:
    void check_peer(int peer) const {
        if (peer < 0 || peer >= net_.count || peer == id_)
            throw TransportError("invalid peer id " + std::to_string(peer));
    }

    InProcessNetwork::Impl& net_;
    int id_;
};

} // namespace

InProcessNetwork::InProcessNetwork(int endpoint_count) {
    if (endpoint_count < 2)
        throw InvalidArgument("InProcessNetwork: need at least two endpoints");
    impl_ = std::make_unique<Impl>(endpoint_count);
    impl_->endpoints.reserve(endpoint_count);
    for (int i = 0; i < endpoint_count; ++i)
        impl_->endpoints.push_back(std::make_unique<InProcessEndpoint>(*impl_, i));
}

InProcessNetwork::~InProcessNetwork() = default;

int InProcessNetwork::size() const { return impl_->count; }

Endpoint& InProcessNetwork::endpoint(int id) {
    if (id < 0 || id >= impl_->count)
        throw InvalidArgument("InProcessNetwork: endpoint id out of range");
    return *impl_->endpoints[id];
}

} // namespace arank
