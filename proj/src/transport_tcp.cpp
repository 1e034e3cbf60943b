#include "arank/codec.hpp"
#include "arank/error.hpp"
#include "arank/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <cerrno>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

namespace arank {

namespace {

constexpr int kPollIntervalMs = 50;

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

void set_nonblocking(int fd, bool enable) {
    int flags = ::fcntl(fd, F_GETFL, 0);
    if (enable)
        flags |= O_NONBLOCK;
    else
        flags &= ~O_NONBLOCK;
    ::fcntl(fd, F_SETFL, flags);
}

// Connect to 127.0.0.1:port, failing after the given timeout.
int connect_with_timeout(std::uint16_t port, std::chrono::milliseconds timeout) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0)
        return -1;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);

    set_nonblocking(fd, true);
    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (rc != 0 && errno == EINPROGRESS) {
        pollfd pfd{fd, POLLOUT, 0};
        rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (rc == 1) {
            int err = 0;
            socklen_t len = sizeof err;
            ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
            rc = err == 0 ? 0 : -1;
        } else {
            rc = -1;
        }
    }
    if (rc != 0) {
        close_fd(fd);
        return -1;
    }
    // Stays non-blocking; writers pair poll(POLLOUT) with send().
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return fd;
}

bool write_all(int fd, const std::uint8_t* data, std::size_t size,
               const std::atomic<bool>& shutdown) {
    std::size_t written = 0;
    while (written < size) {
        pollfd pfd{fd, POLLOUT, 0};
        int rc = ::poll(&pfd, 1, kPollIntervalMs);
        if (shutdown.load(std::memory_order_relaxed))
            return false;
        if (rc == 0)
            continue;
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        ssize_t n = ::send(fd, data + written, size - written, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && (errno == EINTR || errno == EAGAIN))
                continue;
            return false;
        }
        written += static_cast<std::size_t>(n);
    }
    return true;
}

// Reads exactly `size` bytes; polls so shutdown is noticed. Returns false
// on EOF, error or shutdown.
bool read_exact(int fd, std::uint8_t* data, std::size_t size, const std::atomic<bool>& shutdown) {
    std::size_t got = 0;
    while (got < size) {
        pollfd pfd{fd, POLLIN, 0};
        int rc = ::poll(&pfd, 1, kPollIntervalMs);
        if (shutdown.load(std::memory_order_relaxed))
            return false;
        if (rc == 0)
            continue;
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        ssize_t n = ::read(fd, data + got, size - got);
        if (n <= 0) {
            if (n < 0 && (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK))
                continue;
            return false;
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

struct OutboundLink {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<Message> queue;
    bool has_pending_fragment = false;
    bool paused = false;
    bool failed = false;
    int fd = -1;
    std::thread writer;
};

struct Inbox {
    std::deque<Message> queue;
};

class TcpEndpoint final : public Endpoint {
public:
    TcpEndpoint(int id, const TcpOptions& options) : id_(id), options_(options) {
        if (id < 0 || id >= options.endpoint_count)
            throw InvalidArgument("TcpEndpoint: id out of range");

        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0)
            throw TransportError("TcpEndpoint: cannot create listener socket");
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(options.base_port + id));
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
            ::listen(listen_fd_, options.endpoint_count) != 0) {
            close_fd(listen_fd_);
            throw TransportError("TcpEndpoint: cannot listen on port " +
                                 std::to_string(options.base_port + id));
        }
        set_nonblocking(listen_fd_, true);
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~TcpEndpoint() override {
        shutdown_.store(true);
        if (accept_thread_.joinable())
            accept_thread_.join();
        {
            std::lock_guard lock(readers_mutex_);
            for (auto& reader : readers_)
                if (reader.joinable())
                    reader.join();
        }
        for (auto& [peer, link] : links_) {
            {
                std::lock_guard lock(link->mutex);
                link->cv.notify_all();
            }
            if (link->writer.joinable())
                link->writer.join();
            close_fd(link->fd);
        }
        close_fd(listen_fd_);
    }

    int id() const override { return id_; }

    bool send_nonblocking(int peer, const Message& msg) override {
        if (peer < 0 || peer >= options_.endpoint_count || peer == id_)
            throw TransportError("invalid peer id " + std::to_string(peer));
        OutboundLink& link = outbound(peer);
        {
            std::lock_guard lock(link.mutex);
            if (link.failed)
                throw TransportError("peer " + std::to_string(peer) + " unreachable");
            if (std::holds_alternative<Fragment>(msg)) {
                if (link.has_pending_fragment) {
                    for (auto it = link.queue.begin(); it != link.queue.end(); ++it) {
                        if (std::holds_alternative<Fragment>(*it)) {
                            link.queue.erase(it);
                            bump([](TransportStats& s) { ++s.fragments_superseded; });
                            break;
                        }
                    }
                }
                link.has_pending_fragment = true;
                bump([](TransportStats& s) { ++s.fragments_sent; });
            } else {
                bump([](TransportStats& s) { ++s.controls_sent; });
            }
            link.queue.push_back(msg);
        }
        link.cv.notify_one();
        return true;
    }

    std::vector<Message> poll_receive() override {
        std::vector<Message> out;
        std::lock_guard lock(inbox_mutex_);
        for (auto& [sender, inbox] : inboxes_) {
            while (!inbox.queue.empty()) {
                out.push_back(std::move(inbox.queue.front()));
                inbox.queue.pop_front();
            }
        }
        if (!out.empty())
            bump([&](TransportStats& s) { s.messages_delivered += out.size(); });
        return out;
    }

    void set_link_paused(int peer, bool paused) override {
        OutboundLink& link = outbound(peer);
        {
            std::lock_guard lock(link.mutex);
            link.paused = paused;
        }
        link.cv.notify_one();
    }

    TransportStats stats() const override {
        std::lock_guard lock(stats_mutex_);
        return stats_;
    }

private:
    template <typename F>
    void bump(F f) {
        std::lock_guard lock(stats_mutex_);
        f(stats_);
    }

    OutboundLink& outbound(int peer) {
        std::lock_guard lock(links_mutex_);
        auto it = links_.find(peer);
        if (it == links_.end()) {
            auto link = std::make_unique<OutboundLink>();
            // Connect up front, bounded by send_timeout, so an
            // unreachable peer is reported to the first sender.
            link->fd = connect_with_timeout(
                static_cast<std::uint16_t>(options_.base_port + peer), options_.send_timeout);
            if (link->fd < 0)
                link->failed = true;
            else
                link->writer = std::thread([this, raw = link.get()] { writer_loop(*raw); });
            it = links_.emplace(peer, std::move(link)).first;
        }
        return *it->second;
    }

    void writer_loop(OutboundLink& link) {
        std::vector<std::uint8_t> frame;
        while (true) {
            Message msg;
            {
                std::unique_lock lock(link.mutex);
                link.cv.wait_for(lock, std::chrono::milliseconds(kPollIntervalMs), [&] {
                    return shutdown_.load() || (!link.paused && !link.queue.empty());
                });
                if (shutdown_.load())
                    return;
                if (link.paused || link.queue.empty())
                    continue;
                msg = std::move(link.queue.front());
                link.queue.pop_front();
                if (std::holds_alternative<Fragment>(msg))
                    link.has_pending_fragment = false;
            }
            frame = encode_frame(msg);
            if (!write_all(link.fd, frame.data(), frame.size(), shutdown_)) {
                std::lock_guard lock(link.mutex);
                link.failed = true;
                return;
            }
        }
    }

    void accept_loop() {
        while (!shutdown_.load()) {
            pollfd pfd{listen_fd_, POLLIN, 0};
            int rc = ::poll(&pfd, 1, kPollIntervalMs);
            if (rc <= 0)
                continue;
            int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0)
                continue;
            set_nonblocking(fd, true);
            std::lock_guard lock(readers_mutex_);
            readers_.emplace_back([this, fd]() mutable { reader_loop(fd); });
        }
    }

    void reader_loop(int fd) {
        std::vector<std::uint8_t> frame;
        while (!shutdown_.load()) {
            frame.resize(kFrameHeaderSize);
            if (!read_exact(fd, frame.data(), kFrameHeaderSize, shutdown_))
                break;
            auto size = frame_size_from_header(frame);
            if (!size) {
                // Header is unusable, so the stream cannot be re-framed.
                bump([](TransportStats& s) { ++s.corrupt_frames; });
                break;
            }
            frame.resize(*size);
            if (!read_exact(fd, frame.data() + kFrameHeaderSize, *size - kFrameHeaderSize,
                            shutdown_))
                break;
            DecodeResult decoded = decode_frame(frame);
            if (decoded.status != DecodeStatus::ok) {
                bump([](TransportStats& s) { ++s.corrupt_frames; });
                continue; // frame boundary is still known; skip it
            }
            const int sender = std::holds_alternative<Fragment>(*decoded.message)
                                   ? std::get<Fragment>(*decoded.message).sender
                                   : std::get<ControlMessage>(*decoded.message).sender;
            std::lock_guard lock(inbox_mutex_);
            inboxes_[sender].queue.push_back(std::move(*decoded.message));
        }
        ::close(fd);
    }

    int id_;
    TcpOptions options_;
    int listen_fd_ = -1;
    std::atomic<bool> shutdown_{false};

    std::thread accept_thread_;
    std::mutex readers_mutex_;
    std::vector<std::thread> readers_;

    std::mutex links_mutex_;
    std::map<int, std::unique_ptr<OutboundLink>> links_;

    std::mutex inbox_mutex_;
    std::map<int, Inbox> inboxes_; // ordered: senders visited in id order

    mutable std::mutex stats_mutex_;
    TransportStats stats_;
};

} // namespace

std::unique_ptr<Endpoint> make_tcp_endpoint(int id, const TcpOptions& options) {
    return std::make_unique<TcpEndpoint>(id, options);
}

} // namespace arank
