#pragma once

// Networked GHZ session: one coordinator and three node processes talking
// over TCP.
//
// Wire records are "<len> <payload>\n" where <len> is the decimal byte
// length of <payload>. Payloads, fields separated by single spaces:
//
//   HELLO <node>                         node -> coordinator, after accept
//   SCHEDULE <regime> <start> <end>, ... coordinator -> node
//   MEASURE <trial> <regime> <num/den>   coordinator -> node
//   RESULT <trial> <node> <+1|-1>        node -> coordinator
//   ERROR <trial> <node> <reason>        node -> coordinator
//   DONE                                 coordinator -> node
//
// Transcript lines are "<seq> <dir> <elapsed_ns> <payload>" with <dir> one of
// C>N1, C>N2, C>N3, N1>C, N2>C, N3>C or LOCAL.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "corrlab/errors.hpp"
#include "corrlab/ghz.hpp"

namespace corrlab::ghz::net {

inline constexpr std::size_t kMaxPayload = 1U << 20U;

inline std::string frame(std::string_view payload) {
    return std::to_string(payload.size()) + " " + std::string(payload) + "\n";
}

// ---------------------------------------------------------------- messages

enum class Kind { Hello, Schedule, Measure, Result, Error, Done };

inline const char* to_string(Kind k) {
    switch (k) {
    case Kind::Hello: return "HELLO";
    case Kind::Schedule: return "SCHEDULE";
    case Kind::Measure: return "MEASURE";
    case Kind::Result: return "RESULT";
    case Kind::Error: return "ERROR";
    case Kind::Done: return "DONE";
    }
    return "?";
}

struct Message {
    Kind kind = Kind::Done;
    std::uint64_t trial = 0;
    int node = 0;
    Regime regime = Regime::yyx;
    Rational t;
    int outcome = 0;
    std::string text; // schedule or error reason

    static Message hello(int node) { return {Kind::Hello, 0, node, {}, {}, 0, {}}; }
    static Message schedule(const Schedule& s) { return {Kind::Schedule, 0, 0, {}, {}, 0, s.str()}; }
    static Message measure(std::uint64_t trial, Regime r, Rational t) {
        return {Kind::Measure, trial, 0, r, std::move(t), 0, {}};
    }
    static Message result(std::uint64_t trial, int node, int outcome) {
        return {Kind::Result, trial, node, {}, {}, outcome, {}};
    }
    static Message error(std::uint64_t trial, int node, std::string reason) {
        return {Kind::Error, trial, node, {}, {}, 0, std::move(reason)};
    }
    static Message done() { return {}; }

    std::string encode() const {
        switch (kind) {
        case Kind::Hello: return "HELLO " + std::to_string(node);
        case Kind::Schedule: return "SCHEDULE " + text;
        case Kind::Measure:
            return "MEASURE " + std::to_string(trial) + " " + ghz::to_string(regime) + " " + t.fraction_str();
        case Kind::Result:
            return "RESULT " + std::to_string(trial) + " " + std::to_string(node) + (outcome > 0 ? " +1" : " -1");
        case Kind::Error: return "ERROR " + std::to_string(trial) + " " + std::to_string(node) + " " + text;
        case Kind::Done: return "DONE";
        }
        return {};
    }

    static Message parse(std::string_view payload);
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& s, std::string_view payload) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 19) {
        throw ProtocolError("bad integer '" + s + "' in '" + std::string(payload) + "'");
    }
    return std::stoull(s);
}

inline int parse_node(const std::string& s, std::string_view payload) {
    if (s != "1" && s != "2" && s != "3") {
        throw ProtocolError("bad node id '" + s + "' in '" + std::string(payload) + "'");
    }
    return s[0] - '0';
}

} // namespace detail

inline Message Message::parse(std::string_view payload) {
    std::istringstream in{std::string(payload)};
    std::string head;
    in >> head;
    auto field = [&]() {
        std::string f;
        if (!(in >> f)) {
            throw ProtocolError("truncated record '" + std::string(payload) + "'");
        }
        return f;
    };
    auto finish = [&]() {
        std::string extra;
        if (in >> extra) {
            throw ProtocolError("trailing data in '" + std::string(payload) + "'");
        }
    };
    Message m;
    try {
        if (head == "HELLO") {
            m = hello(detail::parse_node(field(), payload));
            finish();
        } else if (head == "SCHEDULE") {
            const auto pos = payload.find(' ');
            m = Message{Kind::Schedule, 0, 0, {}, {}, 0, pos == std::string_view::npos ? "" : std::string(payload.substr(pos + 1))};
            Schedule::parse(m.text);
        } else if (head == "MEASURE") {
            const auto trial = detail::parse_u64(field(), payload);
            const Regime r = parse_regime(field());
            const std::string t = field();
            if (t.find('/') == std::string::npos) {
                throw ProtocolError("time must be num/den in '" + std::string(payload) + "'");
            }
            m = measure(trial, r, Rational::parse(t));
            finish();
        } else if (head == "RESULT") {
            const auto trial = detail::parse_u64(field(), payload);
            const int node = detail::parse_node(field(), payload);
            const std::string o = field();
            if (o != "+1" && o != "-1") {
                throw ProtocolError("outcome must be +1 or -1 in '" + std::string(payload) + "'");
            }
            m = result(trial, node, o == "+1" ? 1 : -1);
            finish();
        } else if (head == "ERROR") {
            const auto trial = detail::parse_u64(field(), payload);
            const int node = detail::parse_node(field(), payload);
            std::string reason;
            std::getline(in >> std::ws, reason);
            m = error(trial, node, reason);
        } else if (head == "DONE") {
            finish();
            m = done();
        } else {
            throw ProtocolError("unknown record '" + std::string(payload) + "'");
        }
    } catch (const DomainError& e) {
        throw ProtocolError(std::string("invalid record '") + std::string(payload) + "': " + e.what());
    }
    return m;
}

// --------------------------------------------------------------- transport

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }

    static Endpoint parse(std::string_view text) {
        const auto colon = text.rfind(':');
        if (colon == std::string_view::npos || colon == 0) {
            throw DomainError("endpoint must be host:port, got '" + std::string(text) + "'");
        }
        const std::string port(text.substr(colon + 1));
        if (port.empty() || port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5 ||
            std::stoul(port) > 65535) {
            throw DomainError("bad port in endpoint '" + std::string(text) + "'");
        }
        return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(std::stoul(port))};
    }
};

namespace detail {

inline sockaddr_in resolve(const Endpoint& ep) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = getaddrinfo(ep.host.c_str(), nullptr, &hints, &res); rc != 0 || res == nullptr) {
        throw NetworkError("cannot resolve " + ep.host + ": " + gai_strerror(rc));
    }
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof(addr));
    freeaddrinfo(res);
    addr.sin_port = htons(ep.port);
    return addr;
}

inline std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

} // namespace detail

class Connection {
public:
    Connection() = default;
    explicit Connection(int fd) : fd_(fd) {
        const int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }
    Connection(Connection&& o) noexcept : fd_(std::exchange(o.fd_, -1)), buffer_(std::move(o.buffer_)) {}
    Connection& operator=(Connection&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
            buffer_ = std::move(o.buffer_);
        }
        return *this;
    }
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;
    ~Connection() { close(); }

    int fd() const { return fd_; }
    bool open() const { return fd_ >= 0; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    void send(std::string_view payload) {
        const std::string data = frame(payload);
        std::size_t sent = 0;
        while (sent < data.size()) {
            const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw NetworkError(detail::errno_text("send"));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    /// A complete record already buffered, if any.
    std::optional<std::string> take_buffered() {
        const auto space = buffer_.find(' ');
        if (space == std::string::npos) {
            if (buffer_.size() > 8) {
                throw ProtocolError("missing length prefix");
            }
            return std::nullopt;
        }
        const std::string len_text = buffer_.substr(0, space);
        if (len_text.empty() || len_text.find_first_not_of("0123456789") != std::string::npos || len_text.size() > 8) {
            throw ProtocolError("bad length prefix '" + len_text + "'");
        }
        const std::size_t len = std::stoul(len_text);
        if (len > kMaxPayload) {
            throw ProtocolError("record too long");
        }
        if (buffer_.size() < space + 1 + len + 1) {
            return std::nullopt;
        }
        if (buffer_[space + 1 + len] != '\n') {
            throw ProtocolError("record not newline-terminated");
        }
        std::string payload = buffer_.substr(space + 1, len);
        buffer_.erase(0, space + 1 + len + 1);
        return payload;
    }

    /// Reads more bytes; false when the peer closed the stream.
    bool fill() {
        char chunk[4096];
        for (;;) {
            const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n < 0 && errno == EINTR) {
                continue;
            }
            if (n < 0) {
                throw NetworkError(detail::errno_text("recv"));
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
            return n > 0;
        }
    }

    /// Next record; nullopt on timeout (timeout_ms < 0 waits forever).
    /// Throws NetworkError when the peer closes the stream.
    std::optional<std::string> receive(int timeout_ms = -1) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            if (auto p = take_buffered()) {
                return p;
            }
            int wait = -1;
            if (timeout_ms >= 0) {
                const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    deadline - std::chrono::steady_clock::now());
                wait = static_cast<int>(std::max<std::int64_t>(0, left.count()));
            }
            pollfd p{fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, wait);
            if (rc < 0 && errno == EINTR) {
                continue;
            }
            if (rc < 0) {
                throw NetworkError(detail::errno_text("poll"));
            }
            if (rc == 0) {
                return std::nullopt;
            }
            if (!fill()) {
                throw NetworkError("peer closed the connection");
            }
        }
    }

private:
    int fd_ = -1;
    std::string buffer_;
};

class Listener {
public:
    explicit Listener(const Endpoint& ep) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) {
            throw NetworkError(detail::errno_text("socket"));
        }
        const int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr = detail::resolve(ep);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
            const std::string msg = detail::errno_text(("bind " + ep.str()).c_str());
            ::close(fd_);
            throw NetworkError(msg);
        }
        if (::listen(fd_, 4) < 0) {
            ::close(fd_);
            throw NetworkError(detail::errno_text("listen"));
        }
        socklen_t len = sizeof(addr);
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
    }
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;
    ~Listener() {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }

    std::uint16_t port() const { return port_; }

    Connection accept(int timeout_ms = -1) {
        pollfd p{fd_, POLLIN, 0};
        int rc = 0;
        do {
            rc = ::poll(&p, 1, timeout_ms);
        } while (rc < 0 && errno == EINTR);
        if (rc <= 0) {
            throw NetworkError(rc == 0 ? "no coordinator connected in time" : detail::errno_text("poll"));
        }
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd < 0) {
            throw NetworkError(detail::errno_text("accept"));
        }
        return Connection(fd);
    }

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// Connects, retrying until `timeout_ms` has passed.
inline Connection connect_to(const Endpoint& ep, int timeout_ms) {
    const sockaddr_in addr = detail::resolve(ep);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) {
            throw NetworkError(detail::errno_text("socket"));
        }
        if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
            return Connection(fd);
        }
        const std::string err = detail::errno_text(("connect " + ep.str()).c_str());
        ::close(fd);
        if (std::chrono::steady_clock::now() >= deadline) {
            throw NetworkError(err);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

// -------------------------------------------------------------- transcript

struct TranscriptEntry {
    std::uint64_t seq = 0;
    std::string dir;
    std::int64_t elapsed_ns = 0;
    std::string payload;

    std::string str() const {
        return std::to_string(seq) + " " + dir + " " + std::to_string(elapsed_ns) + " " + payload;
    }
};

inline std::string to_coordinator(int node) { return "N" + std::to_string(node) + ">C"; }
inline std::string to_node(int node) { return "C>N" + std::to_string(node); }
inline constexpr const char* kLocal = "LOCAL";

/// Append-only transcript; every entry is flushed as soon as it is written.
class TranscriptWriter {
public:
    explicit TranscriptWriter(const std::string& path = {}) : start_(std::chrono::steady_clock::now()) {
        if (!path.empty()) {
            file_.open(path, std::ios::app);
            if (!file_) {
                throw NetworkError("cannot open transcript " + path);
            }
        }
    }

    void record(const std::string& dir, std::string_view payload) {
        TranscriptEntry e{next_seq_++, dir,
                          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_)
                              .count(),
                          std::string(payload)};
        if (file_.is_open()) {
            file_ << e.str() << '\n' << std::flush;
        }
        entries_.push_back(std::move(e));
    }

    const std::vector<TranscriptEntry>& entries() const { return entries_; }

private:
    std::chrono::steady_clock::time_point start_;
    std::ofstream file_;
    std::uint64_t next_seq_ = 0;
    std::vector<TranscriptEntry> entries_;
};

inline std::vector<TranscriptEntry> parse_transcript(std::string_view text) {
    std::vector<TranscriptEntry> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        TranscriptEntry e;
        if (!(ls >> e.seq >> e.dir >> e.elapsed_ns)) {
            throw ProtocolError("transcript line " + std::to_string(lineno) + " is malformed");
        }
        std::getline(ls >> std::ws, e.payload);
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<TranscriptEntry> read_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw NetworkError("cannot read transcript " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_transcript(ss.str());
}

// ------------------------------------------------------------- coordinator

struct CoordinatorOptions {
    Schedule schedule = Schedule::standard();
    std::uint64_t trials_per_regime = 100;
    std::uint64_t seed = 0;
    std::array<Endpoint, 3> nodes;
    std::string transcript_path;
    int connect_timeout_ms = 10000;
    int result_timeout_ms = 5000;
};

struct SessionResult {
    std::vector<TrialTriple> trials; // complete trials, in issue order
    std::vector<std::uint64_t> void_trials;
    bool aborted = false;
    std::string abort_reason;
    std::vector<TranscriptEntry> transcript;
};

namespace detail {

class Coordinator {
public:
    explicit Coordinator(const CoordinatorOptions& opt) : opt_(opt), log_(opt.transcript_path) {}

    SessionResult run() {
        SessionResult res;
        std::uint64_t next_trial = 0;
        std::vector<std::pair<std::uint64_t, Regime>> planned;
        std::vector<Rational> planned_t;
        for (const auto& w : opt_.schedule.windows()) {
            for (auto& t : draw_times(w, opt_.trials_per_regime, opt_.seed)) {
                planned.emplace_back(next_trial++, w.regime);
                planned_t.push_back(std::move(t));
            }
        }
        std::size_t i = 0;
        try {
            handshake();
            for (; i < planned.size(); ++i) {
                if (auto tr = run_trial(planned[i].first, planned[i].second, planned_t[i])) {
                    res.trials.push_back(std::move(*tr));
                } else {
                    res.void_trials.push_back(planned[i].first);
                }
            }
        } catch (const std::runtime_error& e) {
            res.aborted = true;
            res.abort_reason = e.what();
            log_.record(kLocal, std::string("ABORT ") + e.what());
            for (; i < planned.size(); ++i) {
                log_.record(kLocal, "VOID " + std::to_string(planned[i].first) + " aborted");
                res.void_trials.push_back(planned[i].first);
            }
        }
        for (int k = 0; k < 3; ++k) {
            if (conns_[k].open()) {
                try {
                    send(k + 1, Message::done());
                } catch (const NetworkError&) {
                }
                conns_[k].close();
            }
        }
        res.transcript = log_.entries();
        return res;
    }

private:
    void send(int node, const Message& m) {
        const std::string payload = m.encode();
        log_.record(to_node(node), payload);
        try {
            conns_[node - 1].send(payload);
        } catch (const NetworkError& e) {
            throw NetworkError("node " + std::to_string(node) + ": " + e.what());
        }
    }

    void handshake() {
        for (int k = 0; k < 3; ++k) {
            try {
                conns_[k] = connect_to(opt_.nodes[k], opt_.connect_timeout_ms);
            } catch (const NetworkError& e) {
                throw NetworkError("node " + std::to_string(k + 1) + " unreachable: " + e.what());
            }
            const auto hello = conns_[k].receive(opt_.connect_timeout_ms);
            if (!hello) {
                throw NetworkError("node " + std::to_string(k + 1) + " sent no HELLO");
            }
            log_.record(to_coordinator(k + 1), *hello);
            const Message m = Message::parse(*hello);
            if (m.kind != Kind::Hello || m.node != k + 1) {
                throw ProtocolError("expected HELLO " + std::to_string(k + 1) + " from " + opt_.nodes[k].str() +
                                    ", got '" + *hello + "'");
            }
        }
        for (int k = 1; k <= 3; ++k) {
            send(k, Message::schedule(opt_.schedule));
        }
    }

    std::optional<TrialTriple> run_trial(std::uint64_t id, Regime r, const Rational& t) {
        const Message measure = Message::measure(id, r, t);
        for (int k = 1; k <= 3; ++k) {
            send(k, measure);
        }
        std::array<std::optional<int>, 3> outcomes;
        std::string failure;
        int pending = 3;
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(opt_.result_timeout_ms);
        auto handle = [&](int node, const std::string& payload) {
            log_.record(to_coordinator(node), payload);
            const Message m = Message::parse(payload);
            if ((m.kind != Kind::Result && m.kind != Kind::Error) || m.node != node) {
                throw ProtocolError("unexpected record from node " + std::to_string(node) + ": '" + payload + "'");
            }
            if (m.trial != id) {
                return; // late answer to a trial already voided
            }
            auto& slot = outcomes[static_cast<std::size_t>(node - 1)];
            if (slot) {
                throw ProtocolError("duplicate answer from node " + std::to_string(node));
            }
            slot = m.kind == Kind::Result ? m.outcome : 0;
            if (m.kind == Kind::Error) {
                failure = "node " + std::to_string(node) + " error: " + m.text;
            }
            --pending;
        };
        while (pending > 0) {
            bool progressed = false;
            for (int k = 0; k < 3; ++k) {
                while (!outcomes[k]) {
                    auto p = conns_[k].take_buffered();
                    if (!p) {
                        break;
                    }
                    handle(k + 1, *p);
                    progressed = true;
                }
            }
            if (pending == 0) {
                break;
            }
            if (progressed) {
                continue;
            }
            const auto left =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                failure = "timeout";
                break;
            }
            std::array<pollfd, 3> fds{};
            for (int k = 0; k < 3; ++k) {
                fds[k] = {conns_[k].fd(), static_cast<short>(outcomes[k] ? 0 : POLLIN), 0};
            }
            const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
            if (rc < 0 && errno != EINTR) {
                throw NetworkError(errno_text("poll"));
            }
            for (int k = 0; k < 3; ++k) {
                if (rc > 0 && (fds[k].revents & (POLLIN | POLLHUP | POLLERR)) != 0) {
                    if (!conns_[k].fill()) {
                        throw NetworkError("node " + std::to_string(k + 1) + " closed the connection during trial " +
                                           std::to_string(id));
                    }
                }
            }
        }
        if (!failure.empty()) {
            log_.record(kLocal, "VOID " + std::to_string(id) + " " + failure);
            return std::nullopt;
        }
        return TrialTriple{id, r, t, {*outcomes[0], *outcomes[1], *outcomes[2]}};
    }

    const CoordinatorOptions& opt_;
    TranscriptWriter log_;
    std::array<Connection, 3> conns_;
};

} // namespace detail

/// Runs the whole schedule against three remote nodes. Failures after the
/// session starts are reported in the result (aborted, void trials) rather
/// than thrown.
inline SessionResult coordinator_run(const CoordinatorOptions& options) {
    return detail::Coordinator(options).run();
}

// -------------------------------------------------------------------- node

struct NodeOptions {
    int node = 1;
    NodeAssignment assignment = NodeAssignment::table5();
    Endpoint listen{"127.0.0.1", 0};
    std::string transcript_path;
    std::optional<std::uint64_t> exit_after; // drop the connection after this many answers
    std::function<void(std::uint16_t)> on_listening;
    int accept_timeout_ms = -1;
};

struct NodeSummary {
    std::uint64_t answered = 0;
    std::uint64_t errors = 0;
    bool done = false; // false when the node stopped before DONE
};

/// Serves one coordinator session until DONE. Each answer depends only on
/// (node, regime, t) and the received schedule.
inline NodeSummary node_serve(const NodeOptions& opt) {
    if (opt.node < 1 || opt.node > 3) {
        throw DomainError("node id must be 1, 2 or 3");
    }
    Listener listener(opt.listen);
    if (opt.on_listening) {
        opt.on_listening(listener.port());
    }
    Connection conn = listener.accept(opt.accept_timeout_ms);
    TranscriptWriter log(opt.transcript_path);
    const std::string in_dir = to_node(opt.node);
    const std::string out_dir = to_coordinator(opt.node);
    auto reply = [&](const Message& m) {
        const std::string payload = m.encode();
        log.record(out_dir, payload);
        conn.send(payload);
    };
    reply(Message::hello(opt.node));
    std::optional<Schedule> schedule;
    NodeSummary summary;
    for (;;) {
        if (opt.exit_after && summary.answered + summary.errors >= *opt.exit_after) {
            log.record(kLocal, "EXIT after " + std::to_string(*opt.exit_after) + " answers");
            return summary;
        }
        const auto payload = conn.receive();
        log.record(in_dir, *payload);
        const Message m = Message::parse(*payload);
        switch (m.kind) {
        case Kind::Schedule: schedule = Schedule::parse(m.text); break;
        case Kind::Measure:
            if (!schedule) {
                reply(Message::error(m.trial, opt.node, "no-schedule"));
                ++summary.errors;
            } else if (!schedule->require(m.regime).contains(m.t)) {
                reply(Message::error(m.trial, opt.node, "outside-window"));
                ++summary.errors;
            } else {
                reply(Message::result(m.trial, opt.node, node_output(opt.assignment, *schedule, opt.node, m.regime, m.t)));
                ++summary.answered;
            }
            break;
        case Kind::Done: summary.done = true; return summary;
        default: throw ProtocolError("node received unexpected record '" + *payload + "'");
        }
    }
}

// ------------------------------------------------------------ verification

struct TranscriptReport {
    std::vector<TrialTriple> trials; // trials with three matching-kind answers
    std::uint64_t measures = 0;
    std::uint64_t void_trials = 0;
    std::vector<std::string> mismatches;   // outcomes that do not re-derive
    std::vector<std::string> forwarding;   // RESULT records seen on a coordinator->node edge
    std::vector<std::string> incomplete;   // non-void trials without three RESULTs
    ProductTable products;

    bool ok() const { return mismatches.empty() && forwarding.empty() && incomplete.empty(); }
};

/// Re-derives every recorded outcome from (node, regime, t), checks that no
/// node was ever sent a RESULT, and tabulates products per regime.
inline TranscriptReport verify_transcript(const std::vector<TranscriptEntry>& entries,
                                          const NodeAssignment& assignment = NodeAssignment::table5()) {
    struct Pending {
        Regime regime = Regime::yyx;
        Rational t;
        std::array<std::optional<int>, 3> outcomes;
        bool is_void = false;
        bool measured = false;
    };
    TranscriptReport rep;
    std::optional<Schedule> schedule;
    std::map<std::uint64_t, Pending> by_trial;
    std::vector<std::uint64_t> order;
    for (const auto& e : entries) {
        const std::string where = "seq " + std::to_string(e.seq);
        if (e.dir == kLocal) {
            if (e.payload.rfind("VOID ", 0) == 0) {
                std::istringstream in(e.payload.substr(5));
                std::uint64_t id = 0;
                if (in >> id) {
                    auto& p = by_trial[id];
                    if (!p.is_void) {
                        p.is_void = true;
                        ++rep.void_trials;
                    }
                }
            }
            continue;
        }
        const bool inbound = e.dir.size() == 4 && e.dir.rfind("C>N", 0) == 0;
        const bool outbound = e.dir.size() == 4 && e.dir.substr(2) == ">C" && e.dir[0] == 'N';
        if (!inbound && !outbound) {
            rep.mismatches.push_back(where + ": unknown direction " + e.dir);
            continue;
        }
        const int node = inbound ? e.dir[3] - '0' : e.dir[1] - '0';
        Message m;
        try {
            m = Message::parse(e.payload);
        } catch (const ProtocolError& err) {
            rep.mismatches.push_back(where + ": " + err.what());
            continue;
        }
        if (inbound) {
            if (m.kind == Kind::Result || m.kind == Kind::Error) {
                rep.forwarding.push_back(where + ": node " + std::to_string(node) + " received '" + e.payload + "'");
            } else if (m.kind == Kind::Schedule) {
                schedule = Schedule::parse(m.text);
            } else if (m.kind == Kind::Measure) {
                Pending& p = by_trial[m.trial];
                if (!p.measured) {
                    p.measured = true;
                    p.regime = m.regime;
                    p.t = m.t;
                    order.push_back(m.trial);
                    ++rep.measures;
                } else if (p.regime != m.regime || p.t != m.t) {
                    rep.mismatches.push_back(where + ": trial " + std::to_string(m.trial) +
                                             " measured with different inputs at different nodes");
                }
            }
            continue;
        }
        if (m.kind != Kind::Result) {
            continue;
        }
        if (m.node != node) {
            rep.mismatches.push_back(where + ": RESULT claims node " + std::to_string(m.node) + " on edge " + e.dir);
            continue;
        }
        const auto it = by_trial.find(m.trial);
        if (it == by_trial.end() || !it->second.measured) {
            rep.mismatches.push_back(where + ": RESULT for unknown trial " + std::to_string(m.trial));
            continue;
        }
        Pending& p = it->second;
        if (schedule && !schedule->require(p.regime).contains(p.t)) {
            rep.mismatches.push_back(where + ": trial " + std::to_string(m.trial) + " time outside its window");
            continue;
        }
        const int expected = assignment.response(node, p.regime, p.t);
        if (expected != m.outcome) {
            rep.mismatches.push_back("trial " + std::to_string(m.trial) + " node " + std::to_string(node) +
                                     ": recorded " + (m.outcome > 0 ? "+1" : "-1") + ", expected " +
                                     (expected > 0 ? "+1" : "-1"));
        }
        p.outcomes[static_cast<std::size_t>(node - 1)] = m.outcome;
    }
    for (std::uint64_t id : order) {
        const Pending& p = by_trial[id];
        const bool complete = p.outcomes[0] && p.outcomes[1] && p.outcomes[2];
        if (p.is_void) {
            continue;
        }
        if (!complete) {
            rep.incomplete.push_back("trial " + std::to_string(id) + " lacks a RESULT");
            continue;
        }
        rep.trials.push_back({id, p.regime, p.t, {*p.outcomes[0], *p.outcomes[1], *p.outcomes[2]}});
    }
    rep.products = tabulate(rep.trials);
    return rep;
}

} // namespace corrlab::ghz::net
