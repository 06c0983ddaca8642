#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "nnemd/authority.hpp"
#include "nnemd/config.hpp"
#include "nnemd/serial.hpp"

namespace nnemd {

// Wire format: 4-byte big-endian length prefix, then a UTF-8 JSON body
// {type, run_digest, payload}. Unknown types and digest mismatches abort the
// connection.

struct WireMessage {
    std::string type;
    std::string run_digest;
    Json payload;
};

std::string encode_frame(const WireMessage& msg);
WireMessage decode_frame(const std::string& body);

/// Blocking TCP connection with framed send/receive. Owns the fd.
class Conn {
public:
    explicit Conn(int fd) : fd_(fd) {}
    ~Conn();
    Conn(const Conn&) = delete;
    Conn& operator=(const Conn&) = delete;
    Conn(Conn&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }

    void send(const WireMessage& msg);
    /// Throws NetError on timeout/EOF; validates digest and max frame size.
    WireMessage recv();

    void expect_digest(const std::string& digest) { digest_ = digest; }
    void set_max_frame(std::size_t bytes) { max_frame_ = bytes; }
    int fd() const { return fd_; }

private:
    int fd_ = -1;
    std::string digest_;
    std::size_t max_frame_ = 256u << 20;
};

class Listener {
public:
    Listener(const std::string& host, std::uint16_t port);
    ~Listener();
    Listener(const Listener&) = delete;

    std::unique_ptr<Conn> accept_conn(int timeout_ms = 120000);
    int fd() const { return fd_; }

private:
    int fd_ = -1;
};

std::unique_ptr<Conn> connect_to(const std::string& host, std::uint16_t port,
                                 int retry_ms = 100, int attempts = 300);

/// Role entry points; each runs its event loop to completion and returns a
/// process exit code. All three enforce the shared run digest at every
/// message.
int run_tpa(const RunConfig& cfg);
int run_server(const RunConfig& cfg);
int run_client(const RunConfig& cfg);

}  // namespace nnemd
