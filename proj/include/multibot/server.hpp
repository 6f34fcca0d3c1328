#pragma once

#include <memory>
#include <string>

#include "multibot/orchestrator.hpp"

namespace multibot {

/// WebSocket front end for one session. Frames are JSON objects
/// {type: chat|state|wizard_inbox|error|control, payload}. Inbound commands
/// are queued and applied between engine ticks on the server thread.
class StreamServer {
public:
    /// Binds immediately; port 0 picks a free port. Throws BindError.
    StreamServer(Session& session, unsigned short port, const std::string& address = "127.0.0.1");
    ~StreamServer();

    StreamServer(const StreamServer&) = delete;
    StreamServer& operator=(const StreamServer&) = delete;

    unsigned short port() const;

    /// Serves until stop(); ticks the engine at the scenario rate.
    void run();

    /// Safe to call from any thread.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace multibot
