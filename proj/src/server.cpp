#include "multibot/server.hpp"

#include <chrono>
#include <deque>
#include <functional>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "multibot/errors.hpp"

namespace multibot {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

ojson error_frame(const std::string& message)
{
    return {{"type", "error"}, {"payload", {{"message", message}}}};
}

ojson control_frame(ojson payload)
{
    return {{"type", "control"}, {"payload", std::move(payload)}};
}

} // namespace

struct StreamServer::Impl {
    struct Client : std::enable_shared_from_this<Client> {
        explicit Client(tcp::socket socket) : ws(std::move(socket)) {}

        websocket::stream<beast::tcp_stream> ws;
        beast::flat_buffer buffer;
        std::deque<std::string> outbox;
        bool writing = false;
        bool open = false;
    };

    Impl(Session& s, unsigned short port, const std::string& address) : session(s), acceptor(ioc), timer(ioc)
    {
        beast::error_code ec;
        const tcp::endpoint ep(asio::ip::make_address(address, ec), port);
        if (ec) {
            throw BindError("bad address " + address + ": " + ec.message());
        }
        acceptor.open(ep.protocol(), ec);
        if (!ec) {
            acceptor.set_option(asio::socket_base::reuse_address(true), ec);
        }
        if (!ec) {
            acceptor.bind(ep, ec);
        }
        if (!ec) {
            acceptor.listen(asio::socket_base::max_listen_connections, ec);
        }
        if (ec) {
            throw BindError("cannot listen on " + address + ":" + std::to_string(port) + ": " + ec.message());
        }
    }

    void start()
    {
        session.set_sink([this](const ojson& f) {
            if (f["type"] == "wizard_inbox") {
                if (auto w = wizard.lock()) {
                    send(w, f);
                }
            } else {
                broadcast(f);
            }
        });
        accept();
        schedule_tick();
    }

    void accept()
    {
        acceptor.async_accept([self = this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                return; // acceptor closed
            }
            auto client = std::make_shared<Client>(std::move(socket));
            client->ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            client->ws.async_accept([self, client](beast::error_code aec) {
                if (aec) {
                    return;
                }
                client->open = true;
                self->clients.push_back(client);
                self->send(client, self->session.hello_frame());
                self->read(client);
            });
            self->accept();
        });
    }

    void read(const std::shared_ptr<Client>& c)
    {
        c->ws.async_read(c->buffer, [self = this, c](beast::error_code ec, std::size_t) {
            if (ec) {
                self->drop(c);
                return;
            }
            std::string text = beast::buffers_to_string(c->buffer.data());
            c->buffer.consume(c->buffer.size());
            self->receive(c, text);
            self->read(c);
        });
    }

    // Parses now (so malformed input is answered at once), applies at the next tick.
    void receive(const std::shared_ptr<Client>& c, const std::string& text)
    {
        ojson msg;
        try {
            msg = ojson::parse(text);
        } catch (const ojson::parse_error&) {
            send(c, error_frame("frame is not JSON"));
            return;
        }
        if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
            send(c, error_frame("frame needs a string type"));
            return;
        }
        const std::string type = msg["type"].get<std::string>();
        std::weak_ptr<Client> who = c;
        if (type == "say") {
            if (!msg.contains("text") || !msg["text"].is_string()) {
                send(c, error_frame("say needs text"));
                return;
            }
            queue.push_back([this, text = msg["text"].get<std::string>()] { session.say(text); });
        } else if (type == "wizard") {
            std::optional<TbsMessage> tbs;
            if (msg.contains("tbs") && !msg["tbs"].is_null()) {
                try {
                    tbs = decode(msg["tbs"].dump());
                } catch (const DecodeError& e) {
                    send(c, error_frame(std::string("tbs ") + e.what()));
                    return;
                }
            }
            if (wizard.lock() != c) {
                send(c, error_frame("only the wizard client may send wizard frames"));
                return;
            }
            const std::string reply = msg.value("reply", std::string());
            queue.push_back([this, who, reply, tbs] {
                try {
                    if (auto problem = session.wizard_submit(reply, tbs)) {
                        if (auto w = who.lock()) {
                            send(w, error_frame(*problem));
                        }
                    }
                } catch (const Error& e) {
                    if (auto w = who.lock()) {
                        send(w, error_frame(e.what()));
                    }
                }
            });
        } else if (type == "control") {
            control(c, msg);
        } else {
            send(c, error_frame("unknown frame type " + type));
        }
    }

    void control(const std::shared_ptr<Client>& c, const ojson& msg)
    {
        const std::string action = msg.value("action", std::string());
        std::weak_ptr<Client> who = c;
        if (action == "claim_wizard") {
            queue.push_back([this, who] {
                auto w = who.lock();
                if (!w) {
                    return;
                }
                if (auto current = wizard.lock(); current && current != w) {
                    send(w, error_frame("the wizard role is already taken"));
                    return;
                }
                wizard = w;
                session.set_wizard_connected(true);
                send(w, control_frame({{"event", "wizard_granted"}}));
            });
        } else if (action == "set_dm_mode") {
            const auto mode = parse_dm_mode(msg.value("mode", std::string()));
            if (!mode) {
                send(c, error_frame("set_dm_mode needs mode auto or wizard"));
                return;
            }
            queue.push_back([this, who, m = *mode] {
                try {
                    session.set_dm_mode(m);
                    broadcast(control_frame({{"event", "dm_mode"}, {"mode", std::string(to_string(m))}}));
                } catch (const NoWizardConnected& e) {
                    if (auto w = who.lock()) {
                        send(w, error_frame(e.what()));
                    }
                }
            });
        } else if (action == "set_addressing") {
            const auto mode = parse_addressing_mode(msg.value("mode", std::string()));
            if (!mode) {
                send(c, error_frame("set_addressing needs mode explicit or implicit"));
                return;
            }
            queue.push_back([this, m = *mode] {
                session.context().mode = m;
                broadcast(control_frame({{"event", "addressing"}, {"mode", std::string(to_string(m))}}));
            });
        } else if (action == "history") {
            send(c, session.hello_frame());
        } else {
            send(c, error_frame("unknown control action " + action));
        }
    }

    void drop(const std::shared_ptr<Client>& c)
    {
        c->open = false;
        std::erase(clients, c);
        if (wizard.lock() == c) {
            wizard.reset();
            session.set_wizard_connected(false);
            if (session.dm_mode() == DmMode::wizard) {
                session.set_dm_mode(DmMode::automatic);
                broadcast(control_frame({{"event", "dm_mode"}, {"mode", "auto"}}));
            }
        }
    }

    void send(const std::shared_ptr<Client>& c, const ojson& frame)
    {
        if (!c->open) {
            return;
        }
        c->outbox.push_back(frame.dump());
        flush(c);
    }

    void broadcast(const ojson& frame)
    {
        const std::string text = frame.dump();
        for (const auto& c : clients) {
            c->outbox.push_back(text);
            flush(c);
        }
    }

    void flush(const std::shared_ptr<Client>& c)
    {
        if (c->writing || c->outbox.empty() || !c->open) {
            return;
        }
        c->writing = true;
        c->ws.text(true);
        c->ws.async_write(asio::buffer(c->outbox.front()),
                          [self = this, c](beast::error_code ec, std::size_t) {
                              c->writing = false;
                              if (ec) {
                                  c->outbox.clear();
                                  return; // the read side notices and drops the client
                              }
                              c->outbox.pop_front();
                              self->flush(c);
                          });
    }

    void schedule_tick()
    {
        const auto period = std::chrono::duration_cast<asio::steady_timer::duration>(
            std::chrono::duration<double>(session.sim().config.tick));
        timer.expires_after(period);
        timer.async_wait([self = this](beast::error_code ec) {
            if (ec) {
                return;
            }
            self->tick();
            self->schedule_tick();
        });
    }

    void tick()
    {
        std::deque<std::function<void()>> pending;
        pending.swap(queue);
        for (auto& command : pending) {
            try {
                command();
            } catch (const std::exception& e) {
                broadcast(error_frame(e.what()));
            }
        }
        session.advance();
        broadcast(session.state_frame());
    }

    Session& session;
    asio::io_context ioc;
    tcp::acceptor acceptor;
    asio::steady_timer timer;
    std::vector<std::shared_ptr<Client>> clients;
    std::weak_ptr<Client> wizard;
    std::deque<std::function<void()>> queue;
};

StreamServer::StreamServer(Session& session, unsigned short port, const std::string& address)
    : impl_(std::make_unique<Impl>(session, port, address))
{
}

StreamServer::~StreamServer()
{
    impl_->session.set_sink(nullptr);
}

unsigned short StreamServer::port() const
{
    return impl_->acceptor.local_endpoint().port();
}

void StreamServer::run()
{
    impl_->start();
    impl_->ioc.run();
}

void StreamServer::stop()
{
    impl_->ioc.stop();
}

} // namespace multibot
