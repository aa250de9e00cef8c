#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "teegi/session/session.hpp"

namespace teegi::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using session::json;

// Frames and traces beyond this many queued messages are dropped for a slow
// client; hello, error and end messages are always delivered.
inline constexpr std::size_t kMaxQueuedMessages = 64;

class Hub;

struct Outgoing {
  std::shared_ptr<const std::string> text;
  bool droppable = false;
};

/// One websocket connection. All members are touched only on the io thread.
class Client : public std::enable_shared_from_this<Client> {
 public:
  Client(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start();
  void send(Outgoing msg);
  void close();

 private:
  void onAccept(beast::error_code ec);
  void doRead();
  void onRead(beast::error_code ec, std::size_t);
  void doWrite();
  void onWrite(beast::error_code ec, std::size_t);

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> queue_;
  bool closing_ = false, closed_ = false, joined_ = false;
};

/// Fans session messages out to connected clients and feeds their control
/// messages to the processing task. publish() may be called from any thread;
/// delivery happens on the io thread.
class Hub final : public session::MessageSink {
 public:
  Hub(asio::io_context& io, json helloStatic, session::ControlQueue& controls)
      : io_(io), helloStatic_(std::move(helloStatic)), controls_(controls) {}

  /// Called once, on the io thread, for the first client.
  std::function<void()> onFirstClient;

  void publish(const json& message) override {
    const auto& type = message.at("type").get_ref<const std::string&>();
    Outgoing out{std::make_shared<const std::string>(message.dump()), type == "frame" || type == "trace"};
    asio::post(io_, [this, out] {
      for (const auto& c : clients_) c->send(out);
    });
  }

  void updateState(const json& state) override {
    asio::post(io_, [this, state] { state_ = state; });
  }

  void join(const std::shared_ptr<Client>& c) {
    if (finished_) {
      c->close();
      return;
    }
    clients_.insert(c);
    auto hello = helloStatic_;
    hello["state"] = state_;
    c->send({std::make_shared<const std::string>(hello.dump()), false});
    spdlog::info("client connected ({} total)", clients_.size());
    if (!started_) {
      started_ = true;
      if (onFirstClient) onFirstClient();
    }
  }

  void leave(const std::shared_ptr<Client>& c) {
    if (clients_.erase(c)) spdlog::info("client disconnected ({} left)", clients_.size());
  }

  void onControl(const std::shared_ptr<Client>& c, const std::string& text) {
    try {
      controls_.push(protocol::parseControl(text));
      spdlog::debug("control: {}", text);
    } catch (const ParseError& e) {
      spdlog::warn("rejected control: {}", e.what());
      c->send({std::make_shared<const std::string>(protocol::errorMessage(e.what()).dump()), false});
    }
  }

  /// Closes every client once its queue has drained. Must run on the io thread.
  void finish() {
    finished_ = true;
    for (const auto& c : clients_) c->close();
  }

  bool finished() const { return finished_; }

 private:
  asio::io_context& io_;
  json helloStatic_;
  json state_ = json::object();
  session::ControlQueue& controls_;
  std::set<std::shared_ptr<Client>> clients_;
  bool started_ = false, finished_ = false;
};

inline void Client::start() {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(beast::bind_front_handler(&Client::onAccept, shared_from_this()));
}

inline void Client::onAccept(beast::error_code ec) {
  if (ec) {
    spdlog::warn("websocket handshake failed: {}", ec.message());
    return;
  }
  joined_ = true;
  hub_.join(shared_from_this());
  doRead();
}

inline void Client::doRead() {
  ws_.async_read(buffer_, beast::bind_front_handler(&Client::onRead, shared_from_this()));
}

inline void Client::onRead(beast::error_code ec, std::size_t) {
  if (ec) {
    closed_ = true;
    hub_.leave(shared_from_this());
    return;
  }
  const auto text = beast::buffers_to_string(buffer_.data());
  buffer_.consume(buffer_.size());
  hub_.onControl(shared_from_this(), text);
  doRead();
}

inline void Client::send(Outgoing msg) {
  if (closed_ || closing_) return;
  if (msg.droppable && queue_.size() >= kMaxQueuedMessages) return;
  queue_.push_back(std::move(msg));
  if (queue_.size() == 1) doWrite();
}

inline void Client::doWrite() {
  ws_.text(true);
  ws_.async_write(asio::buffer(*queue_.front().text),
                  beast::bind_front_handler(&Client::onWrite, shared_from_this()));
}

inline void Client::onWrite(beast::error_code ec, std::size_t) {
  if (ec) {
    closed_ = true;
    queue_.clear();
    hub_.leave(shared_from_this());
    return;
  }
  queue_.pop_front();
  if (!queue_.empty()) {
    doWrite();
  } else if (closing_ && !closed_) {
    closed_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }
}

inline void Client::close() {
  if (closing_ || closed_) return;
  closing_ = true;
  if (queue_.empty() && joined_) {
    closed_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  } else if (!joined_) {
    closed_ = true;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  double speed = 1.0;
};

/// Accepts websocket clients, starts the session when the first one
/// connects, and returns once the session has ended and clients are closed.
inline session::SessionStats serve(session::SampleSource& source, session::Engine& engine, const ServeOptions& opt,
                                   std::ostream& announce = std::cout) {
  asio::io_context io;
  session::ControlQueue controls;
  Hub hub(io, engine.helloStatic(), controls);
  hub.updateState(engine.stateJson());

  tcp::acceptor acceptor(io, {asio::ip::make_address(opt.host), opt.port});
  announce << "listening on " << opt.host << ":" << acceptor.local_endpoint().port() << std::endl;

  std::atomic<bool> stop{false};
  std::thread worker;
  session::SessionStats stats;
  asio::signal_set signals(io, SIGINT, SIGTERM);
  // Closing the acceptor, the clients and the signal wait lets io.run() return.
  auto shutdown = [&] {
    beast::error_code ignored;
    acceptor.close(ignored);
    signals.cancel(ignored);
    hub.finish();
  };

  hub.onFirstClient = [&] {
    spdlog::info("starting session at speed {}", opt.speed);
    worker = std::thread([&] {
      try {
        stats = session::runSession(source, engine, hub, controls, opt.speed, &stop);
      } catch (const std::exception& e) {
        spdlog::error("session failed: {}", e.what());
        hub.publish(protocol::errorMessage(e.what()));
        hub.publish(engine.endMessage("error"));
      }
      asio::post(io, shutdown);
    });
  };

  signals.async_wait([&](beast::error_code ec, int) {
    if (ec) return;
    spdlog::info("interrupted");
    stop = true;
    if (!worker.joinable()) shutdown();
  });

  std::function<void()> doAccept = [&] {
    acceptor.async_accept([&](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Client>(std::move(socket), hub)->start();
      if (!hub.finished()) doAccept();
    });
  };
  doAccept();

  io.run();
  if (worker.joinable()) worker.join();
  return stats;
}

}  // namespace teegi::server
