#include "nop/config/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstring>

#include <httplib.h>

#include "nop/config/codec.hpp"
#include "nop/errors.hpp"

namespace nop::config {

using nlohmann::json;

std::uint16_t port_from_env(const char* var, std::uint16_t fallback) {
  const char* s = std::getenv(var);
  if (!s || !*s) return fallback;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 0 || v > 65535) return fallback;
  return static_cast<std::uint16_t>(v);
}

struct ConfigService::Client {
  int fd = -1;
  Session session;
  std::thread thread;
  std::atomic<bool> done{false};
};

ConfigService::ConfigService(ParamStore& store, std::string default_file)
    : store_(store), default_file_(std::move(default_file)) {}

ConfigService::~ConfigService() { stop(); }

void ConfigService::add_op(const std::string& name, OpHandler handler) {
  std::lock_guard lock(ops_mu_);
  ops_[name] = std::move(handler);
}

namespace {

json entry_json(const std::string& path, const ParamEntry& e) {
  json j{{"path", path}, {"value", to_json(e.value)}, {"type", type_name(e.value)}};
  if (e.meta) {
    j["meta"] = {{"min", e.meta->min}, {"max", e.meta->max}, {"step", e.meta->step}, {"default", e.meta->def}};
  }
  return j;
}

json event_json(const Notification& n) {
  return {{"event", "param"}, {"path", n.path}, {"value", to_json(n.value)}, {"seq", n.seq}};
}

}  // namespace

json ConfigService::handle(const json& req, Session& session) {
  json resp = json::object();
  resp["id"] = req.is_object() && req.contains("id") ? req["id"] : json(nullptr);
  const auto fail = [&](const std::string& kind, const std::string& msg) {
    resp["ok"] = false;
    resp["error"] = kind;
    resp["message"] = msg;
    return resp;
  };
  if (!req.is_object() || !req.contains("op") || !req["op"].is_string()) {
    return fail("BadRequest", "request needs a string \"op\"");
  }
  const std::string op = req["op"];
  const auto str = [&](const char* key, const std::string& fallback) {
    return req.contains(key) && req[key].is_string() ? req[key].get<std::string>() : fallback;
  };
  try {
    if (op == "set") {
      if (!req.contains("value")) return fail("BadRequest", "set needs a value");
      const std::string path = normalize_path(str("path", ""));
      const Value v = store_.set_json(path, req["value"]);
      resp["path"] = path;
      resp["value"] = to_json(v);
      resp["seq"] = store_.seq();
    } else if (op == "get") {
      const std::string path = normalize_path(str("path", ""));
      resp.update(entry_json(path, store_.entry(path)));
    } else if (op == "list") {
      json entries = json::array();
      for (const auto& [p, e] : store_.list(str("path", "/"))) entries.push_back(entry_json(p, e));
      resp["entries"] = std::move(entries);
    } else if (op == "subscribe") {
      const bool telemetry = req.value("telemetry", false);
      // A telemetry-only request does not subscribe to parameters.
      if (req.contains("path") || !telemetry) {
        auto sub = store_.subscribe(str("path", "/"));
        resp["path"] = sub->prefix();
        session.subs.push_back(std::move(sub));
      }
      if (telemetry) session.telemetry = true;
      resp["seq"] = store_.seq();
    } else if (op == "unsubscribe") {
      for (const auto& s : session.subs) store_.unsubscribe(s);
      session.subs.clear();
      session.telemetry = false;
    } else if (op == "save") {
      const std::string file = str("file", str("path", default_file_));
      store_.save(file);
      resp["file"] = file;
    } else if (op == "load") {
      const std::string file = str("file", str("path", default_file_));
      resp["applied"] = store_.load(file);
      resp["file"] = file;
    } else {
      OpHandler h;
      {
        std::lock_guard lock(ops_mu_);
        if (auto it = ops_.find(op); it != ops_.end()) h = it->second;
      }
      if (!h) return fail("UnknownOp", "unknown op '" + op + "'");
      const json extra = h(req);
      if (extra.is_object()) resp.update(extra);
    }
  } catch (const TypeError& e) {
    return fail("TypeError", e.what());
  } catch (const DeclError& e) {
    return fail("DeclError", e.what());
  } catch (const NotFound& e) {
    return fail("NotFound", e.what());
  } catch (const ParseError& e) {
    fail("ParseError", e.what());
    resp["line"] = e.line;
    resp["column"] = e.column;
    return resp;
  } catch (const DomainError& e) {
    return fail("DomainError", e.what());
  } catch (const std::exception& e) {
    return fail("Error", e.what());
  }
  resp["ok"] = true;
  return resp;
}

std::string ConfigService::handle_line(const std::string& line, Session& session) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::parse_error& e) {
    return json{{"id", nullptr}, {"ok", false}, {"error", "ParseError"}, {"message", e.what()}}.dump();
  }
  return handle(req, session).dump();
}

std::uint16_t ConfigService::start(std::uint16_t port, const std::string& bind) {
  if (running_) throw std::logic_error("config service already running");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw std::runtime_error("bad bind address " + bind);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  return ntohs(addr.sin_port);
}

void ConfigService::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  std::list<std::shared_ptr<Client>> clients;
  {
    std::lock_guard lock(clients_mu_);
    clients.swap(clients_);
  }
  for (auto& c : clients) {
    if (c->thread.joinable()) c->thread.join();
  }
}

void ConfigService::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) > 0 && (p.revents & POLLIN)) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        auto c = std::make_shared<Client>();
        c->fd = fd;
        std::lock_guard lock(clients_mu_);
        clients_.push_back(c);
        c->thread = std::thread([this, c] { serve(c); });
      }
    }
    // Reap finished connections.
    std::lock_guard lock(clients_mu_);
    for (auto it = clients_.begin(); it != clients_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        it = clients_.erase(it);
      } else {
        ++it;
      }
    }
  }
}

namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

std::string header_value(const std::string& head, const std::string& name) {
  std::string lower = head;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  const std::string key = "\r\n" + name + ":";
  const auto pos = lower.find(key);
  if (pos == std::string::npos) return {};
  auto start = pos + key.size();
  auto end = head.find("\r\n", start);
  std::string v = head.substr(start, end - start);
  const auto b = v.find_first_not_of(" \t");
  const auto e = v.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
}

}  // namespace

void ConfigService::serve(std::shared_ptr<Client> c) {
  enum class Mode { Unknown, Lines, Handshake, WebSocket } mode = Mode::Unknown;
  std::string in;
  std::string message;  // fragmented websocket message being assembled
  bool ok = true;

  const auto out = [&](const std::string& text) {
    if (!ok) return;
    ok = mode == Mode::WebSocket ? send_all(c->fd, ws_encode(WsOpcode::Text, text)) : send_all(c->fd, text + "\n");
  };
  const auto handle_text = [&](const std::string& text) {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) out(handle_line(line, c->session));
      start = end + 1;
    }
  };

  char buf[65536];
  while (running_ && ok) {
    pollfd p{c->fd, POLLIN, 0};
    const int r = ::poll(&p, 1, 10);
    if (r > 0 && (p.revents & (POLLIN | POLLHUP | POLLERR))) {
      const ssize_t n = ::recv(c->fd, buf, sizeof buf, 0);
      if (n <= 0) break;
      in.append(buf, static_cast<std::size_t>(n));
    }

    if (mode == Mode::Unknown && !in.empty()) {
      const std::string_view get = "GET ";
      const std::size_t k = std::min(in.size(), get.size());
      if (in.compare(0, k, get.substr(0, k)) != 0) {
        mode = Mode::Lines;
      } else if (in.size() >= get.size()) {
        mode = Mode::Handshake;
      }
    }
    if (mode == Mode::Handshake) {
      const auto end = in.find("\r\n\r\n");
      if (end == std::string::npos) {
        if (in.size() > 16384) break;
      } else {
        const std::string head = in.substr(0, end + 2);
        in.erase(0, end + 4);
        const std::string key = header_value(head, "sec-websocket-key");
        if (key.empty()) {
          send_all(c->fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
          break;
        }
        ok = send_all(c->fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                             "Sec-WebSocket-Accept: " + websocket_accept(key) + "\r\n\r\n");
        mode = Mode::WebSocket;
      }
    }
    if (mode == Mode::Lines) {
      for (auto nl = in.find('\n'); nl != std::string::npos; nl = in.find('\n')) {
        const std::string line = in.substr(0, nl);
        in.erase(0, nl + 1);
        handle_text(line);
      }
      if (in.size() > (16u << 20)) break;
    } else if (mode == Mode::WebSocket) {
      try {
        while (auto f = ws_decode(in)) {
          switch (f->opcode) {
            case WsOpcode::Text:
            case WsOpcode::Binary:
            case WsOpcode::Continuation:
              message += f->payload;
              if (f->fin) {
                handle_text(message);
                message.clear();
              }
              break;
            case WsOpcode::Ping:
              ok = ok && send_all(c->fd, ws_encode(WsOpcode::Pong, f->payload));
              break;
            case WsOpcode::Close:
              send_all(c->fd, ws_encode(WsOpcode::Close, f->payload.substr(0, 2)));
              ok = false;
              break;
            default:
              break;
          }
          if (!ok) break;
        }
      } catch (const std::exception&) {
        break;
      }
    }

    // Deliver parameter events and published telemetry.
    if (mode == Mode::Lines || mode == Mode::WebSocket) {
      for (const auto& s : c->session.subs) {
        if (s->queue().take_lost()) out(json{{"event", "lost"}, {"path", s->prefix()}}.dump());
        for (const auto& n : s->queue().drain()) out(event_json(n).dump());
      }
      if (c->session.outbox.take_lost()) out(json{{"event", "lost"}, {"path", "telemetry"}}.dump());
      for (const auto& e : c->session.outbox.drain()) out(e);
    }
  }
  for (const auto& s : c->session.subs) store_.unsubscribe(s);
  ::close(c->fd);
  c->done = true;
}

void ConfigService::publish(json event) {
  if (!event.contains("event")) event["event"] = "telemetry";
  const std::string text = event.dump();
  std::lock_guard lock(clients_mu_);
  for (const auto& c : clients_) {
    if (c->session.telemetry) c->session.outbox.push(text);
  }
}

std::size_t ConfigService::client_count() const {
  std::lock_guard lock(clients_mu_);
  return static_cast<std::size_t>(
      std::count_if(clients_.begin(), clients_.end(), [](const auto& c) { return !c->done; }));
}

struct ImageServer::Impl {
  httplib::Server server;
  std::thread thread;
};

ImageServer::ImageServer(Source camera, Source classes) : impl_(std::make_unique<Impl>()) {
  const auto route = [](Source src) {
    return [src = std::move(src)](const httplib::Request&, httplib::Response& res) {
      const auto img = src ? src() : std::nullopt;
      if (!img) {
        res.status = 503;
        res.set_content("no frame yet\n", "text/plain");
        return;
      }
      const auto png = encode_png(*img);
      res.set_header("Cache-Control", "no-store");
      res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
    };
  };
  impl_->server.Get("/camera.png", route(std::move(camera)));
  impl_->server.Get("/classes.png", route(std::move(classes)));
}

ImageServer::~ImageServer() { stop(); }

std::uint16_t ImageServer::start(std::uint16_t port, const std::string& bind) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(bind);
  } else if (!impl_->server.bind_to_port(bind, port)) {
    bound = -1;
  }
  if (bound <= 0) throw std::runtime_error("cannot listen on HTTP port " + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return static_cast<std::uint16_t>(bound);
}

void ImageServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace nop::config
