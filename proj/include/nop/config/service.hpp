#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nop/config/bounded_queue.hpp"
#include "nop/config/param_store.hpp"
#include "nop/vision/image.hpp"

namespace nop::config {

inline constexpr std::uint16_t kDefaultConfigPort = 7777;
inline constexpr std::uint16_t kDefaultHttpPort = 7778;

/// Port from an environment variable, or `fallback` when unset or invalid.
std::uint16_t port_from_env(const char* var, std::uint16_t fallback);

/// Per-connection protocol state.
struct Session {
  std::vector<std::shared_ptr<Subscription>> subs;
  bool telemetry = false;
  BoundedQueue<std::string> outbox{1024};
};

/// Newline-delimited JSON request/response service over TCP. The same port
/// also accepts a WebSocket upgrade, one JSON message per text frame.
class ConfigService {
public:
  /// Handler for an extension op. Returns fields merged into the response;
  /// throwing reports {"ok": false}.
  using OpHandler = std::function<nlohmann::json(const nlohmann::json& request)>;

  explicit ConfigService(ParamStore& store, std::string default_file = "config.json");
  ~ConfigService();
  ConfigService(const ConfigService&) = delete;
  ConfigService& operator=(const ConfigService&) = delete;

  void add_op(const std::string& name, OpHandler handler);

  /// Answers one request. Used by the socket loop and directly by tests.
  nlohmann::json handle(const nlohmann::json& request, Session& session);
  /// Parses one line and answers it; malformed JSON yields an error response.
  std::string handle_line(const std::string& line, Session& session);

  /// Starts listening; port 0 picks a free port. Returns the bound port.
  std::uint16_t start(std::uint16_t port, const std::string& bind = "0.0.0.0");
  void stop();
  bool running() const { return running_; }

  /// Queues an event for every session that subscribed with telemetry.
  void publish(nlohmann::json event);
  std::size_t client_count() const;

private:
  struct Client;
  void accept_loop();
  void serve(std::shared_ptr<Client> client);

  ParamStore& store_;
  std::string default_file_;
  std::map<std::string, OpHandler> ops_;
  mutable std::mutex ops_mu_;

  std::atomic<bool> running_{false};
  int listen_fd_ = -1;
  std::thread acceptor_;
  mutable std::mutex clients_mu_;
  std::list<std::shared_ptr<Client>> clients_;
};

/// Serves /camera.png and /classes.png over HTTP.
class ImageServer {
public:
  using Source = std::function<std::optional<vision::RgbImage>()>;

  ImageServer(Source camera, Source classes);
  ~ImageServer();
  ImageServer(const ImageServer&) = delete;
  ImageServer& operator=(const ImageServer&) = delete;

  std::uint16_t start(std::uint16_t port, const std::string& bind = "0.0.0.0");
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nop::config
