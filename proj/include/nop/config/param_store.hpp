#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nop/config/bounded_queue.hpp"

namespace nop::config {

using Value = std::variant<double, std::int64_t, bool, std::string>;

struct Meta {
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;
  double def = 0.0;
};

struct ParamEntry {
  Value value;
  std::optional<Meta> meta;  // present for numeric entries
};

struct Notification {
  std::string path;
  Value value;
  std::uint64_t seq = 0;
};

class TypeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class DeclError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class NotFound : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(what), line(line), column(column) {}
  int line;
  int column;
};

/// Checks a parameter path and returns its canonical form: absolute,
/// [a-z0-9_] segments, no empty segments or trailing slash. "/" is the root.
/// Throws DomainError otherwise.
std::string normalize_path(const std::string& path);
/// True when `path` equals `prefix` or lies below it.
bool has_prefix(const std::string& path, const std::string& prefix);

nlohmann::json to_json(const Value& v);
std::string type_name(const Value& v);

class ParamStore;

/// Receives (path, value, seq) for every committed change under `prefix`,
/// in commit order. Buffered and non-blocking for the setter.
class Subscription {
public:
  Subscription(std::string prefix, std::size_t capacity) : prefix_(std::move(prefix)), queue_(capacity) {}

  const std::string& prefix() const { return prefix_; }
  BoundedQueue<Notification>& queue() { return queue_; }

private:
  std::string prefix_;
  BoundedQueue<Notification> queue_;
};

/// Thread-safe hierarchical parameter tree.
class ParamStore {
public:
  /// Declares a numeric entry; the value starts at meta.def.
  void declare(const std::string& path, double def, double min, double max, double step = 0.0);
  void declare_int(const std::string& path, std::int64_t def, std::int64_t min, std::int64_t max,
                   std::int64_t step = 1);
  void declare(const std::string& path, bool def);
  void declare(const std::string& path, const std::string& def);
  void declare(const std::string& path, const char* def) { declare(path, std::string(def)); }

  /// Commits a value and returns what was stored after clamping.
  Value set(const std::string& path, const Value& value);
  Value set_json(const std::string& path, const nlohmann::json& value);

  Value get(const std::string& path) const;
  ParamEntry entry(const std::string& path) const;
  double get_double(const std::string& path) const;
  std::int64_t get_int(const std::string& path) const;
  bool get_bool(const std::string& path) const;
  std::string get_string(const std::string& path) const;

  /// Entries under `prefix`, sorted by path.
  std::vector<std::pair<std::string, ParamEntry>> list(const std::string& prefix = "/") const;
  bool contains(const std::string& path) const;

  std::shared_ptr<Subscription> subscribe(const std::string& prefix, std::size_t capacity = 1024);
  void unsubscribe(const std::shared_ptr<Subscription>& sub);

  /// Sequence number of the last committed change (0 before any set).
  std::uint64_t seq() const;

  /// Canonical document: sorted keys, tree mirrors the paths, leaves are
  /// {"value": v, "meta": {...}}. Unknown entries from a loaded file are kept.
  nlohmann::json to_document() const;
  std::string dump() const;
  void save(const std::string& file) const;
  /// Replays every leaf through set(). Returns the number of entries applied.
  std::size_t load_document(const nlohmann::json& doc);
  std::size_t load_string(const std::string& text, const std::string& origin = "<string>");
  std::size_t load(const std::string& file);

private:
  void declare_entry(const std::string& path, ParamEntry e);
  Value coerce(const std::string& path, const ParamEntry& e, const Value& v) const;
  Value commit_locked(const std::string& path, const Value& v);

  mutable std::mutex mu_;
  std::map<std::string, ParamEntry> entries_;
  std::map<std::string, nlohmann::json> unknown_;
  std::vector<std::weak_ptr<Subscription>> subs_;
  std::uint64_t seq_ = 0;
};

}  // namespace nop::config
