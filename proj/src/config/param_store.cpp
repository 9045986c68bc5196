#include "nop/config/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nop/errors.hpp"

namespace nop::config {

using nlohmann::json;

namespace {

bool valid_segment(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::vector<std::string> split(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 1;
  while (i <= path.size()) {
    const std::size_t j = std::min(path.find('/', i), path.size());
    if (j > i) out.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

bool is_numeric(const Value& v) {
  return std::holds_alternative<double>(v) || std::holds_alternative<std::int64_t>(v);
}

std::optional<Value> from_json(const json& j) {
  if (j.is_boolean()) return Value{j.get<bool>()};
  if (j.is_number_integer()) return Value{j.get<std::int64_t>()};
  if (j.is_number_float()) return Value{j.get<double>()};
  if (j.is_string()) return Value{j.get<std::string>()};
  return std::nullopt;
}

bool is_leaf(const json& j) {
  return j.is_object() && j.contains("value") && !j["value"].is_object() && !j["value"].is_array();
}

json meta_json(const Meta& m) {
  return json{{"default", m.def}, {"max", m.max}, {"min", m.min}, {"step", m.step}};
}

json meta_json_int(const Meta& m) {
  return json{{"default", static_cast<std::int64_t>(m.def)},
              {"max", static_cast<std::int64_t>(m.max)},
              {"min", static_cast<std::int64_t>(m.min)},
              {"step", static_cast<std::int64_t>(m.step)}};
}

}  // namespace

std::string normalize_path(const std::string& path) {
  if (path.empty() || path.front() != '/') throw DomainError("parameter path must be absolute: '" + path + "'");
  const auto segs = split(path);
  std::string out;
  for (const auto& s : segs) {
    if (!valid_segment(s)) throw DomainError("bad segment '" + s + "' in parameter path '" + path + "'");
    out += '/';
    out += s;
  }
  return out.empty() ? "/" : out;
}

bool has_prefix(const std::string& path, const std::string& prefix) {
  if (prefix == "/") return true;
  return path.size() >= prefix.size() && path.compare(0, prefix.size(), prefix) == 0 &&
         (path.size() == prefix.size() || path[prefix.size()] == '/');
}

json to_json(const Value& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

std::string type_name(const Value& v) {
  static const char* names[] = {"float", "int", "bool", "string"};
  return names[v.index()];
}

void ParamStore::declare_entry(const std::string& raw, ParamEntry e) {
  const std::string path = normalize_path(raw);
  if (path == "/") throw DeclError("cannot declare the root");
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(path); it != entries_.end()) {
    if (it->second.value.index() != e.value.index()) {
      throw DeclError(path + " already declared as " + type_name(it->second.value));
    }
    // Redeclaration keeps the current value under the new bounds.
    const Value current = it->second.value;
    it->second.meta = e.meta;
    it->second.value = coerce(path, it->second, current);
    return;
  }
  for (std::size_t k = path.find('/', 1); k != std::string::npos; k = path.find('/', k + 1)) {
    if (entries_.count(path.substr(0, k))) throw DeclError(path + " lies below the leaf " + path.substr(0, k));
  }
  if (auto it = entries_.lower_bound(path + "/"); it != entries_.end() && has_prefix(it->first, path)) {
    throw DeclError(path + " already has children such as " + it->first);
  }
  unknown_.erase(path);
  entries_.emplace(path, std::move(e));
}

void ParamStore::declare(const std::string& path, double def, double min, double max, double step) {
  if (!(min <= def && def <= max)) throw DeclError(path + ": need min <= default <= max");
  declare_entry(path, {Value{def}, Meta{min, max, step, def}});
}

void ParamStore::declare_int(const std::string& path, std::int64_t def, std::int64_t min, std::int64_t max,
                             std::int64_t step) {
  if (!(min <= def && def <= max)) throw DeclError(path + ": need min <= default <= max");
  declare_entry(path, {Value{def}, Meta{double(min), double(max), double(step), double(def)}});
}

void ParamStore::declare(const std::string& path, bool def) { declare_entry(path, {Value{def}, std::nullopt}); }

void ParamStore::declare(const std::string& path, const std::string& def) {
  declare_entry(path, {Value{def}, std::nullopt});
}

Value ParamStore::coerce(const std::string& path, const ParamEntry& e, const Value& v) const {
  const auto mismatch = [&] {
    return TypeError(path + " is " + type_name(e.value) + ", got " + type_name(v));
  };
  if (std::holds_alternative<double>(e.value)) {
    if (!is_numeric(v)) throw mismatch();
    double x = std::holds_alternative<double>(v) ? std::get<double>(v) : double(std::get<std::int64_t>(v));
    if (std::isnan(x)) throw TypeError(path + ": NaN is not a value");
    if (e.meta) x = std::clamp(x, e.meta->min, e.meta->max);
    return x;
  }
  if (std::holds_alternative<std::int64_t>(e.value)) {
    std::int64_t x = 0;
    if (const auto* d = std::get_if<double>(&v)) {
      if (!std::isfinite(*d) || std::floor(*d) != *d) throw mismatch();
      x = static_cast<std::int64_t>(std::clamp(*d, -9.0e18, 9.0e18));
    } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
      x = *i;
    } else {
      throw mismatch();
    }
    if (e.meta) {
      x = std::clamp(x, static_cast<std::int64_t>(e.meta->min), static_cast<std::int64_t>(e.meta->max));
    }
    return x;
  }
  if (e.value.index() != v.index()) throw mismatch();
  return v;
}

Value ParamStore::commit_locked(const std::string& path, const Value& v) {
  auto it = entries_.find(path);
  if (it == entries_.end()) {
    if (is_numeric(v)) throw DeclError(path + " is not declared; numeric entries need bounds");
    for (std::size_t k = path.find('/', 1); k != std::string::npos; k = path.find('/', k + 1)) {
      if (entries_.count(path.substr(0, k))) throw DeclError(path + " lies below the leaf " + path.substr(0, k));
    }
    if (auto c = entries_.lower_bound(path + "/"); c != entries_.end() && has_prefix(c->first, path)) {
      throw DeclError(path + " already has children such as " + c->first);
    }
    unknown_.erase(path);
    it = entries_.emplace(path, ParamEntry{v, std::nullopt}).first;
  } else {
    it->second.value = coerce(path, it->second, v);
  }
  const std::uint64_t seq = ++seq_;
  // Queues never block, so delivering under the lock keeps commit order.
  auto& subs = subs_;
  subs.erase(std::remove_if(subs.begin(), subs.end(), [](const auto& w) { return w.expired(); }), subs.end());
  for (const auto& w : subs) {
    if (auto s = w.lock(); s && has_prefix(path, s->prefix())) s->queue().push({path, it->second.value, seq});
  }
  return it->second.value;
}

Value ParamStore::set(const std::string& raw, const Value& value) {
  const std::string path = normalize_path(raw);
  if (path == "/") throw DeclError("cannot set the root");
  std::lock_guard lock(mu_);
  return commit_locked(path, value);
}

Value ParamStore::set_json(const std::string& path, const json& value) {
  const auto v = from_json(value);
  if (!v) throw TypeError(path + ": values must be numbers, booleans or strings");
  return set(path, *v);
}

ParamEntry ParamStore::entry(const std::string& raw) const {
  const std::string path = normalize_path(raw);
  std::lock_guard lock(mu_);
  auto it = entries_.find(path);
  if (it == entries_.end()) throw NotFound(path);
  return it->second;
}

Value ParamStore::get(const std::string& path) const { return entry(path).value; }

double ParamStore::get_double(const std::string& path) const {
  const Value v = get(path);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return double(*i);
  throw TypeError(path + " is " + type_name(v));
}

std::int64_t ParamStore::get_int(const std::string& path) const {
  const Value v = get(path);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw TypeError(path + " is " + type_name(v));
}

bool ParamStore::get_bool(const std::string& path) const {
  const Value v = get(path);
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw TypeError(path + " is " + type_name(v));
}

std::string ParamStore::get_string(const std::string& path) const {
  const Value v = get(path);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw TypeError(path + " is " + type_name(v));
}

std::vector<std::pair<std::string, ParamEntry>> ParamStore::list(const std::string& raw) const {
  const std::string prefix = normalize_path(raw);
  std::lock_guard lock(mu_);
  std::vector<std::pair<std::string, ParamEntry>> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    if (!has_prefix(it->first, prefix)) {
      if (prefix != "/" && it->first.compare(0, prefix.size(), prefix) != 0) break;
      continue;  // sibling such as /gaits after /gait
    }
    out.emplace_back(*it);
  }
  return out;
}

bool ParamStore::contains(const std::string& path) const {
  std::lock_guard lock(mu_);
  return entries_.count(normalize_path(path)) > 0;
}

std::shared_ptr<Subscription> ParamStore::subscribe(const std::string& prefix, std::size_t capacity) {
  auto sub = std::make_shared<Subscription>(normalize_path(prefix), capacity);
  std::lock_guard lock(mu_);
  subs_.push_back(sub);
  return sub;
}

void ParamStore::unsubscribe(const std::shared_ptr<Subscription>& sub) {
  std::lock_guard lock(mu_);
  subs_.erase(std::remove_if(subs_.begin(), subs_.end(),
                             [&](const auto& w) { return w.expired() || w.lock() == sub; }),
              subs_.end());
}

std::uint64_t ParamStore::seq() const {
  std::lock_guard lock(mu_);
  return seq_;
}

json ParamStore::to_document() const {
  std::lock_guard lock(mu_);
  json doc = json::object();
  const auto place = [&doc](const std::string& path, json leaf) {
    json* node = &doc;
    for (const auto& s : split(path)) {
      if (!node->is_object() && !node->is_null()) return;  // collides with a leaf; skip
      if (node->is_object() && node->contains("value") && is_leaf(*node)) return;
      node = &(*node)[s];
    }
    if (node->is_null()) *node = std::move(leaf);
  };
  for (const auto& [path, e] : entries_) {
    json leaf{{"value", to_json(e.value)}};
    if (e.meta) leaf["meta"] = std::holds_alternative<std::int64_t>(e.value) ? meta_json_int(*e.meta) : meta_json(*e.meta);
    place(path, std::move(leaf));
  }
  for (const auto& [path, j] : unknown_) place(path, j);
  return doc;
}

std::string ParamStore::dump() const { return to_document().dump(2) + "\n"; }

void ParamStore::save(const std::string& file) const {
  const std::string text = dump();
  const std::string tmp = file + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, file);
}

std::size_t ParamStore::load_document(const json& doc) {
  if (!doc.is_object()) throw ParseError("configuration document must be a JSON object", 1, 1);

  struct Item {
    std::string path;
    Value value;
    json node;
  };
  std::vector<Item> items;
  std::map<std::string, json> unknown;

  // Walk the tree; keys that are not valid path segments are preserved verbatim.
  const auto walk = [&](auto&& self, const json& node, const std::string& path) -> void {
    if (is_leaf(node)) {
      auto v = from_json(node["value"]);
      if (!v || path.empty()) {
        unknown[path.empty() ? "/" : path] = node;
        return;
      }
      items.push_back({path, *v, node});
      return;
    }
    if (!node.is_object()) {
      unknown[path] = node;
      return;
    }
    for (const auto& [k, child] : node.items()) self(self, child, path + "/" + k);
  };
  for (const auto& [k, child] : doc.items()) walk(walk, child, "/" + k);

  std::lock_guard lock(mu_);
  // Validate everything before the first commit so a bad file changes nothing.
  std::vector<Item> apply;
  for (auto& it : items) {
    bool valid = true;
    for (const auto& s : split(it.path)) valid = valid && valid_segment(s);
    auto e = valid ? entries_.find(it.path) : entries_.end();
    if (e != entries_.end()) {
      coerce(it.path, e->second, it.value);
      apply.push_back(std::move(it));
    } else if (valid && !is_numeric(it.value)) {
      apply.push_back(std::move(it));
    } else {
      // Undeclared numeric or malformed path: keep it for the next save.
      unknown[it.path] = it.node;
    }
  }
  for (const auto& it : apply) commit_locked(it.path, it.value);
  for (auto& [p, j] : unknown) {
    if (!entries_.count(p)) unknown_[p] = std::move(j);
  }
  return apply.size();
}

std::size_t ParamStore::load_string(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << col << ": malformed JSON";
    throw ParseError(msg.str(), line, col);
  }
  return load_document(doc);
}

std::size_t ParamStore::load(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_string(ss.str(), file);
}

}  // namespace nop::config
