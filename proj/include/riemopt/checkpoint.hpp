#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "riemopt/error.hpp"
#include "riemopt/linalg.hpp"
#include "riemopt/manifolds.hpp"
#include "riemopt/optimizers.hpp"
#include "riemopt/tensor.hpp"

namespace riemopt {

/// Optimizer checkpoint layout:
///
///   "RMOP" | version (u8) | header length (u32 LE) | header | payload
///
/// The header is UTF-8 text, one `key=value` per line. Slot lines read
/// `slot=<parameter>/<slot> <dtype> <shape> <offset> <nbytes>` with the
/// shape as comma-separated extents ("-" for a scalar). The payload is the
/// concatenation of every slot as little-endian IEEE-754 values.
inline constexpr char kCheckpointMagic[4] = {'R', 'M', 'O', 'P'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

template <typename T>
struct Checkpoint {
  OptimizerState<T> state;
  /// Parameter values and their manifolds, by name.
  std::vector<ParameterBinding<T>> bindings;
};

namespace detail {

template <typename T>
std::string format_real(T v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_real(std::string_view s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw CorruptCheckpoint("malformed number '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_count(std::string_view s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    throw CorruptCheckpoint("malformed integer '" + std::string(s) + "'");
  return v;
}

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return bits;
}

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;

inline std::string shape_field(const Shape& s) {
  if (s.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

inline Shape parse_shape_field(std::string_view s) {
  Shape out;
  if (s == "-") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = std::min(s.find(',', start), s.size());
    out.push_back(static_cast<std::size_t>(parse_count(s.substr(start, comma - start))));
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    parts.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return parts;
}

}  // namespace detail

/// Serializes the optimizer state together with the parameter values.
template <typename T>
std::vector<std::uint8_t> save(const OptimizerState<T>& state, const std::vector<ParameterBinding<T>>& bindings) {
  using detail::format_real;
  std::string header;
  auto line = [&](std::string_view key, const std::string& value) {
    header.append(key).append("=").append(value).append("\n");
  };
  const OptimizerConfig& c = state.config;
  line("dtype", Precision<T>::dtype);
  line("algorithm", std::string(algorithm_name(c.algorithm)));
  line("learning_rate", format_real(c.learning_rate));
  line("momentum", format_real(c.momentum));
  line("rho", format_real(c.rho));
  line("beta1", format_real(c.beta1));
  line("beta2", format_real(c.beta2));
  line("epsilon", format_real(c.epsilon));
  line("amsgrad", c.amsgrad ? "1" : "0");
  line("use_exact_transport", c.use_exact_transport ? "1" : "0");
  line("use_exp", c.use_exp ? "1" : "0");

  std::vector<std::pair<std::string, const Tensor<T>*>> arrays;
  for (const auto& b : bindings) {
    auto it = state.slots.find(b.name);
    if (it == state.slots.end()) throw ConfigError("parameter '" + b.name + "' has no optimizer state");
    line("parameter", b.name + " " + to_string(b.descriptor) + " " + std::to_string(it->second.step));
    const SlotState<T>& s = it->second;
    arrays.emplace_back(b.name + "/values", &b.values);
    if (!s.momentum.empty()) arrays.emplace_back(b.name + "/momentum", &s.momentum);
    if (!s.second_moment.empty()) arrays.emplace_back(b.name + "/second_moment", &s.second_moment);
    if (!s.max_second_moment.empty()) arrays.emplace_back(b.name + "/max_second_moment", &s.max_second_moment);
    if (!s.previous_point.empty()) arrays.emplace_back(b.name + "/previous_point", &s.previous_point);
  }
  std::size_t offset = 0;
  for (const auto& [name, t] : arrays) {
    const std::size_t nbytes = t->size() * sizeof(T);
    line("slot", name + " " + Precision<T>::dtype + " " + detail::shape_field(t->shape()) + " " +
                     std::to_string(offset) + " " + std::to_string(nbytes));
    offset += nbytes;
  }

  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  out.push_back(kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.reserve(out.size() + offset);
  for (const auto& entry : arrays)
    for (T v : entry.second->values()) detail::put_le(out, std::bit_cast<detail::Bits<T>>(v));
  return out;
}

/// Inverse of save(). Any structural inconsistency raises CorruptCheckpoint.
template <typename T>
Checkpoint<T> load(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 9) throw CorruptCheckpoint("checkpoint truncated before the header");
  if (!std::equal(kCheckpointMagic, kCheckpointMagic + 4, bytes.begin())) throw CorruptCheckpoint("bad magic");
  if (bytes[4] != kCheckpointVersion) {
    throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(bytes[4]) + " (expected " +
                            std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t header_len = detail::get_le<std::uint32_t>(bytes.data() + 5);
  if (bytes.size() - 9 < header_len) throw CorruptCheckpoint("checkpoint truncated inside the header");
  const std::string header(bytes.begin() + 9, bytes.begin() + 9 + static_cast<std::ptrdiff_t>(header_len));
  const std::uint8_t* payload = bytes.data() + 9 + header_len;
  const std::size_t payload_len = bytes.size() - 9 - header_len;

  std::map<std::string, std::string> keys;
  struct ParameterLine {
    std::string name, manifold;
    std::uint64_t step;
  };
  std::vector<ParameterLine> parameters;
  std::map<std::string, Tensor<T>> slots;
  std::size_t expected_offset = 0;

  for (std::string_view ln : detail::split(header, '\n')) {
    if (ln.empty()) continue;
    const std::size_t eq = ln.find('=');
    if (eq == std::string_view::npos) throw CorruptCheckpoint("header line without '='");
    const std::string key(ln.substr(0, eq));
    const std::string_view value = ln.substr(eq + 1);
    if (key == "parameter") {
      // The manifold string may not contain spaces; name and step bracket it.
      const auto parts = detail::split(value, ' ');
      if (parts.size() != 3) throw CorruptCheckpoint("malformed parameter line");
      parameters.push_back({std::string(parts[0]), std::string(parts[1]), detail::parse_count(parts[2])});
    } else if (key == "slot") {
      const auto parts = detail::split(value, ' ');
      if (parts.size() != 5) throw CorruptCheckpoint("malformed slot line");
      if (parts[1] != Precision<T>::dtype)
        throw CorruptCheckpoint("slot dtype " + std::string(parts[1]) + " does not match " + Precision<T>::dtype);
      const Shape shape = detail::parse_shape_field(parts[2]);
      const std::size_t offset = detail::parse_count(parts[3]);
      const std::size_t nbytes = detail::parse_count(parts[4]);
      if (offset != expected_offset || nbytes != shape_size(shape) * sizeof(T))
        throw CorruptCheckpoint("inconsistent layout for slot " + std::string(parts[0]));
      if (offset + nbytes > payload_len) throw CorruptCheckpoint("checkpoint payload truncated");
      Tensor<T> t(shape);
      for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = std::bit_cast<T>(detail::get_le<detail::Bits<T>>(payload + offset + i * sizeof(T)));
      slots.emplace(std::string(parts[0]), std::move(t));
      expected_offset += nbytes;
    } else {
      keys[key] = std::string(value);
    }
  }
  if (expected_offset != payload_len) throw CorruptCheckpoint("checkpoint payload has trailing bytes");

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = keys.find(key);
    if (it == keys.end()) throw CorruptCheckpoint("header key '" + key + "' missing");
    return it->second;
  };
  if (need("dtype") != Precision<T>::dtype)
    throw CorruptCheckpoint("checkpoint dtype " + need("dtype") + " does not match " + Precision<T>::dtype);

  auto flag = [&](const std::string& key) {
    const std::string& v = need(key);
    if (v != "0" && v != "1") throw CorruptCheckpoint("flag '" + key + "' must be 0 or 1");
    return v == "1";
  };
  Checkpoint<T> out;
  OptimizerConfig& c = out.state.config;
  try {
    c.algorithm = algorithm_from_name(need("algorithm"));
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint(std::string("invalid configuration: ") + e.what());
  }
  c.learning_rate = detail::parse_real<double>(need("learning_rate"));
  c.momentum = detail::parse_real<double>(need("momentum"));
  c.rho = detail::parse_real<double>(need("rho"));
  c.beta1 = detail::parse_real<double>(need("beta1"));
  c.beta2 = detail::parse_real<double>(need("beta2"));
  c.epsilon = detail::parse_real<double>(need("epsilon"));
  c.amsgrad = flag("amsgrad");
  c.use_exact_transport = flag("use_exact_transport");
  c.use_exp = flag("use_exp");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint(std::string("invalid configuration: ") + e.what());
  }

  auto take = [&](const std::string& name) -> Tensor<T> {
    auto it = slots.find(name);
    if (it == slots.end()) return Tensor<T>();
    Tensor<T> t = std::move(it->second);
    slots.erase(it);
    return t;
  };
  for (const auto& p : parameters) {
    ManifoldDescriptor d;
    try {
      d = parse_descriptor(p.manifold);
    } catch (const Error& e) {
      throw CorruptCheckpoint("parameter '" + p.name + "': " + e.what());
    }
    if (!slots.count(p.name + "/values")) throw CorruptCheckpoint("parameter '" + p.name + "' has no values");
    Tensor<T> values = take(p.name + "/values");
    auto manifold = make_manifold<T>(d);
    try {
      detail::batch_info(*manifold, values, "values");
    } catch (const ShapeError& e) {
      throw CorruptCheckpoint(e.what());
    }
    if (!check_point(*manifold, values, Precision<T>::membership))
      throw CorruptCheckpoint("parameter '" + p.name + "' has rows off " + manifold->name());
    SlotState<T> s;
    s.step = p.step;
    s.momentum = take(p.name + "/momentum");
    s.second_moment = take(p.name + "/second_moment");
    s.max_second_moment = take(p.name + "/max_second_moment");
    s.previous_point = take(p.name + "/previous_point");
    out.bindings.push_back(ParameterBinding<T>{p.name, d, std::move(values), std::move(manifold)});
    if (!out.state.slots.emplace(p.name, std::move(s)).second)
      throw CorruptCheckpoint("parameter '" + p.name + "' listed twice");
    try {
      detail::require_slot_shapes(c, out.state.slots.at(p.name), out.bindings.back());
    } catch (const ShapeError& e) {
      throw CorruptCheckpoint(e.what());
    }
  }
  if (!slots.empty()) throw CorruptCheckpoint("slot '" + slots.begin()->first + "' belongs to no parameter");
  return out;
}

template <typename T>
void save_file(const std::string& path, const OptimizerState<T>& state,
               const std::vector<ParameterBinding<T>>& bindings) {
  const auto bytes = save(state, bindings);
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("cannot write checkpoint " + path);
}

template <typename T>
Checkpoint<T> load_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return load<T>(bytes);
}

}  // namespace riemopt
