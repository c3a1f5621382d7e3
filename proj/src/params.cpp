/*
 * Copyright 2026 The mbtfhe Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mbtfhe/params.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef MBTFHE_DEFAULT_CONFIG_DIR
#define MBTFHE_DEFAULT_CONFIG_DIR "presets"
#endif

namespace mbtfhe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t get_size(const KeyValues& kv, const std::string& key, const std::string& origin,
                     std::size_t fallback, bool required) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    if (required) throw std::invalid_argument(origin + ": missing key '" + key + "'");
    return fallback;
  }
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(it->second, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != it->second.size()) {
    throw std::invalid_argument(origin + ": '" + key + "' is not an unsigned integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

double parse_power_value(const std::string& raw) {
  const std::string s = trim(raw);
  const auto caret = s.find('^');
  if (caret == std::string::npos) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
  }
  std::size_t pos = 0;
  const double base = std::stod(s.substr(0, caret), &pos);
  if (pos != caret) throw std::invalid_argument("bad number '" + s + "'");
  const std::string e = s.substr(caret + 1);
  const double ex = std::stod(e, &pos);
  if (pos != e.size()) throw std::invalid_argument("bad number '" + s + "'");
  return std::pow(base, ex);
}

void TfheParams::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("params '" + name + "': " + what);
  };
  if (n == 0) fail("n must be positive");
  if (!is_power_of_two(poly_degree) || poly_degree < kMinDegree || poly_degree > kMaxDegree) {
    fail("N must be a power of two in [4, 65536]");
  }
  if (k == 0) fail("k must be positive");
  if (width == 0 || width > 10) fail("width must be in [1, 10]");
  if (padding_bits != 1) fail("padding_bits must be 1");
  if (poly_degree < message_space()) fail("N must be at least 2^width");
  if (noise_std_short < 0 || noise_std_long < 0) fail("noise must be non-negative");
  try {
    pbs_gadget.validate();
    ks_gadget.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

std::string TfheParams::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "name=" << name << "\n"
     << "n=" << n << "\n"
     << "N=" << poly_degree << "\n"
     << "k=" << k << "\n"
     << "pbs_base_log=" << pbs_gadget.base_log << "\n"
     << "pbs_depth=" << pbs_gadget.depth << "\n"
     << "ks_base_log=" << ks_gadget.base_log << "\n"
     << "ks_depth=" << ks_gadget.depth << "\n"
     << "noise_std_short=" << noise_std_short << "\n"
     << "noise_std_long=" << noise_std_long << "\n"
     << "width=" << width << "\n";
  return os.str();
}

std::uint64_t TfheParams::hash() const {
  // Name excluded: renaming a preset must not invalidate its keys.
  std::ostringstream os;
  os.precision(17);
  os << n << '/' << poly_degree << '/' << k << '/' << pbs_gadget.base_log << '/'
     << pbs_gadget.depth << '/' << ks_gadget.base_log << '/' << ks_gadget.depth << '/'
     << noise_std_short << '/' << noise_std_long << '/' << width << '/' << padding_bits;
  return fnv1a(os.str());
}

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

TfheParams params_from_key_values(const KeyValues& kv, const std::string& origin) {
  TfheParams p;
  if (auto it = kv.find("name"); it != kv.end()) p.name = it->second;
  p.n = get_size(kv, "n", origin, 0, true);
  p.poly_degree = get_size(kv, "N", origin, 0, true);
  p.k = get_size(kv, "k", origin, 1, false);
  p.pbs_gadget.base_log = static_cast<unsigned>(get_size(kv, "pbs_base_log", origin, 8, false));
  p.pbs_gadget.depth = static_cast<unsigned>(get_size(kv, "pbs_depth", origin, 2, false));
  p.ks_gadget.base_log = static_cast<unsigned>(get_size(kv, "ks_base_log", origin, 4, false));
  p.ks_gadget.depth = static_cast<unsigned>(get_size(kv, "ks_depth", origin, 5, false));
  p.width = static_cast<unsigned>(get_size(kv, "width", origin, 3, false));
  try {
    if (auto it = kv.find("noise_std_short"); it != kv.end()) {
      p.noise_std_short = parse_power_value(it->second);
    }
    if (auto it = kv.find("noise_std_long"); it != kv.end()) {
      p.noise_std_long = parse_power_value(it->second);
    }
  } catch (const std::exception& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  p.validate();
  return p;
}

std::filesystem::path config_dir() {
  if (const char* env = std::getenv("MBTFHE_CONFIG_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return MBTFHE_DEFAULT_CONFIG_DIR;
}

TfheParams load_params(const std::string& name_or_path) {
  std::filesystem::path path(name_or_path);
  if (!std::filesystem::exists(path)) path = config_dir() / "params" / (name_or_path + ".params");
  if (!std::filesystem::exists(path)) {
    throw std::invalid_argument("unknown parameter set '" + name_or_path + "' (looked in " +
                                (config_dir() / "params").string() + ")");
  }
  auto p = params_from_key_values(read_key_values(path), path.string());
  if (p.name == "custom") p.name = path.stem().string();
  return p;
}

}  // namespace mbtfhe
