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

#include "mbtfhe/exec.hpp"

#include <algorithm>
#include <stdexcept>

namespace mbtfhe {

namespace {

std::uint64_t mod(std::int64_t v, std::uint64_t m) {
  std::int64_t r = v % static_cast<std::int64_t>(m);
  return static_cast<std::uint64_t>(r < 0 ? r + static_cast<std::int64_t>(m) : r);
}

// Closed interval of intended (unreduced) values.
struct Range {
  __int128 lo = 0;
  __int128 hi = 0;
};

std::string to_decimal(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  std::string s;
  while (v != 0) {
    int digit = static_cast<int>(v % 10);
    s.push_back(static_cast<char>('0' + (digit < 0 ? -digit : digit)));
    v /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace

std::vector<Diagnostic> check_program(const ProgramGraph& g, std::uint64_t p) {
  std::vector<Diagnostic> out;
  for (const auto& [name, entries] : g.tables) {
    if (entries.size() != p) {
      out.push_back({Diagnostic::Level::error, "table '" + name + "' has " +
                                                   std::to_string(entries.size()) +
                                                   " entries, message space needs " +
                                                   std::to_string(p)});
    }
    for (auto e : entries) {
      if (e < 0 || static_cast<std::uint64_t>(e) >= p) {
        out.push_back({Diagnostic::Level::error, "table '" + name + "' entry " +
                                                     std::to_string(e) + " is outside [0, " +
                                                     std::to_string(p) + ")"});
        break;
      }
    }
  }
  const __int128 top = static_cast<__int128>(p) - 1;
  std::vector<Range> r(g.nodes.size());
  auto check = [&](std::size_t user, std::size_t operand) {
    const Range& v = r[operand];
    if (v.lo < 0 || v.hi > top) {
      out.push_back({Diagnostic::Level::warning,
                     "node '" + g.nodes[user].id + "' reads '" + g.nodes[operand].id +
                         "' with range [" + to_decimal(v.lo) + ", " + to_decimal(v.hi) +
                         "] beyond the message space [0, " + std::to_string(p - 1) +
                         "]; decode failure risk"});
    }
  };
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const ProgramNode& n = g.nodes[i];
    switch (n.op) {
      case OpKind::input:
        r[i] = n.range.empty() ? Range{0, top} : Range{n.range[0], n.range[1]};
        break;
      case OpKind::output:
        check(i, n.operands[0]);
        r[i] = r[n.operands[0]];
        break;
      case OpKind::add:
        r[i] = {r[n.operands[0]].lo + r[n.operands[1]].lo, r[n.operands[0]].hi + r[n.operands[1]].hi};
        break;
      case OpKind::mul_const: {
        __int128 a = r[n.operands[0]].lo * n.constant;
        __int128 b = r[n.operands[0]].hi * n.constant;
        r[i] = {std::min(a, b), std::max(a, b)};
        break;
      }
      case OpKind::lut: {
        check(i, n.operands[0]);
        const auto& t = g.tables.at(n.table);
        r[i] = {*std::min_element(t.begin(), t.end()), *std::max_element(t.begin(), t.end())};
        break;
      }
    }
  }
  return out;
}

PlainValues interpret(const ProgramGraph& g, const PlainValues& inputs, std::uint64_t p) {
  const std::uint64_t two_p = 2 * p;
  std::vector<std::vector<std::uint64_t>> v(g.nodes.size());
  PlainValues out;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const ProgramNode& n = g.nodes[i];
    auto& dst = v[i];
    dst.resize(n.elements());
    for (std::size_t e = 0; e < dst.size(); ++e) {
      switch (n.op) {
        case OpKind::input: {
          auto it = inputs.find(n.id);
          if (it == inputs.end() || it->second.size() != dst.size())
            throw std::invalid_argument("missing or misshaped input '" + n.id + "'");
          dst[e] = it->second[e] % p;
          break;
        }
        case OpKind::output:
          dst[e] = v[n.operands[0]][e];
          break;
        case OpKind::add:
          dst[e] = (v[n.operands[0]][e] + v[n.operands[1]][e]) % two_p;
          break;
        case OpKind::mul_const:
          dst[e] = static_cast<std::uint64_t>(
              (static_cast<__int128>(v[n.operands[0]][e]) * mod(n.constant, two_p)) % two_p);
          break;
        case OpKind::lut: {
          const auto& t = g.tables.at(n.table);
          std::uint64_t x = v[n.operands[0]][e];
          if (x < p) {
            dst[e] = mod(t.at(x), two_p);
          } else {
            dst[e] = mod(-t.at(x - p), two_p);
          }
          break;
        }
      }
    }
    if (n.op == OpKind::output) {
      auto& o = out[n.id];
      for (auto x : dst) o.push_back(x % p);
    }
  }
  return out;
}

CipherValues execute(const LoweredGraph& lg, const ProgramGraph& g, const KeySet& keys,
                     const CipherValues& inputs, const FftPlan& plan, FftMode mode) {
  const auto& params = keys.params;
  std::vector<LookupTable> luts;
  for (const auto& a : lg.acc_registry) {
    std::vector<std::uint64_t> entries;
    for (auto e : a.entries) entries.push_back(mod(e, params.message_space()));
    luts.push_back(encode_lut(entries, params));
  }

  std::vector<LweCiphertext> ct(lg.nodes.size());
  std::vector<std::vector<std::size_t>> switched(lg.nodes.size());
  std::vector<GlweCiphertext> rotated(lg.nodes.size());
  CipherValues out;
  for (std::size_t i = 0; i < lg.nodes.size(); ++i) {
    const PrimNode& n = lg.nodes[i];
    const std::string& id = g.nodes.at(n.source).id;
    switch (n.op) {
      case PrimOp::input: {
        auto it = inputs.find(id);
        if (it == inputs.end() || it->second.size() <= n.element)
          throw std::invalid_argument("missing ciphertext for input '" + id + "'");
        ct[i] = it->second[n.element];
        break;
      }
      case PrimOp::output: {
        auto& o = out[id];
        if (o.size() <= n.element) o.resize(n.element + 1);
        o[n.element] = ct[n.operands[0]];
        break;
      }
      case PrimOp::lin: {
        ct[i] = lwe_mul_const(ct[n.operands[0]], n.coeffs[0]);
        for (std::size_t j = 1; j < n.operands.size(); ++j)
          ct[i] = lwe_add(ct[i], lwe_mul_const(ct[n.operands[j]], n.coeffs[j]));
        break;
      }
      case PrimOp::ks:
        ct[i] = key_switch(ct[n.operands[0]], keys.ksk, params);
        break;
      case PrimOp::ms:
        switched[i] = mod_switch_lwe(ct[n.operands[0]], params.poly_degree);
        break;
      case PrimOp::br:
        rotated[i] = blind_rotate(luts.at(n.acc).encoded, switched[n.operands[0]], keys.bsk,
                                  params, plan, mode);
        break;
      case PrimOp::se:
        ct[i] = sample_extract(rotated[n.operands[0]]);
        rotated[n.operands[0]] = GlweCiphertext{};
        break;
    }
  }
  return out;
}

}  // namespace mbtfhe
