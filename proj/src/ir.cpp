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

#include "mbtfhe/ir.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace mbtfhe {

using nlohmann::json;

namespace {

std::string where(std::size_t index, const std::string& id) {
  return "node '" + id + "' (nodes[" + std::to_string(index) + "])";
}

std::string id_string(const json& v, const std::string& ctx) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw ProgramError(ctx + ": id must be a string or integer");
}

OpKind op_from_string(const std::string& s, const std::string& ctx) {
  if (s == "input") return OpKind::input;
  if (s == "output") return OpKind::output;
  if (s == "add") return OpKind::add;
  if (s == "mul_const") return OpKind::mul_const;
  if (s == "lut") return OpKind::lut;
  throw ProgramError(ctx + ": unknown op '" + s + "'");
}

std::size_t arity(OpKind op) {
  switch (op) {
    case OpKind::input: return 0;
    case OpKind::add: return 2;
    default: return 1;
  }
}

std::string shape_string(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

// Rebuilds lg keeping only nodes with rep[i] == i; users of a dropped node
// read its representative instead.
LoweredGraph compact(const LoweredGraph& lg, const std::vector<std::size_t>& rep) {
  LoweredGraph out;
  out.acc_registry = lg.acc_registry;
  std::vector<std::size_t> fresh(lg.nodes.size());
  for (std::size_t i = 0; i < lg.nodes.size(); ++i) {
    if (rep[i] != i) {
      fresh[i] = fresh[rep[i]];
      continue;
    }
    PrimNode n = lg.nodes[i];
    for (auto& o : n.operands) o = fresh[o];
    fresh[i] = out.nodes.size();
    out.nodes.push_back(std::move(n));
  }
  return out;
}

}  // namespace

const char* to_string(OpKind op) {
  switch (op) {
    case OpKind::input: return "input";
    case OpKind::output: return "output";
    case OpKind::add: return "add";
    case OpKind::mul_const: return "mul_const";
    case OpKind::lut: return "lut";
  }
  return "?";
}

const char* to_string(PrimOp op) {
  switch (op) {
    case PrimOp::input: return "input";
    case PrimOp::output: return "output";
    case PrimOp::ks: return "ks";
    case PrimOp::ms: return "ms";
    case PrimOp::br: return "br";
    case PrimOp::se: return "se";
    case PrimOp::lin: return "lin";
  }
  return "?";
}

const char* to_string(SyncMode s) { return s == SyncMode::full ? "full" : "grouped"; }

SyncMode sync_mode_from_string(const std::string& s) {
  if (s == "full") return SyncMode::full;
  if (s == "grouped") return SyncMode::grouped;
  throw std::invalid_argument("unknown sync mode '" + s + "'");
}

std::size_t ProgramNode::elements() const {
  std::size_t e = 1;
  for (auto d : shape) e *= d;
  return e;
}

std::size_t ProgramGraph::compute_nodes() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const ProgramNode& n) { return n.op != OpKind::input; }));
}

std::size_t ProgramGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return i;
  throw ProgramError("no node with id '" + id + "'");
}

std::vector<std::size_t> ProgramGraph::inputs() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].op == OpKind::input) out.push_back(i);
  return out;
}

std::vector<std::size_t> ProgramGraph::outputs() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].op == OpKind::output) out.push_back(i);
  return out;
}

ProgramGraph parse_program(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProgramError("syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ProgramError("program must be a JSON object");
  ProgramGraph g;
  g.version = doc.value("version", 1);
  if (g.version != 1)
    throw ProgramError("unsupported program version " + std::to_string(g.version));

  if (doc.contains("tables")) {
    if (!doc["tables"].is_object()) throw ProgramError("'tables' must be an object");
    for (auto& [name, entries] : doc["tables"].items()) {
      if (!entries.is_array()) throw ProgramError("table '" + name + "' must be an array");
      std::vector<std::int64_t> v;
      for (auto& e : entries) {
        if (!e.is_number_integer())
          throw ProgramError("table '" + name + "' has a non-integer entry");
        v.push_back(e.get<std::int64_t>());
      }
      if (v.empty()) throw ProgramError("table '" + name + "' is empty");
      g.tables[name] = std::move(v);
    }
  }

  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw ProgramError("'nodes' must be an array");
  std::vector<ProgramNode> raw;
  std::unordered_map<std::string, std::size_t> by_id;
  std::vector<bool> has_shape;
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const json& jn = doc["nodes"][i];
    std::string ctx = "nodes[" + std::to_string(i) + "]";
    if (!jn.is_object() || !jn.contains("id") || !jn.contains("op"))
      throw ProgramError(ctx + ": node needs 'id' and 'op'");
    ProgramNode n;
    n.id = id_string(jn["id"], ctx);
    ctx = where(i, n.id);
    if (!jn["op"].is_string()) throw ProgramError(ctx + ": 'op' must be a string");
    n.op = op_from_string(jn["op"].get<std::string>(), ctx);
    if (by_id.count(n.id)) throw ProgramError(ctx + ": duplicate id");
    json args = jn.value("args", json::array());
    if (n.op == OpKind::mul_const) {
      if (args.size() != 1 || !args[0].is_number_integer())
        throw ProgramError(ctx + ": mul_const needs one integer argument");
      n.constant = args[0].get<std::int64_t>();
    } else if (n.op == OpKind::lut) {
      if (args.size() != 1 || !args[0].is_string())
        throw ProgramError(ctx + ": lut needs one table id argument");
      n.table = args[0].get<std::string>();
      if (!g.tables.count(n.table))
        throw ProgramError(ctx + ": unknown table '" + n.table + "'");
    }
    if (jn.contains("range")) {
      const json& r = jn["range"];
      if (n.op != OpKind::input || !r.is_array() || r.size() != 2 ||
          !r[0].is_number_integer() || !r[1].is_number_integer() ||
          r[0].get<std::int64_t>() > r[1].get<std::int64_t>())
        throw ProgramError(ctx + ": 'range' must be [lo, hi] on an input");
      n.range = {r[0].get<std::int64_t>(), r[1].get<std::int64_t>()};
    }
    bool shaped = jn.contains("shape");
    if (shaped) {
      if (!jn["shape"].is_array()) throw ProgramError(ctx + ": 'shape' must be an array");
      for (auto& d : jn["shape"]) {
        if (!d.is_number_unsigned() || d.get<std::size_t>() == 0)
          throw ProgramError(ctx + ": shape dimensions must be positive integers");
        n.shape.push_back(d.get<std::size_t>());
      }
    } else if (n.op == OpKind::input) {
      throw ProgramError(ctx + ": input needs a shape");
    }
    by_id[n.id] = i;
    has_shape.push_back(shaped);
    raw.push_back(std::move(n));
  }

  json edges = doc.value("edges", json::array());
  if (!edges.is_array()) throw ProgramError("'edges' must be an array");
  std::vector<std::vector<std::size_t>> users(raw.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    std::string ctx = "edges[" + std::to_string(e) + "]";
    if (!edges[e].is_array() || edges[e].size() != 2)
      throw ProgramError(ctx + ": edge must be [from, to]");
    std::string from = id_string(edges[e][0], ctx);
    std::string to = id_string(edges[e][1], ctx);
    if (!by_id.count(from)) throw ProgramError(ctx + ": unknown node '" + from + "'");
    if (!by_id.count(to)) throw ProgramError(ctx + ": unknown node '" + to + "'");
    raw[by_id[to]].operands.push_back(by_id[from]);
    users[by_id[from]].push_back(by_id[to]);
  }

  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].operands.size() != arity(raw[i].op))
      throw ProgramError(where(i, raw[i].id) + ": " + to_string(raw[i].op) + " takes " +
                         std::to_string(arity(raw[i].op)) + " operand(s), got " +
                         std::to_string(raw[i].operands.size()));
  }

  // Kahn's algorithm, lowest original index first.
  std::vector<std::size_t> indeg(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) indeg[i] = raw[i].operands.size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (indeg[i] == 0) ready.push(i);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto u : users[i])
      if (--indeg[u] == 0) ready.push(u);
  }
  if (order.size() != raw.size()) {
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (indeg[i] != 0) throw ProgramError(where(i, raw[i].id) + ": lies on a cycle");
  }

  std::vector<std::size_t> pos(raw.size());
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t i = order[k];
    ProgramNode n = raw[i];
    for (auto& o : n.operands) o = pos[o];
    if (n.op != OpKind::input) {
      const auto& first = g.nodes[n.operands[0]].shape;
      if (!has_shape[i]) n.shape = first;
      for (auto o : n.operands) {
        if (g.nodes[o].shape != n.shape)
          throw ProgramError(where(i, n.id) + ": shape mismatch, operand '" + g.nodes[o].id +
                             "' has " + shape_string(g.nodes[o].shape) + ", node has " +
                             shape_string(n.shape));
      }
    }
    g.nodes.push_back(std::move(n));
  }
  return g;
}

ProgramGraph load_program(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProgramError("cannot open program " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_program(ss.str());
  } catch (const ProgramError& e) {
    throw ProgramError(path.string() + ": " + e.what());
  }
}

std::string program_to_json(const ProgramGraph& g) {
  json doc;
  doc["version"] = g.version;
  doc["nodes"] = json::array();
  doc["edges"] = json::array();
  for (const auto& n : g.nodes) {
    json jn{{"id", n.id}, {"op", to_string(n.op)}, {"shape", n.shape}};
    if (n.op == OpKind::mul_const) jn["args"] = {n.constant};
    if (n.op == OpKind::lut) jn["args"] = {n.table};
    if (!n.range.empty()) jn["range"] = n.range;
    doc["nodes"].push_back(jn);
    for (auto o : n.operands) doc["edges"].push_back({g.nodes[o].id, n.id});
  }
  doc["tables"] = json::object();
  for (const auto& [name, v] : g.tables) doc["tables"][name] = v;
  return doc.dump(2) + "\n";
}

std::size_t LoweredGraph::count(PrimOp op) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [op](const PrimNode& n) { return n.op == op; }));
}

double DedupStats::ks_reduction() const {
  return ks_before == 0 ? 0.0 : 1.0 - static_cast<double>(ks_after) / ks_before;
}

double DedupStats::acc_reduction() const {
  return acc_before == 0 ? 0.0 : 1.0 - static_cast<double>(acc_after) / acc_before;
}

LoweredGraph lower(const ProgramGraph& g) {
  LoweredGraph lg;
  std::vector<std::vector<std::size_t>> value(g.nodes.size());
  auto emit = [&lg](PrimNode n) {
    lg.nodes.push_back(std::move(n));
    return lg.nodes.size() - 1;
  };
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const ProgramNode& n = g.nodes[i];
    for (std::size_t e = 0; e < n.elements(); ++e) {
      PrimNode p;
      p.source = i;
      p.element = e;
      std::size_t out = 0;
      switch (n.op) {
        case OpKind::input:
          p.op = PrimOp::input;
          out = emit(p);
          break;
        case OpKind::output:
          p.op = PrimOp::output;
          p.operands = {value[n.operands[0]][e]};
          out = emit(p);
          break;
        case OpKind::add:
          p.op = PrimOp::lin;
          p.operands = {value[n.operands[0]][e], value[n.operands[1]][e]};
          p.coeffs = {1, 1};
          out = emit(p);
          break;
        case OpKind::mul_const:
          p.op = PrimOp::lin;
          p.operands = {value[n.operands[0]][e]};
          p.coeffs = {n.constant};
          out = emit(p);
          break;
        case OpKind::lut: {
          PrimNode ks = p, ms = p, br = p, se = p;
          ks.op = PrimOp::ks;
          ks.operands = {value[n.operands[0]][e]};
          ms.op = PrimOp::ms;
          ms.operands = {emit(ks)};
          br.op = PrimOp::br;
          br.operands = {emit(ms)};
          br.acc = lg.acc_registry.size();
          lg.acc_registry.push_back({n.table, g.tables.at(n.table)});
          se.op = PrimOp::se;
          se.operands = {emit(br)};
          out = emit(se);
          break;
        }
      }
      value[i].push_back(out);
    }
  }
  return lg;
}

DedupStats dedup_stats(const LoweredGraph& before, const LoweredGraph& after) {
  return {before.count(PrimOp::ks), after.count(PrimOp::ks), before.acc_registry.size(),
          after.acc_registry.size()};
}

PassResult ks_dedup(const LoweredGraph& lg) {
  std::vector<std::size_t> rep(lg.nodes.size());
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> ks_seen;
  std::map<std::size_t, std::size_t> ms_seen;
  for (std::size_t i = 0; i < lg.nodes.size(); ++i) {
    const PrimNode& n = lg.nodes[i];
    rep[i] = i;
    if (n.op == PrimOp::ks) {
      auto key = std::make_pair(rep[n.operands[0]], n.ksk_id);
      rep[i] = ks_seen.emplace(key, i).first->second;
    } else if (n.op == PrimOp::ms) {
      rep[i] = ms_seen.emplace(rep[n.operands[0]], i).first->second;
    }
  }
  PassResult r;
  r.graph = compact(lg, rep);
  r.stats = dedup_stats(lg, r.graph);
  return r;
}

PassResult acc_dedup(const LoweredGraph& lg) {
  PassResult r;
  r.graph.nodes = lg.nodes;
  std::map<std::vector<std::int64_t>, std::size_t> seen;
  for (auto& n : r.graph.nodes) {
    if (n.op != PrimOp::br) continue;
    const AccEntry& entry = lg.acc_registry[n.acc];
    auto [it, fresh] = seen.emplace(entry.entries, r.graph.acc_registry.size());
    if (fresh) r.graph.acc_registry.push_back(entry);
    n.acc = it->second;
  }
  r.stats = dedup_stats(lg, r.graph);
  return r;
}

Schedule schedule(const LoweredGraph& lg, const ScheduleOptions& opts) {
  if (opts.clusters == 0 || opts.slots_per_cluster == 0)
    throw std::invalid_argument("schedule needs at least one cluster and one slot");
  Schedule s;
  s.options = opts;
  const std::size_t count = lg.nodes.size();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  // Blind-rotation depth of every node.
  std::vector<std::size_t> depth(count, 0);
  std::map<std::size_t, std::vector<std::size_t>> by_level;
  for (std::size_t i = 0; i < count; ++i) {
    for (auto o : lg.nodes[i].operands) depth[i] = std::max(depth[i], depth[o]);
    if (lg.nodes[i].op == PrimOp::br) by_level[++depth[i]].push_back(i);
  }

  std::vector<std::size_t> batch_of(count, kNone);
  for (const auto& [level, brs] : by_level) {
    for (std::size_t start = 0; start < brs.size(); start += s.capacity()) {
      Batch b;
      b.level = level;
      std::size_t end = std::min(brs.size(), start + s.capacity());
      for (std::size_t j = start; j < end; ++j) {
        batch_of[brs[j]] = s.batches.size();
        b.br.push_back(brs[j]);
        b.cluster.push_back((j - start) % opts.clusters);
      }
      s.batches.push_back(std::move(b));
    }
  }

  // Latest batch each node depends on, through any chain of operands.
  std::vector<std::size_t> after(count, kNone);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto o : lg.nodes[i].operands) {
      std::size_t dep = lg.nodes[o].op == PrimOp::br ? batch_of[o] : after[o];
      if (dep != kNone && (after[i] == kNone || dep > after[i])) after[i] = dep;
    }
  }
  for (std::size_t b = 0; b < s.batches.size(); ++b) {
    bool independent = true;
    for (auto br : s.batches[b].br)
      if (after[br] != kNone && after[br] + 1 == b) independent = false;
    s.batches[b].overlappable = independent;
  }

  // Earliest batch that needs each node, through any chain of users.
  std::vector<std::size_t> needed(count, kNone);
  for (std::size_t i = count; i-- > 0;) {
    if (lg.nodes[i].op == PrimOp::br) needed[i] = batch_of[i];
    for (auto o : lg.nodes[i].operands) needed[o] = std::min(needed[o], needed[i]);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const PrimNode& n = lg.nodes[i];
    switch (n.op) {
      case PrimOp::input:
      case PrimOp::br:
        break;
      case PrimOp::se:
        s.batches[batch_of[n.operands[0]]].post.push_back(i);
        break;
      case PrimOp::output:
        s.tail.push_back(i);
        break;
      default:
        if (needed[i] == kNone) {
          s.tail.push_back(i);
        } else {
          s.batches[needed[i]].pre.push_back(i);
        }
    }
  }
  return s;
}

std::string lowered_to_json(const LoweredGraph& lg) {
  json doc;
  doc["version"] = 1;
  doc["nodes"] = json::array();
  for (std::size_t i = 0; i < lg.nodes.size(); ++i) {
    const PrimNode& n = lg.nodes[i];
    json jn{{"index", i},
            {"op", to_string(n.op)},
            {"operands", n.operands},
            {"source", n.source},
            {"element", n.element}};
    if (n.op == PrimOp::lin) jn["coeffs"] = n.coeffs;
    if (n.op == PrimOp::ks) jn["ksk"] = n.ksk_id;
    if (n.op == PrimOp::br) jn["acc"] = n.acc;
    doc["nodes"].push_back(jn);
  }
  doc["acc_registry"] = json::array();
  for (const auto& a : lg.acc_registry)
    doc["acc_registry"].push_back({{"table", a.table}, {"entries", a.entries}});
  return doc.dump(2) + "\n";
}

std::string schedule_to_json(const Schedule& s, const LoweredGraph& lg) {
  json doc;
  doc["version"] = 1;
  doc["clusters"] = s.options.clusters;
  doc["slots_per_cluster"] = s.options.slots_per_cluster;
  doc["sync"] = to_string(s.options.sync);
  doc["batches"] = json::array();
  auto lin_terms = [&lg](const std::vector<std::size_t>& ids) {
    std::size_t t = 0;
    for (auto i : ids)
      if (lg.nodes[i].op == PrimOp::lin) t += lg.nodes[i].operands.size();
    return t;
  };
  auto count = [&lg](const std::vector<std::size_t>& ids, PrimOp op) {
    return static_cast<std::size_t>(std::count_if(
        ids.begin(), ids.end(), [&](std::size_t i) { return lg.nodes[i].op == op; }));
  };
  for (std::size_t b = 0; b < s.batches.size(); ++b) {
    const Batch& batch = s.batches[b];
    std::vector<std::size_t> per_cluster(s.options.clusters, 0);
    std::vector<std::set<std::size_t>> accs(s.options.clusters);
    for (std::size_t j = 0; j < batch.br.size(); ++j) {
      ++per_cluster[batch.cluster[j]];
      accs[batch.cluster[j]].insert(lg.nodes[batch.br[j]].acc);
    }
    std::vector<std::size_t> luts;
    for (const auto& a : accs) luts.push_back(a.size());
    json load{{"br", per_cluster},
              {"luts", luts},
              {"ks", count(batch.pre, PrimOp::ks)},
              {"ms", count(batch.pre, PrimOp::ms)},
              {"lin_terms", lin_terms(batch.pre)},
              {"se", batch.post.size()}};
    doc["batches"].push_back({{"index", b},
                              {"level", batch.level},
                              {"overlappable", batch.overlappable},
                              {"br", batch.br},
                              {"cluster", batch.cluster},
                              {"pre", batch.pre},
                              {"post", batch.post},
                              {"load", load}});
  }
  doc["tail"] = s.tail;
  doc["tail_lin_terms"] = lin_terms(s.tail);
  doc["acc_entries"] = lg.acc_registry.size();
  return doc.dump(2) + "\n";
}

std::string stats_to_json(const DedupStats& s, bool ks_enabled, bool acc_enabled) {
  json doc{{"version", 1},
           {"ks_dedup", ks_enabled},
           {"acc_dedup", acc_enabled},
           {"ks_before", s.ks_before},
           {"ks_after", s.ks_after},
           {"acc_materializations_before", s.acc_before},
           {"acc_materializations_after", s.acc_after},
           {"ks_reduction", s.ks_reduction()},
           {"acc_reduction", s.acc_reduction()}};
  return doc.dump(2) + "\n";
}

}  // namespace mbtfhe
