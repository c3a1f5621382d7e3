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

#ifndef MBTFHE_IR_HPP_
#define MBTFHE_IR_HPP_

// Program format (JSON, version 1):
//
//   {
//     "version": 1,
//     "nodes": [
//       {"id": "x", "op": "input", "shape": [4]},
//       {"id": "s", "op": "mul_const", "args": [3], "shape": [4]},
//       {"id": "r", "op": "lut", "args": ["relu"], "shape": [4]},
//       {"id": "y", "op": "output", "shape": [4]}
//     ],
//     "edges": [["x", "s"], ["s", "r"], ["r", "y"]],
//     "tables": {"relu": [0, 0, 0, 0, 4, 5, 6, 7]}
//   }
//
// Ops: input (no operands), output / mul_const / lut (one operand), add (two
// operands). Operand order follows edge order. Every op is elementwise, so all
// operands share the node's shape. Ids may be strings or integers. An input
// may declare "range": [lo, hi] to narrow the static overflow check.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbtfhe {

class ProgramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OpKind { input, output, add, mul_const, lut };
const char* to_string(OpKind op);

struct ProgramNode {
  std::string id;
  OpKind op = OpKind::input;
  std::int64_t constant = 0;  // mul_const
  std::string table;          // lut
  std::vector<std::size_t> shape;
  std::vector<std::size_t> operands;  // node indices
  // input: declared value range for static checks; empty means [0, p).
  std::vector<std::int64_t> range;

  std::size_t elements() const;
};

struct ProgramGraph {
  int version = 1;
  std::vector<ProgramNode> nodes;  // topologically sorted after parsing
  std::map<std::string, std::vector<std::int64_t>> tables;

  std::size_t compute_nodes() const;
  std::size_t index_of(const std::string& id) const;
  std::vector<std::size_t> inputs() const;
  std::vector<std::size_t> outputs() const;
};

ProgramGraph parse_program(const std::string& text);
ProgramGraph load_program(const std::filesystem::path& path);
std::string program_to_json(const ProgramGraph& g);

enum class PrimOp { input, output, ks, ms, br, se, lin };
const char* to_string(PrimOp op);

struct PrimNode {
  PrimOp op = PrimOp::input;
  std::vector<std::size_t> operands;
  std::vector<std::int64_t> coeffs;  // lin: output = sum coeffs[i] * operands[i]
  std::size_t ksk_id = 0;            // ks
  std::size_t acc = 0;               // br: accumulator registry entry
  std::size_t source = 0;            // provenance: program node index
  std::size_t element = 0;           // provenance: tensor element

  friend bool operator==(const PrimNode&, const PrimNode&) = default;
};

struct AccEntry {
  std::string table;
  std::vector<std::int64_t> entries;

  friend bool operator==(const AccEntry&, const AccEntry&) = default;
};

// Scalar primitive graph. Nodes are stored in a topological order; every
// operand index is smaller than its user's index.
struct LoweredGraph {
  std::vector<PrimNode> nodes;
  std::vector<AccEntry> acc_registry;

  std::size_t count(PrimOp op) const;
  friend bool operator==(const LoweredGraph&, const LoweredGraph&) = default;
};

struct DedupStats {
  std::size_t ks_before = 0;
  std::size_t ks_after = 0;
  std::size_t acc_before = 0;
  std::size_t acc_after = 0;

  double ks_reduction() const;
  double acc_reduction() const;
};

// One KS -> MS -> BR -> SE chain per lut element and one LIN per add or
// mul_const element. Each BR gets its own accumulator registry entry.
LoweredGraph lower(const ProgramGraph& g);

struct PassResult {
  LoweredGraph graph;
  DedupStats stats;
};

// Shares one key switch among all KS nodes reading the same ciphertext with
// the same key, and the mod switches that then become identical.
PassResult ks_dedup(const LoweredGraph& lg);
// Shares accumulator registry entries whose entry lists are equal.
PassResult acc_dedup(const LoweredGraph& lg);
DedupStats dedup_stats(const LoweredGraph& before, const LoweredGraph& after);

enum class SyncMode { full, grouped };
const char* to_string(SyncMode s);
SyncMode sync_mode_from_string(const std::string& s);

struct ScheduleOptions {
  std::size_t clusters = 4;
  std::size_t slots_per_cluster = 12;
  SyncMode sync = SyncMode::full;
};

struct Batch {
  // Blind rotations; slot i runs on cluster i % clusters.
  std::vector<std::size_t> br;
  std::vector<std::size_t> cluster;
  // LPU work before the rotations (LIN, KS, MS) and after them (SE).
  std::vector<std::size_t> pre;
  std::vector<std::size_t> post;
  // True when no rotation here depends on the previous batch, so its
  // pre-processing may run while that batch is still rotating.
  bool overlappable = false;
  // Depth in blind rotations from the program inputs (1-based).
  std::size_t level = 0;
};

struct Schedule {
  ScheduleOptions options;
  std::vector<Batch> batches;
  // LPU work after the last batch (LIN feeding outputs, output markers).
  std::vector<std::size_t> tail;

  std::size_t capacity() const { return options.clusters * options.slots_per_cluster; }
};

Schedule schedule(const LoweredGraph& lg, const ScheduleOptions& opts);

std::string lowered_to_json(const LoweredGraph& lg);
std::string schedule_to_json(const Schedule& s, const LoweredGraph& lg);
std::string stats_to_json(const DedupStats& s, bool ks_enabled, bool acc_enabled);

}  // namespace mbtfhe

#endif  // MBTFHE_IR_HPP_
