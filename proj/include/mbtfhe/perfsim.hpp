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

#ifndef MBTFHE_PERFSIM_HPP_
#define MBTFHE_PERFSIM_HPP_

// Batch-level cycle and bandwidth model of a clustered blind-rotation
// accelerator, plus a systolic external-product baseline.
//
// All costs are integer cycles. One cluster holds brus_per_cluster BRUs that
// share one IFFT unit and one LPU. Keys are fetched once per iteration for all
// clusters in a synchronization group.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mbtfhe/ir.hpp"
#include "mbtfhe/params.hpp"

namespace mbtfhe {

struct MachineConfig {
  std::size_t clusters = 4;
  std::size_t brus_per_cluster = 2;
  std::uint64_t bru_mac_throughput = 512;  // complex MACs per cycle per BRU
  std::uint64_t fft_throughput = 256;      // points per cycle per BRU
  std::uint64_t ifft_throughput = 256;     // points per cycle, shared per cluster
  std::size_t lpu_lanes = 4;
  std::size_t lpu_lane_width = 64;
  std::size_t round_robin = 12;  // ciphertexts per cluster per batch

  std::uint64_t acc_buffer_bytes = 9216 * 1024;  // per cluster
  std::uint64_t glwe_buffer_bytes = 1536 * 1024;
  std::uint64_t lwe_buffer_bytes = 24 * 1024;
  std::uint64_t ggsw_buffer_bytes = 768 * 1024;
  std::uint64_t ksk_buffer_bytes = 512 * 1024;
  std::uint64_t twiddle_buffer_bytes = 768 * 1024;

  double hbm_bandwidth_bytes_per_cycle = 819.2;  // two stacks at 1 GHz
  std::uint64_t dram_latency_cycles = 100;
  std::uint64_t noc_latency_cycles = 16;
  std::uint64_t pipeline_fill_cycles = 64;
  std::uint64_t swap_granule_bytes = 16 * 1024;
  std::uint64_t swap_turnaround_cycles = 8;
  std::uint64_t trace_window_cycles = 65536;
  double clock_ghz = 1.0;
  SyncMode sync = SyncMode::full;

  std::size_t capacity() const { return clusters * round_robin; }
  ScheduleOptions schedule_options() const { return {clusters, round_robin, sync}; }
  void validate() const;
  std::string to_text() const;
};

struct XpuConfig {
  std::size_t rows = 4;
  std::size_t pes_per_row = 4;
  std::uint64_t fftu_throughput = 8;    // points per cycle per row
  std::uint64_t pe_mac_throughput = 8;  // complex MACs per cycle per PE
  std::size_t xpus_per_cluster = 2;     // one in place of each BRU

  void validate() const;
};

// key=value files; unknown keys are errors. Keys match the field names, plus
// sync=full|grouped and xpu_* for the baseline.
MachineConfig machine_from_key_values(const std::map<std::string, std::string>& kv);
XpuConfig xpu_from_key_values(const std::map<std::string, std::string>& kv);
void load_machine(const std::filesystem::path& path, MachineConfig& m, XpuConfig& x);

// Per-ciphertext, per-iteration stage costs on one BRU.
struct IterationCosts {
  std::uint64_t fft = 0;
  std::uint64_t mac = 0;
  std::uint64_t ifft = 0;
};
IterationCosts iteration_costs(const TfheParams& p, const MachineConfig& m);

// Compute-bound cycles of one blind-rotation iteration with c ciphertexts in
// flight on a cluster.
std::uint64_t iteration_cycles(const TfheParams& p, const MachineConfig& m, std::size_t c);

// n iterations with round_robin ciphertexts in flight, ignoring memory.
std::uint64_t bru_blind_rotation_cycles(const TfheParams& p, const MachineConfig& m);
// One key switch on one LPU.
std::uint64_t lpu_keyswitch_cycles(const TfheParams& p, const MachineConfig& m);

// PEs per row doing useful work: one per GLWE column, at most pes_per_row.
std::size_t xpu_active_pes(const TfheParams& p, const XpuConfig& x);
// One iteration for the ciphertext held by one row.
std::uint64_t xpu_iteration_cycles(const TfheParams& p, const XpuConfig& x,
                                   const MachineConfig& m);

std::uint64_t bsk_bytes_per_iteration(const TfheParams& p);
std::uint64_t ksk_bytes(const TfheParams& p);
std::uint64_t lwe_bytes(const TfheParams& p);   // one long LWE ciphertext
std::uint64_t glwe_bytes(const TfheParams& p);  // one LUT GLWE
// Two Fourier-domain GLWE accumulators per ciphertext in flight.
std::uint64_t acc_buffer_requirement(const TfheParams& p, std::size_t ciphertexts_per_cluster);

// What one batch asks of the machine.
struct BatchLoad {
  std::vector<std::size_t> br;    // blind rotations per cluster
  std::vector<std::size_t> luts;  // distinct accumulators per cluster
  std::size_t ks = 0;
  std::size_t ms = 0;
  std::size_t lin_terms = 0;
  std::size_t se = 0;
  bool overlappable = true;
};

struct Workload {
  std::vector<BatchLoad> batches;
  std::size_t tail_lin_terms = 0;
  std::size_t clusters = 0;
};

Workload workload_from_schedule(const Schedule& s, const LoweredGraph& lg);
// Reads the schedule JSON written by schedule_to_json.
Workload workload_from_schedule_json(const std::string& text);

struct Bytes {
  std::uint64_t bsk = 0;
  std::uint64_t ksk = 0;
  std::uint64_t glwe = 0;
  std::uint64_t lwe = 0;
  std::uint64_t swap = 0;

  std::uint64_t total() const { return bsk + ksk + glwe + lwe + swap; }
  Bytes& operator+=(const Bytes& o);
};

// Steady-state demand of one full batch, in bytes per cycle, with no
// bandwidth limit applied.
struct Demand {
  double bsk = 0, ksk = 0, glwe = 0, lwe = 0, swap = 0;
  double keys() const { return bsk + ksk; }
  double ciphertexts() const { return glwe + lwe; }
  double total() const { return bsk + ksk + glwe + lwe + swap; }
};
Demand bandwidth_demand(const BatchLoad& batch, const TfheParams& p, const MachineConfig& m);

struct UnitStats {
  std::string name;
  std::uint64_t busy = 0;
  std::uint64_t idle = 0;
  double utilization = 0;
};

struct TraceWindow {
  std::uint64_t start = 0;
  Bytes bytes;
};

struct PerfReport {
  std::string model;  // "cluster" or "xpu"
  std::string params;
  std::string sync;
  std::size_t clusters = 0;
  std::size_t round_robin = 0;
  std::size_t batches = 0;
  std::size_t ciphertexts = 0;  // blind rotations
  std::uint64_t total_cycles = 0;
  double wall_ms = 0;
  std::vector<UnitStats> units;
  std::vector<UnitStats> cluster_units;
  std::uint64_t stall_key_starvation = 0;
  std::uint64_t stall_buffer_swap = 0;
  std::uint64_t stall_dependency = 0;
  double pipeline_utilization = 0;  // 1 - memory stalls / total
  std::uint64_t bsk_macs = 0;       // complex multiply-accumulates with BSK
  Bytes bytes;
  std::uint64_t window_cycles = 0;
  std::vector<TraceWindow> trace;
  double peak_bandwidth = 0;  // bytes per cycle actually moved, busiest window
  Demand peak_demand;         // unthrottled, busiest batch
  std::uint64_t acc_buffer_required = 0;
  std::uint64_t acc_buffer_peak = 0;
};

PerfReport simulate(const Workload& w, const TfheParams& p, const MachineConfig& m);
PerfReport simulate_xpu(const Workload& w, const TfheParams& p, const XpuConfig& x,
                        const MachineConfig& m);

std::string report_to_json(const PerfReport& r);
std::string trace_to_csv(const PerfReport& r);

enum class SweepKind { clusters, round_robin, acc_buffer };
SweepKind sweep_kind_from_string(const std::string& s);

struct SweepRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  std::uint64_t step = 1;
};
SweepRange parse_range(const std::string& text);  // "a:b:step" or "a:b"

struct SweepPoint {
  std::uint64_t value = 0;
  PerfReport report;
  double throughput = 0;  // blind rotations per million cycles
};

// Builds a schedule from lg for each point. The round-robin sweep sizes the
// accumulator buffer to fit each point; the buffer sweep takes KiB values.
std::vector<SweepPoint> sweep(SweepKind kind, const SweepRange& range, const LoweredGraph& lg,
                              const TfheParams& p, const MachineConfig& m);
std::string sweep_to_csv(SweepKind kind, const std::vector<SweepPoint>& points);

// `ciphertexts` independent single-lut ciphertexts cycling through `tables`
// tables.
LoweredGraph synthetic_lut_workload(std::size_t ciphertexts, std::size_t tables = 1);

}  // namespace mbtfhe

#endif  // MBTFHE_PERFSIM_HPP_
