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

#include "mbtfhe/perfsim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mbtfhe {

using nlohmann::json;

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::uint64_t bytes_time(double bytes, double bandwidth) {
  return static_cast<std::uint64_t>(std::ceil(bytes / bandwidth));
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-')
    throw std::invalid_argument("machine key '" + key + "' needs a non-negative integer, got '" +
                                v + "'");
  return x;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty())
    throw std::invalid_argument("machine key '" + key + "' needs a number, got '" + v + "'");
  return x;
}

struct Segment {
  std::uint64_t t0 = 0;
  std::uint64_t t1 = 0;
  Bytes bytes;
};

// One synchronization group running its batches in lockstep.
struct GroupRun {
  std::uint64_t end = 0;
  std::uint64_t bru_busy = 0;
  std::uint64_t ifft_busy = 0;
  std::uint64_t lpu_busy = 0;
  std::vector<std::uint64_t> cluster_busy;
  std::uint64_t stall_key = 0;
  std::uint64_t stall_swap = 0;
  std::uint64_t stall_dep = 0;
  std::uint64_t macs = 0;
  std::vector<Segment> segments;
  Demand peak;
  std::uint64_t acc_required = 0;
  std::uint64_t acc_peak = 0;
};

struct XpuModel {
  bool enabled = false;
  XpuConfig x;
};

GroupRun run_group(const Workload& w, const std::vector<std::size_t>& clusters,
                   const TfheParams& p, const MachineConfig& m, double budget,
                   const XpuModel& xpu) {
  GroupRun g;
  g.cluster_busy.assign(clusters.size(), 0);
  const std::size_t nb = w.batches.size();
  const std::uint64_t lanes = m.lpu_lanes * m.lpu_lane_width;
  const std::uint64_t ks_cost = lpu_keyswitch_cycles(p, m);
  const std::uint64_t ms_cost = ceil_div(p.n + 1, lanes) + m.pipeline_fill_cycles;
  const std::uint64_t lwe_pass = ceil_div(p.n_long() + 1, lanes) + m.pipeline_fill_cycles;
  const IterationCosts ic = iteration_costs(p, m);
  const std::uint64_t bsk_iter = bsk_bytes_per_iteration(p);
  const std::uint64_t n = p.n;
  const std::uint64_t d = p.pbs_gadget.depth;
  const std::uint64_t kp1 = p.k + 1;
  const std::uint64_t half = p.poly_degree / 2;

  struct Phase {
    std::uint64_t pre = 0, post = 0, br_compute = 0, br_turnaround = 0;
    Bytes pre_bytes, post_bytes, br_bytes, br_bytes_noswap;
    bool has_br = false;
  };
  std::vector<Phase> ph(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const BatchLoad& L = w.batches[b];
    std::size_t total_br = 0, group_br = 0, c = 0, luts = 0;
    for (auto v : L.br) total_br += v;
    for (auto j : clusters) {
      group_br += L.br[j];
      c = std::max(c, L.br[j]);
      luts += L.luts[j];
    }
    // LPU work follows the group's share of the batch's ciphertexts.
    auto share = [&](std::size_t count) -> std::uint64_t {
      if (total_br == 0) return clusters.size() == w.clusters ? count : 0;
      return ceil_div(static_cast<std::uint64_t>(count) * group_br, total_br);
    };
    const std::uint64_t ks = share(L.ks), ms = share(L.ms), lin = share(L.lin_terms),
                        se = share(L.se);
    auto per_cluster = [&](std::uint64_t x) { return ceil_div(x, clusters.size()); };
    Phase& f = ph[b];
    f.pre = per_cluster(ks) * ks_cost + per_cluster(ms) * ms_cost + per_cluster(lin) * lwe_pass;
    f.post = per_cluster(se) * lwe_pass;
    if (ks > 0) f.pre_bytes.ksk = ksk_bytes(p);
    f.pre_bytes.lwe = ks * lwe_bytes(p);
    f.post_bytes.lwe = se * lwe_bytes(p);
    if (c == 0) continue;
    f.has_br = true;
    std::uint64_t deficit = 0;
    if (!xpu.enabled) {
      const std::uint64_t req = acc_buffer_requirement(p, c);
      g.acc_required = std::max(g.acc_required, req);
      g.acc_peak = std::max(g.acc_peak, std::min(req, m.acc_buffer_bytes));
      if (req > m.acc_buffer_bytes) deficit = req - m.acc_buffer_bytes;
      const std::uint64_t events = ceil_div(deficit, m.swap_granule_bytes);
      f.br_turnaround = n * events * m.swap_turnaround_cycles;
      f.br_compute = n * iteration_cycles(p, m, c) + f.br_turnaround;
      f.br_bytes.bsk = n * bsk_iter;
      for (std::size_t j = 0; j < clusters.size(); ++j) {
        const std::size_t cj = L.br[clusters[j]];
        g.cluster_busy[j] += n * ceil_div(cj, m.brus_per_cluster) * std::max(ic.fft, ic.mac);
        g.macs += cj * n * kp1 * kp1 * d * half;
      }
      g.bru_busy += n * ceil_div(c, m.brus_per_cluster) * std::max(ic.fft, ic.mac);
      g.ifft_busy += n * c * ic.ifft;
    } else {
      const std::uint64_t rows = xpu.x.rows * xpu.x.xpus_per_cluster;
      const std::uint64_t rounds = ceil_div(c, rows);
      const std::uint64_t row_time = xpu_iteration_cycles(p, xpu.x, m);
      f.br_compute = rounds * n * row_time;
      // Each BSK coefficient is used once per PBS, so every round refetches.
      f.br_bytes.bsk = rounds * n * bsk_iter;
      const std::uint64_t active = xpu_active_pes(p, xpu.x);
      const std::uint64_t passes = ceil_div(kp1, xpu.x.pes_per_row);
      for (std::size_t j = 0; j < clusters.size(); ++j) {
        const std::size_t cj = L.br[clusters[j]];
        g.cluster_busy[j] += ceil_div(cj, rows) * n * row_time;
        // One output column per active PE per pass, (k+1)*d products each.
        std::uint64_t columns = std::min<std::uint64_t>(active * passes, kp1);
        g.macs += cj * n * columns * kp1 * d * half;
      }
      g.bru_busy += rounds * n * row_time;
    }
    f.br_bytes.glwe = luts * glwe_bytes(p);
    f.br_bytes_noswap = f.br_bytes;
    f.br_bytes.swap = n * 2 * deficit * clusters.size();
  }

  std::uint64_t t_lpu = m.dram_latency_cycles;
  std::uint64_t t_bru = m.dram_latency_cycles;
  std::vector<std::uint64_t> pre_end(nb, 0);
  // An LPU phase beside a rotation gets what the rotation leaves over.
  auto lpu_phase = [&](std::uint64_t start, std::uint64_t compute, const Bytes& bytes,
                       double beside_rate) {
    const double avail = std::max(budget - beside_rate, 1.0);
    std::uint64_t dur = std::max(compute, bytes_time(static_cast<double>(bytes.total()), avail));
    if (dur > 0) g.segments.push_back({start, start + dur, bytes});
    g.lpu_busy += compute;
    return start + dur;
  };
  if (nb > 0) {
    pre_end[0] = lpu_phase(t_lpu, ph[0].pre, ph[0].pre_bytes, 0);
    t_lpu = pre_end[0];
  }
  std::uint64_t prev_br_end = t_bru;
  bool post_pending = false;
  for (std::size_t b = 0; b < nb; ++b) {
    const Phase& f = ph[b];
    const bool next_overlaps = b + 1 < nb && w.batches[b + 1].overlappable;
    const bool prev_beside = post_pending;
    double rate = 0;
    if (f.has_br) {
      const std::uint64_t start = std::max(t_bru, pre_end[b]);
      g.stall_dep += start - t_bru;
      // LPU traffic running beside this rotation.
      Bytes beside;
      if (next_overlaps) beside += ph[b + 1].pre_bytes;
      if (prev_beside) beside += ph[b - 1].post_bytes;
      const double compute = static_cast<double>(f.br_compute);
      const double avail = std::max(budget - beside.total() / compute, budget / 8);
      const std::uint64_t no_swap =
          std::max(f.br_compute, bytes_time(static_cast<double>(f.br_bytes_noswap.total()), avail));
      const std::uint64_t dur =
          std::max(no_swap, bytes_time(static_cast<double>(f.br_bytes.total()), avail));
      g.stall_key += no_swap - f.br_compute;
      g.stall_swap += (dur - no_swap) + f.br_turnaround;
      const std::uint64_t end = start + dur + m.noc_latency_cycles;
      g.segments.push_back({start, end, f.br_bytes});
      rate = static_cast<double>(f.br_bytes.total()) / static_cast<double>(dur);
      Demand dm;
      dm.bsk = f.br_bytes.bsk / compute;
      dm.glwe = f.br_bytes.glwe / compute;
      dm.swap = f.br_bytes.swap / compute;
      dm.ksk = beside.ksk / compute;
      dm.lwe = beside.lwe / compute;
      if (dm.total() > g.peak.total()) g.peak = dm;
      t_bru = end;
    }
    if (prev_beside) t_lpu = lpu_phase(std::max(t_lpu, prev_br_end), ph[b - 1].post, ph[b - 1].post_bytes, rate);
    if (next_overlaps) {
      pre_end[b + 1] = lpu_phase(t_lpu, ph[b + 1].pre, ph[b + 1].pre_bytes, rate);
      t_lpu = pre_end[b + 1];
      post_pending = true;
    } else {
      // The next batch waits on this one, so its write-back and loads run alone.
      t_lpu = lpu_phase(std::max(t_lpu, t_bru), f.post, f.post_bytes, 0);
      post_pending = false;
      if (b + 1 < nb) {
        pre_end[b + 1] = lpu_phase(t_lpu, ph[b + 1].pre, ph[b + 1].pre_bytes, 0);
        t_lpu = pre_end[b + 1];
      }
    }
    prev_br_end = t_bru;
  }
  const std::uint64_t tail = ceil_div(w.tail_lin_terms, clusters.size()) * lwe_pass;
  t_lpu = std::max(t_lpu, t_bru) + tail;
  g.lpu_busy += tail;
  g.end = std::max(t_lpu, t_bru);
  return g;
}

void bin_segments(PerfReport& r, const std::vector<Segment>& segs) {
  const std::uint64_t wlen = r.window_cycles;
  const std::size_t count = static_cast<std::size_t>(ceil_div(std::max<std::uint64_t>(r.total_cycles, 1), wlen));
  r.trace.assign(count, {});
  for (std::size_t i = 0; i < count; ++i) r.trace[i].start = i * wlen;
  auto spread = [&](std::uint64_t t0, std::uint64_t t1, std::uint64_t bytes,
                    std::uint64_t Bytes::*field) {
    if (bytes == 0) return;
    if (t1 <= t0) t1 = t0 + 1;
    const std::uint64_t len = t1 - t0;
    std::uint64_t given = 0;
    std::size_t last = 0;
    for (std::uint64_t w = t0 / wlen; w * wlen < t1 && w < count; ++w) {
      const std::uint64_t lo = std::max(t0, w * wlen);
      const std::uint64_t hi = std::min(t1, (w + 1) * wlen);
      const std::uint64_t part =
          static_cast<std::uint64_t>(static_cast<unsigned __int128>(bytes) * (hi - lo) / len);
      r.trace[w].bytes.*field += part;
      given += part;
      last = static_cast<std::size_t>(w);
    }
    r.trace[last].bytes.*field += bytes - given;
  };
  for (const auto& s : segs) {
    spread(s.t0, s.t1, s.bytes.bsk, &Bytes::bsk);
    spread(s.t0, s.t1, s.bytes.ksk, &Bytes::ksk);
    spread(s.t0, s.t1, s.bytes.glwe, &Bytes::glwe);
    spread(s.t0, s.t1, s.bytes.lwe, &Bytes::lwe);
    spread(s.t0, s.t1, s.bytes.swap, &Bytes::swap);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t span = std::min(wlen, r.total_cycles - std::min(r.total_cycles, i * wlen));
    if (span == 0) continue;
    r.peak_bandwidth =
        std::max(r.peak_bandwidth, static_cast<double>(r.trace[i].bytes.total()) / span);
  }
}

PerfReport run(const Workload& w, const TfheParams& p, const MachineConfig& m, const XpuModel& xpu) {
  m.validate();
  p.validate();
  if (w.clusters != m.clusters)
    throw std::invalid_argument("schedule was built for " + std::to_string(w.clusters) +
                                " clusters, machine has " + std::to_string(m.clusters));
  for (const auto& b : w.batches) {
    if (b.br.size() != m.clusters || b.luts.size() != m.clusters)
      throw std::invalid_argument("batch load does not match the cluster count");
  }
  std::vector<std::vector<std::size_t>> groups;
  if (m.sync == SyncMode::grouped && m.clusters >= 2) {
    groups.resize(2);
    for (std::size_t j = 0; j < m.clusters; ++j) groups[j < m.clusters / 2 ? 0 : 1].push_back(j);
  } else {
    groups.resize(1);
    for (std::size_t j = 0; j < m.clusters; ++j) groups[0].push_back(j);
  }
  const double budget = m.hbm_bandwidth_bytes_per_cycle / static_cast<double>(groups.size());

  PerfReport r;
  r.model = xpu.enabled ? "xpu" : "cluster";
  r.params = p.name;
  r.sync = to_string(m.sync);
  r.clusters = m.clusters;
  r.round_robin = m.round_robin;
  r.batches = w.batches.size();
  for (const auto& b : w.batches)
    for (auto v : b.br) r.ciphertexts += v;
  r.window_cycles = m.trace_window_cycles;
  r.cluster_units.resize(m.clusters);

  std::vector<Segment> segs;
  std::uint64_t bru = 0, ifft = 0, lpu = 0;
  for (const auto& members : groups) {
    GroupRun g = run_group(w, members, p, m, budget, xpu);
    r.total_cycles = std::max(r.total_cycles, g.end);
    bru = std::max(bru, g.bru_busy);
    ifft = std::max(ifft, g.ifft_busy);
    lpu = std::max(lpu, g.lpu_busy);
    r.stall_key_starvation = std::max(r.stall_key_starvation, g.stall_key);
    r.stall_buffer_swap = std::max(r.stall_buffer_swap, g.stall_swap);
    r.stall_dependency = std::max(r.stall_dependency, g.stall_dep);
    r.bsk_macs += g.macs;
    for (std::size_t j = 0; j < members.size(); ++j)
      r.cluster_units[members[j]].busy = g.cluster_busy[j];
    for (const auto& s : g.segments) {
      segs.push_back(s);
      r.bytes += s.bytes;
    }
    // Groups run side by side, so their demands add.
    r.peak_demand.bsk += g.peak.bsk;
    r.peak_demand.ksk += g.peak.ksk;
    r.peak_demand.glwe += g.peak.glwe;
    r.peak_demand.lwe += g.peak.lwe;
    r.peak_demand.swap += g.peak.swap;
    r.acc_buffer_required = std::max(r.acc_buffer_required, g.acc_required);
    r.acc_buffer_peak = std::max(r.acc_buffer_peak, g.acc_peak);
  }
  const std::uint64_t total = std::max<std::uint64_t>(r.total_cycles, 1);
  auto unit = [total](const std::string& name, std::uint64_t busy) {
    busy = std::min(busy, total);
    return UnitStats{name, busy, total - busy, static_cast<double>(busy) / total};
  };
  r.units.push_back(unit(xpu.enabled ? "xpu" : "bru", bru));
  if (!xpu.enabled) r.units.push_back(unit("ifft", ifft));
  r.units.push_back(unit("lpu", lpu));
  r.units.push_back(
      unit("hbm", bytes_time(static_cast<double>(r.bytes.total()), m.hbm_bandwidth_bytes_per_cycle)));
  for (std::size_t j = 0; j < m.clusters; ++j)
    r.cluster_units[j] = unit("cluster" + std::to_string(j), r.cluster_units[j].busy);
  const std::uint64_t stalls = std::min(total, r.stall_key_starvation + r.stall_buffer_swap);
  r.pipeline_utilization = 1.0 - static_cast<double>(stalls) / total;
  r.wall_ms = static_cast<double>(r.total_cycles) / (m.clock_ghz * 1e6);
  bin_segments(r, segs);
  return r;
}

}  // namespace

Bytes& Bytes::operator+=(const Bytes& o) {
  bsk += o.bsk;
  ksk += o.ksk;
  glwe += o.glwe;
  lwe += o.lwe;
  swap += o.swap;
  return *this;
}

void MachineConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0)) throw std::invalid_argument(std::string("machine field ") + name + " must be positive");
  };
  positive("clusters", static_cast<double>(clusters));
  positive("brus_per_cluster", static_cast<double>(brus_per_cluster));
  positive("bru_mac_throughput", static_cast<double>(bru_mac_throughput));
  positive("fft_throughput", static_cast<double>(fft_throughput));
  positive("ifft_throughput", static_cast<double>(ifft_throughput));
  positive("lpu_lanes", static_cast<double>(lpu_lanes));
  positive("lpu_lane_width", static_cast<double>(lpu_lane_width));
  positive("round_robin", static_cast<double>(round_robin));
  positive("hbm_bandwidth_bytes_per_cycle", hbm_bandwidth_bytes_per_cycle);
  positive("swap_granule_bytes", static_cast<double>(swap_granule_bytes));
  positive("trace_window_cycles", static_cast<double>(trace_window_cycles));
  positive("clock_ghz", clock_ghz);
}

std::string MachineConfig::to_text() const {
  std::ostringstream o;
  o << "clusters=" << clusters << "\nbrus_per_cluster=" << brus_per_cluster
    << "\nbru_mac_throughput=" << bru_mac_throughput << "\nfft_throughput=" << fft_throughput
    << "\nifft_throughput=" << ifft_throughput << "\nlpu_lanes=" << lpu_lanes
    << "\nlpu_lane_width=" << lpu_lane_width << "\nround_robin=" << round_robin
    << "\nacc_buffer_bytes=" << acc_buffer_bytes << "\nglwe_buffer_bytes=" << glwe_buffer_bytes
    << "\nlwe_buffer_bytes=" << lwe_buffer_bytes << "\nggsw_buffer_bytes=" << ggsw_buffer_bytes
    << "\nksk_buffer_bytes=" << ksk_buffer_bytes
    << "\ntwiddle_buffer_bytes=" << twiddle_buffer_bytes
    << "\nhbm_bandwidth_bytes_per_cycle=" << hbm_bandwidth_bytes_per_cycle
    << "\ndram_latency_cycles=" << dram_latency_cycles
    << "\nnoc_latency_cycles=" << noc_latency_cycles
    << "\npipeline_fill_cycles=" << pipeline_fill_cycles
    << "\nswap_granule_bytes=" << swap_granule_bytes
    << "\nswap_turnaround_cycles=" << swap_turnaround_cycles
    << "\ntrace_window_cycles=" << trace_window_cycles << "\nclock_ghz=" << clock_ghz
    << "\nsync=" << to_string(sync) << "\n";
  return o.str();
}

void XpuConfig::validate() const {
  if (rows == 0 || pes_per_row == 0 || fftu_throughput == 0 || pe_mac_throughput == 0 ||
      xpus_per_cluster == 0)
    throw std::invalid_argument("xpu fields must be positive");
}

MachineConfig machine_from_key_values(const std::map<std::string, std::string>& kv) {
  MachineConfig m;
  for (const auto& [key, v] : kv) {
    if (key.rfind("xpu_", 0) == 0) continue;
    if (key == "clusters") m.clusters = to_u64(key, v);
    else if (key == "brus_per_cluster") m.brus_per_cluster = to_u64(key, v);
    else if (key == "bru_mac_throughput") m.bru_mac_throughput = to_u64(key, v);
    else if (key == "fft_throughput") m.fft_throughput = to_u64(key, v);
    else if (key == "ifft_throughput") m.ifft_throughput = to_u64(key, v);
    else if (key == "lpu_lanes") m.lpu_lanes = to_u64(key, v);
    else if (key == "lpu_lane_width") m.lpu_lane_width = to_u64(key, v);
    else if (key == "round_robin") m.round_robin = to_u64(key, v);
    else if (key == "acc_buffer_bytes") m.acc_buffer_bytes = to_u64(key, v);
    else if (key == "glwe_buffer_bytes") m.glwe_buffer_bytes = to_u64(key, v);
    else if (key == "lwe_buffer_bytes") m.lwe_buffer_bytes = to_u64(key, v);
    else if (key == "ggsw_buffer_bytes") m.ggsw_buffer_bytes = to_u64(key, v);
    else if (key == "ksk_buffer_bytes") m.ksk_buffer_bytes = to_u64(key, v);
    else if (key == "twiddle_buffer_bytes") m.twiddle_buffer_bytes = to_u64(key, v);
    else if (key == "hbm_bandwidth_bytes_per_cycle") m.hbm_bandwidth_bytes_per_cycle = to_double(key, v);
    else if (key == "dram_latency_cycles") m.dram_latency_cycles = to_u64(key, v);
    else if (key == "noc_latency_cycles") m.noc_latency_cycles = to_u64(key, v);
    else if (key == "pipeline_fill_cycles") m.pipeline_fill_cycles = to_u64(key, v);
    else if (key == "swap_granule_bytes") m.swap_granule_bytes = to_u64(key, v);
    else if (key == "swap_turnaround_cycles") m.swap_turnaround_cycles = to_u64(key, v);
    else if (key == "trace_window_cycles") m.trace_window_cycles = to_u64(key, v);
    else if (key == "clock_ghz") m.clock_ghz = to_double(key, v);
    else if (key == "sync") m.sync = sync_mode_from_string(v);
    else throw std::invalid_argument("unknown machine key '" + key + "'");
  }
  m.validate();
  return m;
}

XpuConfig xpu_from_key_values(const std::map<std::string, std::string>& kv) {
  XpuConfig x;
  for (const auto& [key, v] : kv) {
    if (key.rfind("xpu_", 0) != 0) continue;
    if (key == "xpu_rows") x.rows = to_u64(key, v);
    else if (key == "xpu_pes_per_row") x.pes_per_row = to_u64(key, v);
    else if (key == "xpu_fftu_throughput") x.fftu_throughput = to_u64(key, v);
    else if (key == "xpu_pe_mac_throughput") x.pe_mac_throughput = to_u64(key, v);
    else if (key == "xpu_per_cluster") x.xpus_per_cluster = to_u64(key, v);
    else throw std::invalid_argument("unknown machine key '" + key + "'");
  }
  x.validate();
  return x;
}

void load_machine(const std::filesystem::path& path, MachineConfig& m, XpuConfig& x) {
  const auto kv = read_key_values(path);
  m = machine_from_key_values(kv);
  x = xpu_from_key_values(kv);
}

IterationCosts iteration_costs(const TfheParams& p, const MachineConfig& m) {
  const std::uint64_t kp1 = p.k + 1, d = p.pbs_gadget.depth, half = p.poly_degree / 2;
  return {ceil_div(kp1 * d * half, m.fft_throughput),
          ceil_div(kp1 * kp1 * d * half, m.bru_mac_throughput),
          ceil_div(kp1 * half, m.ifft_throughput)};
}

std::uint64_t iteration_cycles(const TfheParams& p, const MachineConfig& m, std::size_t c) {
  if (c == 0) return 0;
  const IterationCosts ic = iteration_costs(p, m);
  const std::uint64_t stream = ceil_div(c, m.brus_per_cluster) * std::max(ic.fft, ic.mac);
  const std::uint64_t shared_ifft = c * ic.ifft;
  // One ciphertext cannot start iteration i+1 before iteration i drains.
  const std::uint64_t latency = ic.fft + ic.mac + ic.ifft + m.pipeline_fill_cycles;
  return std::max({stream, shared_ifft, latency});
}

std::uint64_t bru_blind_rotation_cycles(const TfheParams& p, const MachineConfig& m) {
  return p.n * iteration_cycles(p, m, m.round_robin);
}

std::uint64_t lpu_keyswitch_cycles(const TfheParams& p, const MachineConfig& m) {
  const std::uint64_t work = static_cast<std::uint64_t>(p.n_long()) * p.ks_gadget.depth * (p.n + 1);
  return ceil_div(work, m.lpu_lanes * m.lpu_lane_width) + m.pipeline_fill_cycles;
}

std::size_t xpu_active_pes(const TfheParams& p, const XpuConfig& x) {
  return std::min<std::size_t>(p.k + 1, x.pes_per_row);
}

std::uint64_t xpu_iteration_cycles(const TfheParams& p, const XpuConfig& x,
                                   const MachineConfig& m) {
  const std::uint64_t kp1 = p.k + 1, d = p.pbs_gadget.depth, half = p.poly_degree / 2;
  const std::uint64_t passes = ceil_div(kp1, x.pes_per_row);
  const std::uint64_t fft = ceil_div(kp1 * d * half, x.fftu_throughput);
  const std::uint64_t mac = passes * ceil_div(kp1 * d * half, x.pe_mac_throughput);
  const std::uint64_t ifft = ceil_div(kp1 * half, x.fftu_throughput);
  return std::max({fft, mac, ifft}) + m.pipeline_fill_cycles;
}

std::uint64_t bsk_bytes_per_iteration(const TfheParams& p) {
  const std::uint64_t kp1 = p.k + 1;
  return kp1 * kp1 * p.pbs_gadget.depth * (p.poly_degree / 2) * 12;
}

std::uint64_t ksk_bytes(const TfheParams& p) {
  return static_cast<std::uint64_t>(p.n_long()) * p.ks_gadget.depth * (p.n + 1) * 8;
}

std::uint64_t lwe_bytes(const TfheParams& p) { return (p.n_long() + 1) * 8; }

std::uint64_t glwe_bytes(const TfheParams& p) { return (p.k + 1) * p.poly_degree * 8; }

std::uint64_t acc_buffer_requirement(const TfheParams& p, std::size_t c) {
  return static_cast<std::uint64_t>(c) * 2 * (p.k + 1) * (p.poly_degree / 2) * 12;
}

Workload workload_from_schedule(const Schedule& s, const LoweredGraph& lg) {
  Workload w;
  w.clusters = s.options.clusters;
  for (const auto& batch : s.batches) {
    BatchLoad L;
    L.br.assign(w.clusters, 0);
    std::vector<std::set<std::size_t>> accs(w.clusters);
    for (std::size_t j = 0; j < batch.br.size(); ++j) {
      ++L.br[batch.cluster[j]];
      accs[batch.cluster[j]].insert(lg.nodes[batch.br[j]].acc);
    }
    for (const auto& a : accs) L.luts.push_back(a.size());
    for (auto i : batch.pre) {
      const PrimNode& n = lg.nodes[i];
      if (n.op == PrimOp::ks) ++L.ks;
      if (n.op == PrimOp::ms) ++L.ms;
      if (n.op == PrimOp::lin) L.lin_terms += n.operands.size();
    }
    L.se = batch.post.size();
    L.overlappable = batch.overlappable;
    w.batches.push_back(std::move(L));
  }
  for (auto i : s.tail)
    if (lg.nodes[i].op == PrimOp::lin) w.tail_lin_terms += lg.nodes[i].operands.size();
  return w;
}

Workload workload_from_schedule_json(const std::string& text) {
  Workload w;
  try {
    json doc = json::parse(text);
    if (doc.value("version", 0) != 1) throw std::invalid_argument("unsupported schedule version");
    w.clusters = doc.at("clusters").get<std::size_t>();
    for (const auto& b : doc.at("batches")) {
      const json& load = b.at("load");
      BatchLoad L;
      L.br = load.at("br").get<std::vector<std::size_t>>();
      L.luts = load.at("luts").get<std::vector<std::size_t>>();
      L.ks = load.at("ks").get<std::size_t>();
      L.ms = load.at("ms").get<std::size_t>();
      L.lin_terms = load.at("lin_terms").get<std::size_t>();
      L.se = load.at("se").get<std::size_t>();
      L.overlappable = b.at("overlappable").get<bool>();
      w.batches.push_back(std::move(L));
    }
    w.tail_lin_terms = doc.value("tail_lin_terms", std::size_t{0});
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed schedule: ") + e.what());
  }
  return w;
}

Demand bandwidth_demand(const BatchLoad& batch, const TfheParams& p, const MachineConfig& m) {
  Workload w;
  w.clusters = m.clusters;
  // Three copies so the middle one sees neighbours on both sides.
  BatchLoad b = batch;
  b.overlappable = true;
  w.batches = {b, b, b};
  MachineConfig full = m;
  full.sync = SyncMode::full;
  full.hbm_bandwidth_bytes_per_cycle = 1e18;
  return run(w, p, full, {}).peak_demand;
}

PerfReport simulate(const Workload& w, const TfheParams& p, const MachineConfig& m) {
  return run(w, p, m, {});
}

PerfReport simulate_xpu(const Workload& w, const TfheParams& p, const XpuConfig& x,
                        const MachineConfig& m) {
  x.validate();
  return run(w, p, m, {true, x});
}

std::string report_to_json(const PerfReport& r) {
  auto bytes = [](const Bytes& b) {
    return json{{"bsk", b.bsk}, {"ksk", b.ksk}, {"glwe", b.glwe}, {"lwe", b.lwe}, {"swap", b.swap}};
  };
  auto units = [](const std::vector<UnitStats>& us) {
    json a = json::array();
    for (const auto& u : us)
      a.push_back({{"name", u.name}, {"busy", u.busy}, {"idle", u.idle}, {"utilization", u.utilization}});
    return a;
  };
  json doc{{"version", 1},
           {"model", r.model},
           {"params", r.params},
           {"sync", r.sync},
           {"clusters", r.clusters},
           {"round_robin", r.round_robin},
           {"batches", r.batches},
           {"ciphertexts", r.ciphertexts},
           {"total_cycles", r.total_cycles},
           {"wall_ms", r.wall_ms},
           {"units", units(r.units)},
           {"cluster_utilization", units(r.cluster_units)},
           {"stalls",
            {{"key_starvation", r.stall_key_starvation},
             {"buffer_swap", r.stall_buffer_swap},
             {"dependency", r.stall_dependency}}},
           {"pipeline_utilization", r.pipeline_utilization},
           {"bsk_macs", r.bsk_macs},
           {"bytes", bytes(r.bytes)},
           {"peak_bandwidth_bytes_per_cycle", r.peak_bandwidth},
           {"peak_demand_bytes_per_cycle",
            {{"bsk", r.peak_demand.bsk},
             {"ksk", r.peak_demand.ksk},
             {"glwe", r.peak_demand.glwe},
             {"lwe", r.peak_demand.lwe},
             {"swap", r.peak_demand.swap},
             {"total", r.peak_demand.total()}}},
           {"acc_buffer", {{"required", r.acc_buffer_required}, {"peak", r.acc_buffer_peak}}},
           {"trace_window_cycles", r.window_cycles},
           {"trace_windows", r.trace.size()}};
  return doc.dump(2) + "\n";
}

std::string trace_to_csv(const PerfReport& r) {
  std::ostringstream o;
  o << "window_start,bsk,ksk,glwe,lwe,swap\n";
  for (const auto& t : r.trace)
    o << t.start << ',' << t.bytes.bsk << ',' << t.bytes.ksk << ',' << t.bytes.glwe << ','
      << t.bytes.lwe << ',' << t.bytes.swap << '\n';
  return o.str();
}

SweepKind sweep_kind_from_string(const std::string& s) {
  if (s == "clusters") return SweepKind::clusters;
  if (s == "rr" || s == "round_robin") return SweepKind::round_robin;
  if (s == "accbuf" || s == "acc_buffer") return SweepKind::acc_buffer;
  throw std::invalid_argument("unknown sweep kind '" + s + "'");
}

SweepRange parse_range(const std::string& text) {
  SweepRange r;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 2 || parts.size() > 3)
    throw std::invalid_argument("range must be a:b or a:b:step, got '" + text + "'");
  r.first = to_u64("range", parts[0]);
  r.last = to_u64("range", parts[1]);
  if (parts.size() == 3) r.step = to_u64("range", parts[2]);
  if (r.step == 0 || r.first > r.last || r.first == 0)
    throw std::invalid_argument("range needs 0 < a <= b and step > 0, got '" + text + "'");
  return r;
}

std::vector<SweepPoint> sweep(SweepKind kind, const SweepRange& range, const LoweredGraph& lg,
                              const TfheParams& p, const MachineConfig& m) {
  std::vector<SweepPoint> out;
  for (std::uint64_t v = range.first; v <= range.last; v += range.step) {
    MachineConfig point = m;
    switch (kind) {
      case SweepKind::clusters:
        point.clusters = v;
        break;
      case SweepKind::round_robin:
        point.round_robin = v;
        point.acc_buffer_bytes = acc_buffer_requirement(p, v);
        break;
      case SweepKind::acc_buffer:
        point.acc_buffer_bytes = v * 1024;
        break;
    }
    const Schedule s = schedule(lg, point.schedule_options());
    SweepPoint sp;
    sp.value = v;
    sp.report = simulate(workload_from_schedule(s, lg), p, point);
    sp.throughput = 1e6 * static_cast<double>(sp.report.ciphertexts) /
                    static_cast<double>(std::max<std::uint64_t>(sp.report.total_cycles, 1));
    out.push_back(std::move(sp));
  }
  return out;
}

std::string sweep_to_csv(SweepKind kind, const std::vector<SweepPoint>& points) {
  std::ostringstream o;
  o << std::setprecision(10);
  const char* name = kind == SweepKind::clusters      ? "clusters"
                     : kind == SweepKind::round_robin ? "round_robin"
                                                      : "acc_buffer_kib";
  o << name
    << ",total_cycles,throughput_per_mcycle,pipeline_utilization,stall_key,stall_swap,"
       "stall_dependency,demand_bsk,demand_ksk,demand_glwe,demand_lwe,demand_swap,demand_total,"
       "acc_buffer_required,acc_buffer_peak\n";
  for (const auto& pt : points) {
    const PerfReport& r = pt.report;
    o << pt.value << ',' << r.total_cycles << ',' << pt.throughput << ',' << r.pipeline_utilization
      << ',' << r.stall_key_starvation << ',' << r.stall_buffer_swap << ',' << r.stall_dependency
      << ',' << r.peak_demand.bsk << ',' << r.peak_demand.ksk << ',' << r.peak_demand.glwe << ','
      << r.peak_demand.lwe << ',' << r.peak_demand.swap << ',' << r.peak_demand.total() << ','
      << r.acc_buffer_required << ',' << r.acc_buffer_peak << '\n';
  }
  return o.str();
}

LoweredGraph synthetic_lut_workload(std::size_t ciphertexts, std::size_t tables) {
  LoweredGraph lg;
  for (std::size_t t = 0; t < tables; ++t) {
    AccEntry a;
    a.table = "t" + std::to_string(t);
    for (std::int64_t i = 0; i < 8; ++i) a.entries.push_back((i + static_cast<std::int64_t>(t)) % 8);
    lg.acc_registry.push_back(a);
  }
  for (std::size_t c = 0; c < ciphertexts; ++c) {
    auto emit = [&](PrimOp op, std::vector<std::size_t> operands) {
      PrimNode n;
      n.op = op;
      n.operands = std::move(operands);
      n.element = c;
      if (op == PrimOp::br) n.acc = c % tables;
      lg.nodes.push_back(n);
      return lg.nodes.size() - 1;
    };
    std::size_t in = emit(PrimOp::input, {});
    std::size_t ks = emit(PrimOp::ks, {in});
    std::size_t ms = emit(PrimOp::ms, {ks});
    std::size_t br = emit(PrimOp::br, {ms});
    std::size_t se = emit(PrimOp::se, {br});
    emit(PrimOp::output, {se});
  }
  return lg;
}

}  // namespace mbtfhe
