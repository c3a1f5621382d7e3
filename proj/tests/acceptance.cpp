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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mbtfhe/exec.hpp"
#include "mbtfhe/fft.hpp"
#include "mbtfhe/ir.hpp"
#include "mbtfhe/params.hpp"
#include "mbtfhe/perfsim.hpp"
#include "mbtfhe/rng.hpp"
#include "mbtfhe/tfhe.hpp"
#include "program_gen.hpp"

namespace fs = std::filesystem;
using namespace mbtfhe;

namespace {

// Tolerances.
constexpr double kMulSeconds = 60.0;
constexpr double kPbsSeconds = 300.0;
constexpr std::size_t kPbsTrials = 1000;
constexpr std::size_t kPbsMinCorrect = 999;
constexpr std::size_t kNoiseSamples = 1000;
constexpr std::size_t kAccumulations = 10;
constexpr double kNoiseRelTol = 0.10;
constexpr std::size_t kRandomPrograms = 50;
constexpr std::size_t kMaxProgramNodes = 30;
constexpr double kTrafficScaleTol = 0.05;
constexpr double kPlateauFraction = 0.99;
constexpr double kNearMissUtilization = 0.99;
constexpr double kXpuLow = 3.0, kXpuHigh = 7.0;
constexpr double kGroupedMaxGain = 0.05;
constexpr double kGroupedMinPeak = 1.7;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---- 1

TorusPolynomial schoolbook(const IntPolynomial& a, const TorusPolynomial& b) {
  const std::size_t n = a.degree();
  TorusPolynomial c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Torus ai = static_cast<Torus>(a[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const Torus prod = ai * b[j];
      if (i + j < n) c[i + j] += prod;
      else c[i + j - n] -= prod;
    }
  }
  return c;
}

Outcome negacyclic_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Prng rng(seed_from_u64(101));
  std::size_t checked = 0, wrong = 0;
  for (std::size_t n : {8, 64, 1024}) {
    const FftPlan plan = build_plan(n);
    for (int trial = 0; trial < 100; ++trial) {
      IntPolynomial a(n);
      TorusPolynomial b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = static_cast<std::int64_t>(rng.next_u64() % 257) - 128;
        b[i] = rng.uniform_torus();
      }
      const TorusPolynomial want = schoolbook(a, b);
      for (FftMode mode : {FftMode::reference, FftMode::fixed48}) {
        ++checked;
        if (negacyclic_mul(a, b, plan, mode) != want) ++wrong;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {wrong == 0 && secs < kMulSeconds,
          std::to_string(checked - wrong) + "/" + std::to_string(checked) +
              " products exact, " + fmt("%.1f s", secs)};
}

// ---- 2

Outcome pbs_correctness(const KeySet& keys) {
  const TfheParams& p = keys.params;
  const FftPlan plan = build_plan(p.poly_degree);
  const std::vector<std::uint64_t> identity{0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<std::uint64_t> relu{0, 1, 2, 3, 0, 0, 0, 0};
  const auto t0 = std::chrono::steady_clock::now();
  Prng rng(seed_from_u64(202));
  std::vector<std::size_t> correct;
  for (const auto* table : {&identity, &relu}) {
    const LookupTable lut = encode_lut(*table, p);
    std::size_t ok = 0;
    for (std::size_t t = 0; t < kPbsTrials; ++t) {
      const std::uint64_t m = t % p.message_space();
      const LweCiphertext out = pbs(encrypt(m, keys.secret, p, rng), lut, keys, plan);
      if (decrypt(out, keys.secret, p) == (*table)[m]) ++ok;
    }
    correct.push_back(ok);
  }
  const double secs = seconds_since(t0);
  return {correct[0] >= kPbsMinCorrect && correct[1] >= kPbsMinCorrect && secs < kPbsSeconds,
          "identity " + std::to_string(correct[0]) + "/1000, relu " + std::to_string(correct[1]) +
              "/1000 at " + p.name + ", " + fmt("%.1f s", secs)};
}

// ---- 3

double signed_torus(Torus t) { return static_cast<double>(static_cast<std::int64_t>(t)) / 0x1p64; }

double stddev(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Outcome noise_refresh(const KeySet& keys) {
  const TfheParams& p = keys.params;
  const FftPlan plan = build_plan(p.poly_degree);
  std::vector<std::uint64_t> identity(p.message_space());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  const LookupTable lut = encode_lut(identity, p);
  Prng rng(seed_from_u64(303));
  std::vector<double> in_fresh, in_acc, out_fresh, out_acc;
  for (std::size_t s = 0; s < kNoiseSamples; ++s) {
    const std::uint64_t m = rng.next_u64() % p.message_space();
    const LweCiphertext fresh = encrypt(m, keys.secret, p, rng);
    LweCiphertext acc = encrypt(m, keys.secret, p, rng);
    for (std::size_t j = 0; j < kAccumulations; ++j)
      acc = lwe_add(acc, encrypt(0, keys.secret, p, rng));
    const Torus want = encode_message(m, p);
    in_fresh.push_back(signed_torus(phase(fresh, keys.secret) - want));
    in_acc.push_back(signed_torus(phase(acc, keys.secret) - want));
    out_fresh.push_back(signed_torus(phase(pbs(fresh, lut, keys, plan), keys.secret) - want));
    out_acc.push_back(signed_torus(phase(pbs(acc, lut, keys, plan), keys.secret) - want));
  }
  const double sf = stddev(out_fresh), sa = stddev(out_acc);
  const double rel = std::abs(sa - sf) / sf;
  return {rel < kNoiseRelTol,
          fmt("input std %.3g vs %.3g; output std %.4g vs %.4g", stddev(in_fresh), stddev(in_acc),
              sf, sa) +
              fmt(" (rel diff %.2f%%)", 100 * rel)};
}

// ---- 4

Outcome pass_preservation(const KeySet& keys) {
  const TfheParams& p = keys.params;
  const FftPlan plan = build_plan(p.poly_degree);
  const std::uint64_t space = p.message_space();
  Prng gen(seed_from_u64(404));
  std::size_t identical = 0, oracle = 0, max_nodes = 0;
  for (std::size_t i = 0; i < kRandomPrograms; ++i) {
    const ProgramGraph g = parse_program(testing::random_program(gen, kMaxProgramNodes - 1, space));
    max_nodes = std::max(max_nodes, g.nodes.size());
    PlainValues plain;
    CipherValues enc;
    Prng rng(seed_from_u64(4040 + i));
    for (auto idx : g.inputs()) {
      const ProgramNode& n = g.nodes[idx];
      for (std::size_t e = 0; e < n.elements(); ++e) {
        const std::uint64_t v = rng.next_u64() % space;
        plain[n.id].push_back(v);
        enc[n.id].push_back(encrypt(v, keys.secret, p, rng));
      }
    }
    const LoweredGraph base = lower(g);
    const LoweredGraph variants[] = {base, ks_dedup(base).graph, acc_dedup(base).graph,
                                     acc_dedup(ks_dedup(base).graph).graph};
    std::vector<PlainValues> decrypted;
    for (const auto& lg : variants) {
      PlainValues d;
      for (const auto& [id, cts] : execute(lg, g, keys, enc, plan))
        for (const auto& ct : cts) d[id].push_back(decrypt(ct, keys.secret, p));
      decrypted.push_back(std::move(d));
    }
    if (std::all_of(decrypted.begin(), decrypted.end(),
                    [&](const PlainValues& d) { return d == decrypted[0]; }))
      ++identical;
    if (decrypted[0] == interpret(g, plain, space)) ++oracle;
  }
  return {identical == kRandomPrograms && max_nodes <= kMaxProgramNodes,
          std::to_string(identical) + "/" + std::to_string(kRandomPrograms) +
              " programs identical across pass settings (" + std::to_string(oracle) +
              " also equal the interpreter), largest " + std::to_string(max_nodes) + " nodes"};
}

// ---- 5

// Structural bounds read straight off the program: a KS per distinct lut
// operand element and an accumulator per distinct table content survive.
struct Bounds {
  std::size_t lut_elements = 0;
  std::size_t distinct_operands = 0;
  std::size_t distinct_tables = 0;
};

Bounds structural_bounds(const ProgramGraph& g) {
  Bounds b;
  std::set<std::pair<std::size_t, std::size_t>> operands;
  std::set<std::vector<std::int64_t>> contents;
  for (const auto& n : g.nodes) {
    if (n.op != OpKind::lut) continue;
    const std::size_t src = n.operands.at(0);
    for (std::size_t e = 0; e < n.elements(); ++e) operands.insert({src, e});
    b.lut_elements += n.elements();
    contents.insert(g.tables.at(n.table));
  }
  b.distinct_operands = operands.size();
  b.distinct_tables = contents.size();
  return b;
}

Outcome dedup_counting() {
  bool ok = true;
  std::string detail;
  for (std::size_t m = 2; m <= 8; ++m) {
    const LoweredGraph base = lower(parse_program(testing::fanout_program(m, 3)));
    const DedupStats s = ks_dedup(base).stats;
    // Reduction (before - after) / before == (m-1)/m, checked in integers.
    ok = ok && s.ks_before == 3 * m && (s.ks_before - s.ks_after) * m == (m - 1) * s.ks_before;
  }
  detail += "fanout 2..8 exact";
  const ProgramGraph tm = load_program(fs::path(MBTFHE_SOURCE_DIR) / "programs/tensor_map64.json");
  const DedupStats a = acc_dedup(lower(tm)).stats;
  ok = ok && a.acc_before == 64 && a.acc_after == 1;
  detail += "; tensor map " + std::to_string(a.acc_before) + "->" + std::to_string(a.acc_after) +
            fmt(" (%.4f)", a.acc_reduction());

  Prng gen(seed_from_u64(505));
  std::size_t within = 0;
  for (int i = 0; i < 200; ++i) {
    const ProgramGraph g = parse_program(testing::random_program(gen, 40, 8));
    const Bounds b = structural_bounds(g);
    const LoweredGraph base = lower(g);
    const DedupStats s = dedup_stats(base, acc_dedup(ks_dedup(base).graph).graph);
    const bool ks_ok = s.ks_before == b.lut_elements && s.ks_after >= b.distinct_operands;
    const bool acc_ok = s.acc_before == b.lut_elements && s.acc_after >= b.distinct_tables;
    if (ks_ok && acc_ok) ++within;
  }
  ok = ok && within == 200;
  detail += "; " + std::to_string(within) + "/200 random programs within structural bounds";
  return {ok, detail};
}

// ---- 6

Outcome cycle_balance() {
  TfheParams p;
  p.n = 630;
  p.poly_degree = 2048;
  p.k = 1;
  p.pbs_gadget = {10, 2};
  const MachineConfig m;
  const IterationCosts ic = iteration_costs(p, m);
  // (k+1) d N/2 / 256 and (k+1)^2 d N/2 / 512.
  const std::uint64_t fft = (1 + 1) * 2 * (2048 / 2) / 256;
  const std::uint64_t mac = (1 + 1) * (1 + 1) * 2 * (2048 / 2) / 512;
  return {ic.fft == fft && ic.mac == mac && ic.fft == 16 && ic.mac == 16,
          "fft " + std::to_string(ic.fft) + " mac " + std::to_string(ic.mac) + " cycles/iteration"};
}

PerfReport run(const LoweredGraph& lg, const TfheParams& p, const MachineConfig& m) {
  return simulate(workload_from_schedule(schedule(lg, m.schedule_options()), lg), p, m);
}

// ---- 7

Outcome bandwidth_trends() {
  const TfheParams p = load_params("gpt2");
  std::vector<Demand> d;
  for (std::size_t c : {2, 8}) {
    MachineConfig m;
    m.clusters = c;
    // One table, so per-cluster LUT fetches do not depend on table placement.
    d.push_back(run(synthetic_lut_workload(c * 12 * 8, 1), p, m).peak_demand);
  }
  const double ct_scale = d[1].ciphertexts() / d[0].ciphertexts();
  const bool keys_const = d[0].keys() == d[1].keys();
  const bool ct_ok = std::abs(ct_scale - 4.0) <= 4.0 * kTrafficScaleTol;
  const bool budget_ok = d[1].total() <= MachineConfig{}.hbm_bandwidth_bytes_per_cycle;

  const auto pts = sweep(SweepKind::round_robin, {1, 16, 1}, synthetic_lut_workload(960, 4), p, {});
  double best = 0;
  std::uint64_t knee = 0;
  for (const auto& pt : pts)
    if (pt.throughput > best) best = pt.throughput, knee = pt.value;
  const double at12 = pts[11].throughput;
  bool growing = true;
  for (std::size_t i = 12; i < pts.size(); ++i)
    growing = growing && pts[i].report.acc_buffer_required > pts[i - 1].report.acc_buffer_required;
  const bool plateau = at12 >= kPlateauFraction * best;
  return {keys_const && ct_ok && budget_ok && plateau && growing,
          fmt("keys %.1f -> %.1f B/cyc, ciphertexts x%.3f, demand at 8 clusters %.1f B/cyc",
              d[0].keys(), d[1].keys(), ct_scale, d[1].total()) +
              fmt("; rr=12 at %.2f%% of best (best rr=%.0f), buffer grows past 12",
                  100 * at12 / best, static_cast<double>(knee))};
}

// ---- 8

Outcome buffer_knee() {
  const TfheParams p = load_params("gpt2");
  const std::uint64_t req = acc_buffer_requirement(p, 12);
  const std::uint64_t step_kib = MachineConfig{}.swap_granule_bytes / 1024;
  const std::uint64_t req_kib = req / 1024;
  const auto pts = sweep(SweepKind::acc_buffer, {req_kib - 8 * step_kib, req_kib + 4 * step_kib, step_kib},
                         synthetic_lut_workload(48 * 8, 4), p, {});
  bool zero_above = true, monotone = true;
  double near_util = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const PerfReport& r = pts[i].report;
    if (pts[i].value * 1024 >= req) {
      zero_above = zero_above && r.stall_buffer_swap == 0;
    } else {
      monotone = monotone && r.total_cycles > pts[i + 1].report.total_cycles;
      if (pts[i].value == req_kib - step_kib) near_util = r.pipeline_utilization;
    }
  }
  return {zero_above && monotone && near_util > kNearMissUtilization,
          fmt("requirement %.0f KiB; zero swap stalls at or above; utilization %.2f%% one "
              "granule below; runtime rises as the buffer shrinks",
              static_cast<double>(req_kib), 100 * near_util)};
}

// ---- 9

Outcome xpu_comparison() {
  const TfheParams p = load_params("gpt2");
  const MachineConfig m;
  const LoweredGraph lg = synthetic_lut_workload(960, 4);
  const Workload w = workload_from_schedule(schedule(lg, m.schedule_options()), lg);
  const PerfReport t = simulate(w, p, m);
  const PerfReport x = simulate_xpu(w, p, XpuConfig{}, m);
  const double ratio = static_cast<double>(x.total_cycles) / static_cast<double>(t.total_cycles);
  return {ratio >= kXpuLow && ratio <= kXpuHigh && x.bsk_macs == t.bsk_macs,
          fmt("speedup %.2fx; ", ratio) + "MACs " + std::to_string(t.bsk_macs) + " vs " +
              std::to_string(x.bsk_macs)};
}

// ---- 10

Outcome grouped_sync() {
  const TfheParams p = load_params("gpt2");
  const LoweredGraph lg = synthetic_lut_workload(960, 4);
  MachineConfig full;
  MachineConfig grouped;
  grouped.sync = SyncMode::grouped;
  const PerfReport a = run(lg, p, full);
  const PerfReport b = run(lg, p, grouped);
  const double gain = (static_cast<double>(a.total_cycles) - static_cast<double>(b.total_cycles)) /
                      static_cast<double>(a.total_cycles);
  const double peak = b.peak_demand.total() / a.peak_demand.total();
  return {gain < kGroupedMaxGain && peak >= kGroupedMinPeak,
          fmt("runtime change %+.2f%% (improvement must stay < 5%%), peak demand %.1f -> %.1f "
              "B/cyc (x%.2f)",
              -100 * gain, a.peak_demand.total(), b.peak_demand.total(), peak)};
}

// ---- 11

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const fs::path work = fs::path(MBTFHE_WORK_DIR) / "acceptance_cli";
  fs::remove_all(work);
  const std::string cli = MBTFHE_CLI_PATH;
  const std::string progs = std::string(MBTFHE_SOURCE_DIR) + "/programs";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"keygen", "keygen --params desk-tiny"},
      {"compile", "compile " + progs + "/lut_dense.json --emit schedule"},
      {"run-func", "run-func " + progs + "/relu_affine.json --params desk-tiny"},
      {"run-perf", "run-perf " + progs + "/lut_dense.json --params gpt2 --xpu"},
      {"simulate", "simulate SCHEDULE --params gpt2"},
      {"sweep", "sweep --kind rr --range 1:16 --params gpt2"},
      {"dedup-report", "dedup-report " + progs + "/fanout3.json"},
  };
  std::size_t same = 0;
  std::string bad;
  for (const auto& [name, args] : commands) {
    bool equal = true;
    for (const char* run : {"a", "b"}) {
      const fs::path dir = work / run / name;
      fs::create_directories(dir);
      std::string line = args;
      const auto pos = line.find("SCHEDULE");
      if (pos != std::string::npos)
        line.replace(pos, 8, (work / run / "compile" / "lut_dense.schedule.json").string());
      const std::string cmd = "\"" + cli + "\" --seed 77 --out \"" + dir.string() + "\" " + line +
                              " > \"" + (work / run / (name + ".stdout")).string() + "\" 2>&1";
      if (std::system(cmd.c_str()) != 0) equal = false;
    }
    // stdout names the output directory, so only the files are compared.
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(work / "a" / name)) {
      if (!e.is_regular_file()) continue;
      ++files;
      const fs::path rel = fs::relative(e.path(), work / "a" / name);
      if (slurp(e.path()) != slurp(work / "b" / name / rel)) equal = false;
    }
    if (files == 0) equal = false;
    if (equal) ++same;
    else bad += " " + name;
  }
  return {same == commands.size(),
          std::to_string(same) + "/" + std::to_string(commands.size()) +
              " subcommands byte-identical across two runs" + (bad.empty() ? "" : ";" + bad)};
}

}  // namespace

int main() {
  const TfheParams w3 = load_params("desk-w3");
  const TfheParams tiny = load_params("desk-tiny");
  const KeySet keys_w3 = keygen(w3, seed_from_u64(2026));
  const KeySet keys_tiny = keygen(tiny, seed_from_u64(2027));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"negacyclic multiplication oracle", negacyclic_oracle},
      {"end-to-end PBS correctness", [&] { return pbs_correctness(keys_w3); }},
      {"noise refresh", [&] { return noise_refresh(keys_w3); }},
      {"pass semantic preservation", [&] { return pass_preservation(keys_tiny); }},
      {"dedup counting", dedup_counting},
      {"cycle-model balance", cycle_balance},
      {"bandwidth trends", bandwidth_trends},
      {"accumulator buffer knee", buffer_knee},
      {"speedup over systolic baseline", xpu_comparison},
      {"synchronization study", grouped_sync},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failures;
}
