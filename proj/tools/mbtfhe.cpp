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

// mbtfhe command-line tool.
//
// Exit status: 0 on success, 1 when an oracle comparison fails or a program
// has error diagnostics, 2 on usage, input or I/O errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mbtfhe/exec.hpp"
#include "mbtfhe/fft.hpp"
#include "mbtfhe/ir.hpp"
#include "mbtfhe/params.hpp"
#include "mbtfhe/perfsim.hpp"
#include "mbtfhe/rng.hpp"
#include "mbtfhe/serialize.hpp"
#include "mbtfhe/tfhe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mbtfhe;

namespace {

struct Common {
  std::string seed = "0";
  std::string params = "desk-w3";
  std::string out = ".";
};

struct PassFlags {
  bool no_ks = false;
  bool no_acc = false;
};

struct MachineFlags {
  std::string machine;
  std::optional<std::size_t> clusters;
  std::optional<std::size_t> round_robin;
  std::string sync;
};

// Resolves --out: a path with an extension names the file itself, anything
// else is a directory that receives `default_name`.
fs::path output_path(const std::string& out, const std::string& default_name) {
  fs::path p(out);
  if (p.has_extension()) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }
  fs::create_directories(p);
  return p / default_name;
}

fs::path sibling(const fs::path& primary, const std::string& name) {
  return primary.has_parent_path() ? primary.parent_path() / name : fs::path(name);
}

void write(const fs::path& path, const std::string& bytes) {
  write_file_atomic(path, bytes);
  std::cout << "wrote " << path.string() << "\n";
}

LoweredGraph compile_graph(const ProgramGraph& g, const PassFlags& f) {
  LoweredGraph lg = lower(g);
  if (!f.no_ks) lg = ks_dedup(lg).graph;
  if (!f.no_acc) lg = acc_dedup(lg).graph;
  return lg;
}

MachineConfig load_machine_flags(const MachineFlags& f, XpuConfig& x) {
  MachineConfig m;
  fs::path path = f.machine;
  if (path.empty()) {
    fs::path dflt = config_dir() / "machine" / "default.cfg";
    if (fs::exists(dflt)) path = dflt;
  }
  if (!path.empty()) {
    if (!fs::exists(path)) throw std::invalid_argument("machine config not found: " + path.string());
    load_machine(path, m, x);
  }
  if (f.clusters) m.clusters = *f.clusters;
  if (f.round_robin) m.round_robin = *f.round_robin;
  if (!f.sync.empty()) m.sync = sync_mode_from_string(f.sync);
  m.validate();
  return m;
}

void add_pass_flags(CLI::App* cmd, PassFlags& f) {
  cmd->add_flag("--no-ks-dedup", f.no_ks, "Skip key-switch deduplication");
  cmd->add_flag("--no-acc-dedup", f.no_acc, "Skip accumulator deduplication");
}

void add_machine_flags(CLI::App* cmd, MachineFlags& f) {
  cmd->add_option("--machine", f.machine, "Machine config (key=value file)");
  cmd->add_option("--clusters", f.clusters, "Override cluster count");
  cmd->add_option("--rr", f.round_robin, "Override round-robin ciphertexts per cluster");
  cmd->add_option("--sync", f.sync, "Synchronization: full or grouped")
      ->check(CLI::IsMember({"full", "grouped"}));
}

// ---- compile

int cmd_compile(const Common& c, const std::string& program, const PassFlags& passes,
                const MachineFlags& mf, const std::string& emit) {
  const ProgramGraph g = load_program(program);
  const LoweredGraph base = lower(g);
  const LoweredGraph lg = compile_graph(g, passes);
  const std::string stem = fs::path(program).stem().string();
  if (emit == "stats") {
    write(output_path(c.out, stem + ".stats.json"),
          stats_to_json(dedup_stats(base, lg), !passes.no_ks, !passes.no_acc));
  } else if (emit == "lowered") {
    write(output_path(c.out, stem + ".lowered.json"), lowered_to_json(lg));
  } else {
    XpuConfig x;
    const MachineConfig m = load_machine_flags(mf, x);
    write(output_path(c.out, stem + ".schedule.json"),
          schedule_to_json(schedule(lg, m.schedule_options()), lg));
  }
  return 0;
}

// ---- run-func

std::string spectra_csv(const TorusPolynomial& poly) {
  const FftPlan plan = build_plan(poly.degree());
  std::ostringstream o;
  o << std::setprecision(17);
  o << "mode,limb,index,re,im\n";
  for (FftMode mode : {FftMode::reference, FftMode::fixed48}) {
    const TorusSpectrum s = forward_fft(poly, plan, mode, limb_bits_for(mode, poly.degree(), 1));
    for (std::size_t l = 0; l < s.limbs.size(); ++l)
      for (std::size_t i = 0; i < s.limbs[l].size(); ++i) {
        const auto v = s.limbs[l].value(i);
        o << to_string(mode) << ',' << l << ',' << i << ',' << v.real() << ',' << v.imag() << '\n';
      }
  }
  return o.str();
}

int cmd_run_func(const Common& c, const std::string& program, const PassFlags& passes,
                 const std::string& inputs_path, const std::string& keys_path,
                 const std::string& fft_mode, const std::string& spectra_path) {
  const TfheParams params = load_params(c.params);
  const Seed seed = seed_from_string(c.seed);
  const std::uint64_t p = params.message_space();
  const FftMode mode = fft_mode_from_string(fft_mode);
  const ProgramGraph g = load_program(program);

  json diag = json::array();
  bool errors = false;
  for (const auto& d : check_program(g, p)) {
    const bool is_error = d.level == Diagnostic::Level::error;
    errors = errors || is_error;
    diag.push_back({{"level", is_error ? "error" : "warning"}, {"message", d.message}});
    std::cerr << (is_error ? "error: " : "warning: ") << d.message << "\n";
  }
  const fs::path results_file = output_path(c.out, "results.json");
  json doc{{"version", 1},
           {"program", fs::path(program).filename().string()},
           {"params", params.name},
           {"seed", seed_to_hex(seed)},
           {"fft_mode", to_string(mode)},
           {"ks_dedup", !passes.no_ks},
           {"acc_dedup", !passes.no_acc},
           {"diagnostics", diag}};
  if (errors) {
    doc["outputs"] = json::object();
    doc["match"] = false;
    write(results_file, doc.dump(2) + "\n");
    return 1;
  }

  // Inputs: from a file, or drawn from each input's declared range.
  PlainValues inputs;
  json given = json::object();
  if (!inputs_path.empty()) {
    std::ifstream in(inputs_path);
    if (!in) throw std::runtime_error("cannot read inputs file " + inputs_path);
    try {
      given = json::parse(in);
    } catch (const json::exception& e) {
      throw std::invalid_argument("malformed inputs file: " + std::string(e.what()));
    }
  }
  Prng rng(seed, 1);
  for (auto i : g.inputs()) {
    const ProgramNode& n = g.nodes[i];
    std::vector<std::uint64_t> v;
    if (given.contains(n.id)) {
      v = given[n.id].get<std::vector<std::uint64_t>>();
      if (v.size() != n.elements())
        throw std::invalid_argument("input '" + n.id + "' needs " + std::to_string(n.elements()) +
                                    " values");
      for (auto x : v)
        if (x >= p) throw std::invalid_argument("input '" + n.id + "' value out of range");
    } else {
      std::uint64_t lo = 0, hi = p - 1;
      if (n.range.size() == 2) {
        lo = static_cast<std::uint64_t>(std::max<std::int64_t>(n.range[0], 0));
        hi = static_cast<std::uint64_t>(std::min<std::int64_t>(n.range[1], p - 1));
      }
      for (std::size_t e = 0; e < n.elements(); ++e) v.push_back(lo + rng.next_u64() % (hi - lo + 1));
    }
    inputs[n.id] = v;
  }

  KeySet keys;
  if (!keys_path.empty()) {
    keys = decode_keyset(read_words(keys_path), params, mode);
  } else {
    keys = keygen(params, seed, mode);
  }
  const FftPlan plan = build_plan(params.poly_degree);
  const LoweredGraph lg = compile_graph(g, passes);

  if (!spectra_path.empty()) {
    // Spectrum of the first accumulator in the registry.
    TorusPolynomial poly(params.poly_degree);
    if (!lg.acc_registry.empty()) {
      std::vector<std::uint64_t> entries;
      for (auto e : lg.acc_registry.front().entries) entries.push_back(static_cast<std::uint64_t>(e));
      poly = encode_lut(entries, params).encoded.body;
    }
    write(spectra_path, spectra_csv(poly));
  }

  CipherValues enc;
  Prng erng(seed, 2);
  for (const auto& [id, vals] : inputs)
    for (auto v : vals) enc[id].push_back(encrypt(v, keys.secret, params, erng));
  const CipherValues out = execute(lg, g, keys, enc, plan, mode);
  const PlainValues expected = interpret(g, inputs, p);

  json outs = json::object();
  bool all = true;
  for (const auto& [id, want] : expected) {
    std::vector<std::uint64_t> got;
    for (const auto& ct : out.at(id)) got.push_back(decrypt(ct, keys.secret, params));
    const bool match = got == want;
    all = all && match;
    outs[id] = {{"expected", want}, {"actual", got}, {"match", match}};
  }
  json in_doc = json::object();
  for (const auto& [id, v] : inputs) in_doc[id] = v;
  doc["inputs"] = in_doc;
  doc["outputs"] = outs;
  doc["match"] = all;
  write(results_file, doc.dump(2) + "\n");
  std::cout << (all ? "all outputs match" : "MISMATCH") << "\n";
  return all ? 0 : 1;
}

// ---- run-perf, simulate, sweep

LoweredGraph perf_workload(const std::string& program, std::size_t synthetic, std::size_t tables,
                           const PassFlags& passes) {
  if (!program.empty()) return compile_graph(load_program(program), passes);
  return synthetic_lut_workload(synthetic, tables);
}

std::string per_cluster_csv(const PerfReport& r) {
  std::ostringstream o;
  o << "unit,busy,idle,utilization\n";
  for (const auto& v : {r.units, r.cluster_units})
    for (const auto& u : v) o << u.name << ',' << u.busy << ',' << u.idle << ',' << u.utilization << '\n';
  return o.str();
}

int cmd_run_perf(const Common& c, const std::string& program, std::size_t synthetic,
                 std::size_t tables, const PassFlags& passes, const MachineFlags& mf, bool xpu) {
  const TfheParams params = load_params(c.params);
  XpuConfig x;
  const MachineConfig m = load_machine_flags(mf, x);
  const LoweredGraph lg = perf_workload(program, synthetic, tables, passes);
  const Workload w = workload_from_schedule(schedule(lg, m.schedule_options()), lg);
  const PerfReport r = simulate(w, params, m);
  const fs::path report = output_path(c.out, "report.json");
  write(report, report_to_json(r));
  write(sibling(report, "trace.csv"), trace_to_csv(r));
  write(sibling(report, "units.csv"), per_cluster_csv(r));
  std::cout << "cluster: " << r.total_cycles << " cycles (" << std::fixed << std::setprecision(3)
            << r.wall_ms << " ms), " << r.ciphertexts << " blind rotations, peak demand "
            << std::setprecision(1) << r.peak_demand.total() << " B/cycle\n";
  if (xpu) {
    const PerfReport rx = simulate_xpu(w, params, x, m);
    write(sibling(report, "xpu_report.json"), report_to_json(rx));
    std::cout << "xpu: " << rx.total_cycles << " cycles, speedup " << std::setprecision(2)
              << static_cast<double>(rx.total_cycles) / static_cast<double>(r.total_cycles) << "x\n";
  }
  return 0;
}

int cmd_simulate(const Common& c, const std::string& schedule_path, const MachineFlags& mf,
                 bool xpu) {
  const TfheParams params = load_params(c.params);
  XpuConfig x;
  MachineFlags flags = mf;
  std::ifstream in(schedule_path);
  if (!in) throw std::runtime_error("cannot read schedule " + schedule_path);
  std::stringstream ss;
  ss << in.rdbuf();
  const Workload w = workload_from_schedule_json(ss.str());
  if (!flags.clusters) flags.clusters = w.clusters;
  const MachineConfig m = load_machine_flags(flags, x);
  const PerfReport r = xpu ? simulate_xpu(w, params, x, m) : simulate(w, params, m);
  const fs::path report = output_path(c.out, "report.json");
  write(report, report_to_json(r));
  write(sibling(report, report.stem().string() + ".trace.csv"), trace_to_csv(r));
  std::cout << r.model << ": " << r.total_cycles << " cycles\n";
  return 0;
}

int cmd_sweep(const Common& c, const std::string& kind_text, const std::string& range_text,
              const std::string& program, std::size_t synthetic, std::size_t tables,
              const PassFlags& passes, const MachineFlags& mf) {
  const TfheParams params = load_params(c.params);
  XpuConfig x;
  const MachineConfig m = load_machine_flags(mf, x);
  const SweepKind kind = sweep_kind_from_string(kind_text);
  const SweepRange range = parse_range(range_text);
  const LoweredGraph lg = perf_workload(program, synthetic, tables, passes);
  const auto points = sweep(kind, range, lg, params, m);
  write(output_path(c.out, "series.csv"), sweep_to_csv(kind, points));
  return 0;
}

// ---- dedup-report

int cmd_dedup_report(const Common& c, const std::string& program, const PassFlags& passes) {
  const ProgramGraph g = load_program(program);
  const LoweredGraph base = lower(g);
  const LoweredGraph after_ks = passes.no_ks ? base : ks_dedup(base).graph;
  const LoweredGraph after = passes.no_acc ? after_ks : acc_dedup(after_ks).graph;
  const DedupStats s = dedup_stats(base, after);
  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "pass,enabled,before,after,reduction_percent\n";
  o << "ks_dedup," << (passes.no_ks ? 0 : 1) << ',' << s.ks_before << ',' << s.ks_after << ','
    << 100.0 * s.ks_reduction() << '\n';
  o << "acc_dedup," << (passes.no_acc ? 0 : 1) << ',' << s.acc_before << ',' << s.acc_after << ','
    << 100.0 * s.acc_reduction() << '\n';
  std::cout << o.str();
  write(output_path(c.out, fs::path(program).stem().string() + ".dedup.csv"), o.str());
  return 0;
}

// ---- keygen

int cmd_keygen(const Common& c, const std::string& fft_mode) {
  const TfheParams params = load_params(c.params);
  const Seed seed = seed_from_string(c.seed);
  const KeySet keys = keygen(params, seed, fft_mode_from_string(fft_mode));
  const fs::path path = output_path(c.out, params.name + ".keys");
  const auto words = encode_keyset(keys);
  write_words(path, words);
  std::cout << "wrote " << path.string() << " (" << words.size() * 8 << " bytes, params "
            << params.name << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mbtfhe: TFHE functional model, dataflow compiler and accelerator simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Seed: decimal or 64 hex digits")->capture_default_str();
  app.add_option("--params", common.params, "Parameter preset name or .params path")
      ->capture_default_str();
  app.add_option("--out", common.out, "Output directory, or a file path for the main output")
      ->capture_default_str();
  app.footer("Presets are read from $MBTFHE_CONFIG_DIR (params/, machine/) when set.");

  std::string program, emit = "schedule", inputs_path, keys_path, fft_mode = "reference",
                       spectra, kind, range, schedule_path;
  std::size_t synthetic = 960, tables = 4;
  bool xpu = false;
  PassFlags passes;
  MachineFlags mf;

  auto* compile = app.add_subcommand("compile", "Lower, deduplicate and schedule a program");
  compile->add_option("program", program, "Program JSON")->required()->check(CLI::ExistingFile);
  add_pass_flags(compile, passes);
  add_machine_flags(compile, mf);
  compile->add_option("--emit", emit, "schedule, stats or lowered")
      ->check(CLI::IsMember({"schedule", "stats", "lowered"}));

  auto* run_func = app.add_subcommand("run-func", "Encrypt, evaluate and check against plaintext");
  run_func->add_option("program", program, "Program JSON")->required()->check(CLI::ExistingFile);
  add_pass_flags(run_func, passes);
  run_func->add_option("--inputs", inputs_path, "JSON object of input values")
      ->check(CLI::ExistingFile);
  run_func->add_option("--keys", keys_path, "Key file from keygen")->check(CLI::ExistingFile);
  run_func->add_option("--fft-mode", fft_mode, "reference or fixed48")
      ->check(CLI::IsMember({"reference", "fixed48"}));
  run_func->add_option("--dump-spectra", spectra, "Write the first accumulator's spectra as CSV");

  auto* run_perf = app.add_subcommand("run-perf", "Compile and simulate on the accelerator model");
  run_perf->add_option("program", program, "Program JSON (default: synthetic LUT workload)")
      ->check(CLI::ExistingFile);
  run_perf->add_option("--synthetic", synthetic, "Ciphertexts in the synthetic workload");
  run_perf->add_option("--tables", tables, "Distinct tables in the synthetic workload");
  run_perf->add_flag("--xpu", xpu, "Also simulate the systolic baseline");
  add_pass_flags(run_perf, passes);
  add_machine_flags(run_perf, mf);

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a compiled schedule");
  simulate_cmd->add_option("schedule", schedule_path, "Schedule JSON from compile")
      ->required()
      ->check(CLI::ExistingFile);
  simulate_cmd->add_flag("--xpu", xpu, "Use the systolic baseline");
  add_machine_flags(simulate_cmd, mf);

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one machine knob");
  sweep_cmd->add_option("--kind", kind, "clusters, rr or accbuf")
      ->required()
      ->check(CLI::IsMember({"clusters", "rr", "accbuf"}));
  sweep_cmd->add_option("--range", range, "a:b:step (accbuf in KiB)")->required();
  sweep_cmd->add_option("--program", program, "Program JSON (default: synthetic)")
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--synthetic", synthetic, "Ciphertexts in the synthetic workload");
  sweep_cmd->add_option("--tables", tables, "Distinct tables in the synthetic workload");
  add_pass_flags(sweep_cmd, passes);
  add_machine_flags(sweep_cmd, mf);

  auto* dedup = app.add_subcommand("dedup-report", "Before/after counts of both passes as CSV");
  dedup->add_option("program", program, "Program JSON")->required()->check(CLI::ExistingFile);
  add_pass_flags(dedup, passes);

  auto* keygen_cmd = app.add_subcommand("keygen", "Generate and save a key set");
  keygen_cmd->add_option("--fft-mode", fft_mode, "reference or fixed48")
      ->check(CLI::IsMember({"reference", "fixed48"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*compile) return cmd_compile(common, program, passes, mf, emit);
    if (*run_func)
      return cmd_run_func(common, program, passes, inputs_path, keys_path, fft_mode, spectra);
    if (*run_perf) return cmd_run_perf(common, program, synthetic, tables, passes, mf, xpu);
    if (*simulate_cmd) return cmd_simulate(common, schedule_path, mf, xpu);
    if (*sweep_cmd) return cmd_sweep(common, kind, range, program, synthetic, tables, passes, mf);
    if (*dedup) return cmd_dedup_report(common, program, passes);
    if (*keygen_cmd) return cmd_keygen(common, fft_mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
