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

#include "mbtfhe/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mbtfhe {

namespace {

constexpr std::uint64_t kKindKeySet = 1;
constexpr std::uint64_t kKindLweList = 2;

void put_header(std::vector<std::uint64_t>& w, const TfheParams& params, std::uint64_t kind) {
  w.push_back(kFileMagic);
  w.push_back(kFileVersion);
  w.push_back(params.hash());
  w.push_back(kind);
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint64_t>& w) : w_(w) {}
  std::uint64_t next() {
    if (pos_ >= w_.size()) throw std::runtime_error("truncated file");
    return w_[pos_++];
  }
  void expect_header(const TfheParams& params, std::uint64_t kind) {
    if (next() != kFileMagic) throw std::runtime_error("not an mbtfhe file");
    if (const auto v = next(); v != kFileVersion) {
      throw std::runtime_error("unsupported format version " + std::to_string(v));
    }
    if (next() != params.hash()) {
      throw std::runtime_error("file was written for different parameters than '" + params.name +
                               "'");
    }
    if (next() != kind) throw std::runtime_error("unexpected payload kind");
  }
  void expect_end() const {
    if (pos_ != w_.size()) throw std::runtime_error("trailing data in file");
  }

 private:
  const std::vector<std::uint64_t>& w_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint64_t> encode_keyset(const KeySet& keys) {
  std::vector<std::uint64_t> w;
  put_header(w, keys.params, kKindKeySet);
  for (auto b : keys.secret.short_key) w.push_back(static_cast<std::uint64_t>(b));
  for (auto b : keys.secret.long_key()) w.push_back(static_cast<std::uint64_t>(b));
  for (const auto& g : keys.bsk.ggsw) {
    for (const auto& row : g.rows) {
      for (std::size_t j = 0; j <= row.k(); ++j) {
        const auto c = row.poly(j).coeffs();
        w.insert(w.end(), c.begin(), c.end());
      }
    }
  }
  for (const auto& e : keys.ksk.table) {
    w.insert(w.end(), e.mask.begin(), e.mask.end());
    w.push_back(e.body);
  }
  return w;
}

KeySet decode_keyset(const std::vector<std::uint64_t>& words, const TfheParams& params,
                     FftMode mode) {
  Reader r(words);
  r.expect_header(params, kKindKeySet);
  KeySet ks;
  ks.params = params;
  const std::size_t n = params.poly_degree;
  ks.secret.short_key.resize(params.n);
  for (auto& b : ks.secret.short_key) b = static_cast<std::int64_t>(r.next());
  for (std::size_t j = 0; j < params.k; ++j) {
    IntPolynomial p(n);
    for (auto& c : p.coeffs()) c = static_cast<std::int64_t>(r.next());
    ks.secret.glwe_key.push_back(std::move(p));
  }
  const std::size_t rows = (params.k + 1) * params.pbs_gadget.depth;
  ks.bsk.ggsw.resize(params.n);
  for (auto& g : ks.bsk.ggsw) {
    g.rows.resize(rows);
    for (auto& row : g.rows) {
      row = GlweCiphertext::zeros(params.k, n);
      for (std::size_t j = 0; j <= params.k; ++j) {
        for (auto& c : row.poly(j).coeffs()) c = r.next();
      }
    }
  }
  ks.ksk.n_long = params.n_long();
  ks.ksk.depth = params.ks_gadget.depth;
  ks.ksk.table.resize(ks.ksk.n_long * ks.ksk.depth);
  for (auto& e : ks.ksk.table) {
    e.dim = LweDim::short_key;
    e.mask.resize(params.n);
    for (auto& m : e.mask) m = r.next();
    e.body = r.next();
  }
  r.expect_end();
  prepare_bsk(ks.bsk, params, build_plan(n), mode);
  return ks;
}

std::vector<std::uint64_t> encode_lwe_list(const std::vector<LweCiphertext>& cts,
                                           const TfheParams& params) {
  std::vector<std::uint64_t> w;
  put_header(w, params, kKindLweList);
  w.push_back(cts.size());
  for (const auto& c : cts) {
    w.push_back(c.dim == LweDim::long_key ? 1 : 0);
    w.push_back(c.mask.size());
    w.insert(w.end(), c.mask.begin(), c.mask.end());
    w.push_back(c.body);
  }
  return w;
}

std::vector<LweCiphertext> decode_lwe_list(const std::vector<std::uint64_t>& words,
                                           const TfheParams& params) {
  Reader r(words);
  r.expect_header(params, kKindLweList);
  std::vector<LweCiphertext> out(r.next());
  for (auto& c : out) {
    c.dim = r.next() == 1 ? LweDim::long_key : LweDim::short_key;
    const auto len = r.next();
    if (len != (c.dim == LweDim::long_key ? params.n_long() : params.n)) {
      throw std::runtime_error("ciphertext dimension does not match parameters");
    }
    c.mask.resize(len);
    for (auto& m : c.mask) m = r.next();
    c.body = r.next();
  }
  r.expect_end();
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_words(const std::filesystem::path& path, const std::vector<std::uint64_t>& words) {
  std::string bytes;
  bytes.resize(words.size() * 8);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((words[i] >> (8 * b)) & 0xff);
  }
  write_file_atomic(path, bytes);
}

std::vector<std::uint64_t> read_words(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() % 8 != 0) throw std::runtime_error(path.string() + " is not word aligned");
  std::vector<std::uint64_t> words(bytes.size() / 8);
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    words[i] = v;
  }
  return words;
}

}  // namespace mbtfhe
