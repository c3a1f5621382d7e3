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

#ifndef MBTFHE_EXEC_HPP_
#define MBTFHE_EXEC_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mbtfhe/ir.hpp"
#include "mbtfhe/tfhe.hpp"

namespace mbtfhe {

using PlainValues = std::map<std::string, std::vector<std::uint64_t>>;
using CipherValues = std::map<std::string, std::vector<LweCiphertext>>;

struct Diagnostic {
  enum class Level { warning, error };
  Level level = Level::warning;
  std::string message;
};

// Static checks against message space p: table lengths and entries (errors),
// and intervals that may leave [0, p) before a lut or at an output (warnings,
// since the padding bit then changes what the lut returns).
std::vector<Diagnostic> check_program(const ProgramGraph& g, std::uint64_t p);

// Plaintext model of the encrypted evaluation. Values live mod 2p; a lut read
// at v >= p returns -table[v - p]; outputs are reduced mod p.
PlainValues interpret(const ProgramGraph& g, const PlainValues& inputs, std::uint64_t p);

// Runs the lowered graph on ciphertexts. Input and output maps are keyed by
// program node id.
CipherValues execute(const LoweredGraph& lg, const ProgramGraph& g, const KeySet& keys,
                     const CipherValues& inputs, const FftPlan& plan,
                     FftMode mode = FftMode::reference);

}  // namespace mbtfhe

#endif  // MBTFHE_EXEC_HPP_
