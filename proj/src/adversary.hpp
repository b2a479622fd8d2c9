// Copyright 2026 The prulab developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Adversary programs and oracle runners producing the adversary's reduced
// density matrix under each oracle instantiation, with exact or
// Monte-Carlo ensemble averaging.

#ifndef PRULAB_ADVERSARY_HPP
#define PRULAB_ADVERSARY_HPP

#include <optional>

#include "oracle_strong.hpp"

namespace prulab {

/// Interleaving unitary: an explicit matrix or a seeded-Haar spec
/// materialized on demand.
struct GateSpec {
  bool seeded = true;
  uint64_t seed = 0;
  CMatrix matrix;  // explicit when !seeded
};

/// A t-query oracle adversary: unitaries A_1..A_t on A (x) B and
/// direction bits (false = forward). The system register has dimension
/// `sys_dim` (2^n for qubit systems, but any small dimension is allowed).
class AdversaryProgram {
 public:
  AdversaryProgram(int sys_dim, int anc_qubits, std::vector<GateSpec> gates,
                   std::vector<bool> dirs);

  /// t seeded-Haar gates with per-gate seeds derived from `seed`.
  static AdversaryProgram seeded(int sys_dim, int anc_qubits, int t, uint64_t seed,
                                 std::vector<bool> dirs = {});

  int sys_dim() const { return sys_dim_; }
  int anc_qubits() const { return anc_qubits_; }
  int queries() const { return static_cast<int>(gates_.size()); }
  bool forward_only() const;
  const std::vector<bool>& dirs() const { return dirs_; }
  long ab_dim() const { return static_cast<long>(sys_dim_) << anc_qubits_; }

  /// A_i as a dense (N * 2^m) unitary, i in [0, t).
  CMatrix gate(int i) const;

  /// {n, m, t, dirs, gates: [seed | matrix]}; requires a power-of-two
  /// system dimension.
  std::string to_json() const;
  static AdversaryProgram from_json(const std::string& text);

 private:
  int sys_dim_;
  int anc_qubits_;
  std::vector<GateSpec> gates_;
  std::vector<bool> dirs_;
};

enum class OracleKind {
  concrete_unitary,  // fixed U
  haar_mc,           // Monte-Carlo mean over Haar draws
  pf_exact,          // P_pi F_f C, exact over (pi, f) and the design
  spru_exact,        // D P_pi F_f C, exact over (pi, f) and design pairs
  pfo,               // purified permutation-function oracle (q = 2)
  spfo,              // ternary purified oracle, forward and inverse
  v_oracle,          // standard path-recording oracle
  v_symmetric,       // two-sided path-recording oracle
  v_restricted,      // S^inj-restricted path-recording oracle
  glued,             // layered sub-oracles on qubit blocks
};

struct GluedLayer {
  int offset_qubits = 0;  // qubits above the block (most significant side)
  int width_qubits = 0;
  bool haar = true;                  // else restricted path-recording
  std::optional<RestrictedSet> set;  // for the restricted backend
};

struct OracleSpec {
  OracleKind kind = OracleKind::concrete_unitary;
  CMatrix u;                          // concrete_unitary
  int mc_samples = 4096;              // haar_mc
  uint64_t seed = 0;                  // haar_mc / glued sampling
  std::optional<UnitaryEnsemble> design;  // pf_exact / spru_exact
  std::optional<RestrictedSet> set;       // v_restricted
  std::vector<GluedLayer> layers;         // glued
  int sys_qubits = 0;                     // glued total width

  static OracleSpec concrete(CMatrix u);
  static OracleSpec haar_mc_spec(int mc_samples, uint64_t seed);
  static OracleSpec pf(UnitaryEnsemble design);
  static OracleSpec spru(UnitaryEnsemble design);
  static OracleSpec purified_pfo();
  static OracleSpec purified_spfo();
  static OracleSpec path_recording();
  static OracleSpec path_recording_symmetric();
  static OracleSpec path_recording_restricted(RestrictedSet set);
  static OracleSpec glued_spec(int sys_qubits, std::vector<GluedLayer> layers,
                               int mc_samples, uint64_t seed);
};

struct RunResult {
  DensityMatrix rho;          // on A (x) B
  double trace = 0.0;         // trace of rho (norm^2 of the purification)
  int mc_samples = 0;         // 0 for exact runs
  double se_max_entry = 0.0;  // Monte-Carlo per-entry standard error (max)
  double se_trace = 0.0;      // standard-error proxy for trace-distance use
};

/// The adversary's reduced density matrix under the oracle. Deterministic
/// per (program, oracle, seed).
RunResult run(const AdversaryProgram& adv, const OracleSpec& oracle);

// --- Purified-state run drivers (exposed for the experiment suites) ---

/// |A_t^{V . G}> on relation keys; G defaults to identity.
PurifiedState v_run_state(const AdversaryProgram& adv, const CMatrix* g = nullptr);
PurifiedState v_restricted_run_state(const AdversaryProgram& adv,
                                     const RestrictedSet& set,
                                     const CMatrix* g = nullptr);
/// |A_t^{pfo . G}> on (pi, f) keys (q = 2).
PurifiedState pfo_run_state(const AdversaryProgram& adv, const CMatrix* g = nullptr);
/// |A_t^{(D spfo C)^{+-}}> on ternary (pi, f) keys for one (C, D) block.
PurifiedState spfo_run_state(const AdversaryProgram& adv, const CMatrix& c,
                             const CMatrix& d);
/// Twirled projected spfo block: forward queries insert Pi~^{D(W)}, inverse
/// queries insert Pi~^{I(W)}.
PurifiedState spfo_projected_run_state(const AdversaryProgram& adv, const CMatrix& c,
                                       const CMatrix& d, const TruncatedBasis& basis,
                                       const TruncatedOperator& pdw,
                                       const TruncatedOperator& piw);
/// |A_t^{W,(C,D)}> on relation-pair keys for one (C, D) block.
PurifiedState w_run_state(const AdversaryProgram& adv, const CMatrix& c,
                          const CMatrix& d);
/// |A_t^V> for the two-sided oracle, via the sparse symmetric V.
PurifiedState vsym_run_state(const AdversaryProgram& adv, const TruncatedBasis& basis,
                             const TruncatedOperator& v);

/// The Part-I hybrid chain rho_0..rho_5 with exact design averaging, plus
/// the measured residuals of the exact steps.
struct StandardHybridChain {
  std::vector<std::pair<std::string, DensityMatrix>> states;
  double purified_vs_standard = 0.0;  // max-entry |rho0 - rho1|
  double compress_residual = 0.0;     // max over C of the Compress pipeline identity
  double rightinv_residual = 0.0;     // max over C of the vector identity
};
StandardHybridChain run_hybrid_chain_standard(const AdversaryProgram& adv,
                                              const UnitaryEnsemble& design);

/// One (C, D) block of the strong chain: the twirled-W state, the twirled
/// projected spfo state, and their Compress defect.
struct StrongBlock {
  double compress_residual = 0.0;  // || |A^W> - Compress |A^spfo~> ||
  double w_norm2 = 0.0;
  DensityMatrix rho_w;     // reduction of the W block
  DensityMatrix rho_spfo;  // reduction of the plain spfo block
};
StrongBlock strong_block_run(const AdversaryProgram& adv, const CMatrix& c,
                             const CMatrix& d, const TruncatedBasis& basis,
                             const TruncatedOperator& pdw, const TruncatedOperator& piw);

/// Appendix-C gluing chain at block sizes (a1, a2, a3).
struct GluedChain {
  std::vector<std::pair<std::string, DensityMatrix>> states;  // rho1..rho5
  double uncompress_residual = 0.0;  // || Uncompress |A^rho4> - |A^rho3> ||
  double se_rho1 = 0.0, se_rho2 = 0.0, se_rho5 = 0.0;
};
GluedChain run_glued(const AdversaryProgram& adv, int a1, int a2, int a3,
                     int mc_samples, uint64_t seed);

/// The Uncompress partial isometry of the gluing proof: splits a single
/// record over A1 A2 A3 into the two overlapping records.
PurifiedState glue_uncompress(const PurifiedState& s, int a1, int a2, int a3);

/// Exact Haar mean of the adversary density for t = 2 forward queries to
/// a product of independent Haar blocks: the run is a degree-(2,2)
/// polynomial in each unitary, so the second-moment (Weingarten) formula
/// evaluates the average in closed form. Requires (N 2^m)^4 manageable.
DensityMatrix glued_haar_exact_rho(const AdversaryProgram& adv,
                                   const std::vector<BlockSpec>& layers);

}  // namespace prulab

#endif
