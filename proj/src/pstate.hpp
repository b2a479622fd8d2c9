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
// The global purified state across all oracle families: a sparse map from
// purification keys (a relation, a relation pair, or a (pi, f) index,
// optionally with 2-design indices) to amplitude vectors over the
// adversary registers A (x) B.

#ifndef PRULAB_PSTATE_HPP
#define PRULAB_PSTATE_HPP

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relations.hpp"

namespace prulab {

struct RelKey {
  Relation r;
  auto operator<=>(const RelKey&) const = default;
};

struct RelPairKey {
  Relation left;
  Relation right;
  auto operator<=>(const RelPairKey&) const = default;
};

struct PermFuncKey {
  int32_t perm = 0;   // lexicographic rank in Sym_N
  int64_t func = 0;   // f as a base-q integer, digit x = f(x)
  int32_t c = -1;     // optional 2-design indices (purified C, D registers)
  int32_t d = -1;
  auto operator<=>(const PermFuncKey&) const = default;
};

using StateKey = std::variant<RelKey, RelPairKey, PermFuncKey>;

enum class KeyKind { relation, relation_pair, perm_func, perm_func_design };

/// Value-semantic sparse purified state. Keys are present only while their
/// vector norm exceeds the prune threshold; total squared norm is 1 for
/// isometric histories and at most 1 otherwise.
class PurifiedState {
 public:
  /// `sys_dim` is the dimension N of the query register A, `anc_qubits`
  /// the ancilla width m; amplitude vectors have dim N * 2^m. `q` is the
  /// phase alphabet for perm-func kinds (2 or 3).
  PurifiedState(KeyKind kind, int sys_dim, int anc_qubits, int q = 2);

  KeyKind kind() const { return kind_; }
  int sys_dim() const { return sys_dim_; }
  int anc_qubits() const { return anc_qubits_; }
  int q() const { return q_; }
  long vec_dim() const { return static_cast<long>(sys_dim_) << anc_qubits_; }
  size_t key_count() const { return amps_.size(); }

  const std::map<StateKey, CVector>& amplitudes() const { return amps_; }
  const CVector* find(const StateKey& key) const;
  void set(const StateKey& key, CVector v);
  void add(const StateKey& key, const CVector& v);
  /// Returns the key's vector, inserting a zero vector if absent. For
  /// oracle kernels that scatter into many keys.
  CVector& at_or_zero(const StateKey& key);
  void scale(Complex factor);

  /// Drops keys whose squared vector norm falls below the threshold.
  void prune(double threshold = kPruneThreshold);

  double norm2() const;

  /// u applied blockwise to every key's vector; keys unchanged.
  PurifiedState apply_system_unitary(const CMatrix& u) const;

  /// rho_AB = sum_key v_key v_key^dag. Hermitian PSD by construction;
  /// trace equals norm2().
  DensityMatrix reduce_to_adversary() const;

  /// Flattens to a vector over basis (x) (A (x) B); every live key must
  /// appear in `basis`.
  CVector to_dense(const std::vector<StateKey>& basis) const;
  static PurifiedState from_dense(KeyKind kind, int sys_dim, int anc_qubits,
                                  int q, const std::vector<StateKey>& basis,
                                  const CVector& dense);

  /// Debug dump: JSON of {key, amplitude vector} records, keys in
  /// canonical order.
  std::string dump_json() const;

  static constexpr double kPruneThreshold = 1e-24;

 private:
  void check_key_kind(const StateKey& key) const;
  KeyKind kind_;
  int sys_dim_;
  int anc_qubits_;
  int q_;
  std::map<StateKey, CVector> amps_;
};

/// <s1|s2>; requires identical kind and register dims.
Complex inner_product(const PurifiedState& s1, const PurifiedState& s2);

/// || s1 - s2 ||_2, accumulated amplitude-wise over the key union. Exact
/// identities must use this rather than norms and inner products, which
/// cancel catastrophically near zero.
double state_diff_norm(const PurifiedState& s1, const PurifiedState& s2);

std::string key_to_string(const StateKey& key);

}  // namespace prulab

#endif
