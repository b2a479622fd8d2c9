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
// Forward-and-inverse oracle machinery: the ternary purified
// permutation-function oracle spfo, pf_{L,R} states, the partial
// path-recording oracle W as a streaming map, the symmetric V backend of
// the two-ancilla coherent-measurement procedure, and the Compress bridge
// between the dense P (x) F register and relation-pair states.

#ifndef PRULAB_ORACLE_STRONG_HPP
#define PRULAB_ORACLE_STRONG_HPP

#include "oracle_std.hpp"
#include "truncated.hpp"

namespace prulab {

/// |pf_{L,R}> as a dense vector over P (x) F with ternary phases,
/// index (pi-rank) * 3^N + f. Unit norm when L u R is bijective.
CVector build_pf3(const Relation& left, const Relation& right);

/// |0^{n+m}>_AB (x) |pf_{empty,empty}> as a perm-func (q = 3) state.
PurifiedState spfo_initial_state(int N, int anc_qubits);

/// Controlled P_pi F_f with omega_3 phases; forward or inverse.
PurifiedState spfo_query(const PurifiedState& s, bool inverse);

/// All (L, R) with L u R bijective and |L| + |R| <= max_total, in
/// deterministic order.
std::vector<std::pair<Relation, Relation>> enumerate_dist_pairs(int N, int max_total);

/// Compress = sum_{(L,R)} |L>|R><pf_{L,R}| applied to a perm-func (q = 3)
/// state; output keys are relation pairs. N <= 4.
PurifiedState compress_strong(const PurifiedState& s, int max_total);

/// Compress^dag: lifts a relation-pair state back into the dense
/// P (x) F register.
PurifiedState compress_strong_adjoint(const PurifiedState& s);

/// Bridge between a relation-pair state and truncated-basis coordinates:
/// a matrix of shape (basis dim) x 2^m whose columns are the ancilla
/// slices.
CMatrix pair_state_to_coords(const TruncatedBasis& basis, const PurifiedState& s);
PurifiedState coords_to_pair_state(const TruncatedBasis& basis, const CMatrix& coords,
                                   int anc_qubits);

/// Applies a truncated operator to every ancilla slice of a relation-pair
/// state.
PurifiedState apply_truncated(const TruncatedOperator& op, const PurifiedState& s);
PurifiedState apply_linop(const TruncatedBasis& basis, const LinOp& op,
                          const PurifiedState& s);

/// Streaming partial path-recording query: W = W^L + W^{R,dag} (forward)
/// or its adjoint (inverse). Keys must have bijective unions.
PurifiedState w_query(const PurifiedState& s, bool inverse);

/// Pi-tilde^{D(W)} / Pi-tilde^{I(W)} = Compress^dag Pi Compress applied to
/// a perm-func (q = 3) state; `domain` selects D(W) vs I(W). The projector
/// is evaluated through the truncated basis at record cap `max_total`.
PurifiedState spfo_projected(const PurifiedState& s, const TruncatedBasis& basis,
                             const TruncatedOperator& projector, int max_total);

/// The Appendix-A forward/inverse procedure for the symmetric V: coherent
/// image measurements on the record registers, a controlled branch, and a
/// post-selected second ancilla.
class SymVBackend {
 public:
  explicit SymVBackend(const TruncatedBasis& basis);

  struct Result {
    PurifiedState state{KeyKind::relation_pair, 2, 0, 3};  // post-selected output
    double abort_prob = 0.0;  // squared norm removed by the post-selection
    double reset_defect = 0.0;  // residual of the final flag-reset measurement
  };
  Result query(const PurifiedState& s, bool inverse) const;

  /// Squared norm of the Pi^{I(V^L)} (or Pi^{I(V^R)}) component: the
  /// coherent-measurement flag statistic.
  double image_flag_weight(const PurifiedState& s, Side side) const;

  const TruncatedBasis& basis() const { return *basis_; }
  const TruncatedOperator& vl() const { return vl_; }
  const TruncatedOperator& vr() const { return vr_; }

 private:
  const TruncatedBasis* basis_;
  TruncatedOperator vl_, vr_, pil_, pir_;
};

}  // namespace prulab

#endif
