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
// Forward-query oracles: the purified permutation-function oracle pfo
// realized densely over P (x) F, the path-recording oracle V, Compress,
// the restricted oracle V(S^inj), and the procedural circuit backend.

#ifndef PRULAB_ORACLE_STD_HPP
#define PRULAB_ORACLE_STD_HPP

#include "pstate.hpp"

namespace prulab {

/// Placement of an oracle inside the system register: the system factors
/// as hi (x) blk (x) lo with the oracle acting on blk. Standard runs use
/// hi = lo = 1.
struct BlockSpec {
  int hi = 1;
  int blk = 0;
  int lo = 1;
};

inline BlockSpec whole_system(int sys_dim) { return {1, sys_dim, 1}; }

/// I_hi (x) u (x) I_lo (x) I_anc as a full system-register matrix.
CMatrix embed_block(const CMatrix& u, const BlockSpec& bs, int anc_qubits);

long pf_dim(int N, int q);

/// The pf-relation state |pf_R> as a dense vector over P (x) F, index
/// (pi-rank) * q^N + f. Defined for any multiset relation; unit norm only
/// when R is bijective. q = 2 uses (-1)^{f(x)} phases (forward-query
/// oracle family).
CVector build_pf(const Relation& r);

/// Ordered (pi, f) key list for the full P (x) F register.
std::vector<StateKey> pf_basis_keys(int N, int q);

/// |0^{n+m}>_AB (x) |pf_empty>_PF as a perm-func purified state.
PurifiedState pfo_initial_state(int N, int anc_qubits);

/// One forward query: controlled P_pi F_f on the system block.
PurifiedState pfo_query(const PurifiedState& s);

/// One forward query to the path-recording oracle V: every live key must
/// be an injective relation with |R| < N.
PurifiedState v_query(const PurifiedState& s, const BlockSpec& bs);
PurifiedState v_query(const PurifiedState& s);

/// S^inj-restricted path-recording query with normalization 1/sqrt(Z_{x,R}).
PurifiedState v_restricted_query(const PurifiedState& s, const RestrictedSet& set,
                                 const BlockSpec& bs);
PurifiedState v_restricted_query(const PurifiedState& s, const RestrictedSet& set);

/// Restricted query on one record of a relation-pair state (the other
/// record rides along); used by the glued-oracle chains where two
/// path-recording oracles own separate registers.
enum class PairSide { left, right };
PurifiedState v_restricted_pair_query(const PurifiedState& s, PairSide side,
                                      const RestrictedSet& set, const BlockSpec& bs);

/// Procedural realization of V: uniform rank superposition, in-place
/// rank-to-free-image bijection, sorted insert, then uncompute of (x, R)
/// from (y, R u {(x,y)}). Must agree with v_query on all inputs.
PurifiedState v_circuit_backend_query(const PurifiedState& s, const BlockSpec& bs);
PurifiedState v_circuit_backend_query(const PurifiedState& s);

/// Compress = sum_{R bijective} |R><pf_R| applied to a perm-func state;
/// output is a relation-keyed state. N <= 4.
PurifiedState compress(const PurifiedState& s);

/// Projects a perm-func state onto span{|pf_R> : R bijective, |R| = t}.
PurifiedState pf_dist_project(const PurifiedState& s, int t);

/// Distinct-subspace projector on the x slots of the relation register:
/// keeps exactly the keys whose x values are pairwise distinct.
PurifiedState dist_project_keys(const PurifiedState& s);

/// Flattens a relation-keyed state with uniform key size t into a dense
/// vector over (A (x) B) (x) (C^{N^2})^{(x) t}.
CVector expand_full(const PurifiedState& s, int t);

/// Applies g to the x coordinate of every recorded slot of the flattened
/// register layout produced by expand_full.
CVector apply_g_slots(const CVector& dense, int N, int t, long ab_dim,
                      const CMatrix& g);

}  // namespace prulab

#endif
