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

#include <doctest.h>

#include "oracle_std.hpp"
#include "rng.hpp"

using namespace prulab;

namespace {

double state_distance(const PurifiedState& a, const PurifiedState& b) {
  return state_diff_norm(a, b);
}

// |x>_A (x) |pf_R> as a perm-func purified state (no ancilla).
PurifiedState pf_state_on(int N, const Relation& r, int x) {
  PurifiedState s(KeyKind::perm_func, N, 0, 2);
  CVector pf = build_pf(r);
  long qn = 1L << N;
  for (long rank = 0; rank < factorial(N); ++rank) {
    for (long f = 0; f < qn; ++f) {
      Complex c = pf(rank * qn + f);
      if (c == Complex(0.0)) continue;
      s.set(PermFuncKey{static_cast<int32_t>(rank), f}, c * basis_vector(N, x));
    }
  }
  return s;
}

}  // namespace

TEST_CASE("pf states") {
  // |pf_empty> is the uniform superposition.
  CVector empty = build_pf(Relation(2));
  CHECK(empty.norm() == doctest::Approx(1.0).epsilon(1e-14));
  for (long i = 0; i < empty.size(); ++i)
    CHECK(std::abs(empty(i) - Complex(1.0 / std::sqrt(8.0))) < 1e-14);

  // Orthonormality of the bijective pf states at N = 4, |R| <= 2.
  std::vector<CVector> vecs;
  for (int t = 0; t <= 2; ++t)
    for (const Relation& r : enumerate_relations(4, t, RelationClass::bijective))
      vecs.push_back(build_pf(r));
  for (size_t i = 0; i < vecs.size(); ++i)
    for (size_t j = i; j < vecs.size(); ++j)
      CHECK(std::abs(vecs[i].dot(vecs[j]) - (i == j ? 1.0 : 0.0)) < 1e-10);
}

TEST_CASE("pfo action on pf-relation states") {
  // pfo |x>|pf_R> = (N - |R|)^{-1/2} sum_y |y>|pf_{R u (x,y)}>, for any
  // multiset R (not only bijective ones).
  for (int N : {2, 4}) {
    std::vector<Relation> rels;
    for (int t = 0; t <= 1; ++t)
      for (const Relation& r : enumerate_relations(N, t, RelationClass::all))
        rels.push_back(r);
    for (const Relation& r : rels) {
      for (int x = 0; x < N; ++x) {
        PurifiedState out = pfo_query(pf_state_on(N, r, x));
        PurifiedState expect(KeyKind::perm_func, N, 0, 2);
        long qn = 1L << N;
        double coeff = 1.0 / std::sqrt(double(N - r.size()));
        for (int y = 0; y < N; ++y) {
          CVector pf = build_pf(
              r.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)}));
          for (long rank = 0; rank < factorial(N); ++rank)
            for (long f = 0; f < qn; ++f) {
              Complex c = pf(rank * qn + f);
              if (c == Complex(0.0)) continue;
              expect.add(PermFuncKey{static_cast<int32_t>(rank), f},
                         coeff * c * basis_vector(N, y));
            }
        }
        expect.prune();
        CHECK(state_distance(out, expect) < 1e-12);
      }
    }
  }
}

TEST_CASE("pfo is norm preserving") {
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    PurifiedState s = pfo_initial_state(4, 1);
    s = s.apply_system_unitary(sample_haar_dim(8, 100 + k));
    PurifiedState out = pfo_query(s);
    CHECK(std::abs(out.norm2() - s.norm2()) < 1e-12);
    CHECK(out.key_count() == s.key_count());
  }
}

TEST_CASE("path-recording query") {
  // V|0>|empty> at N=2.
  PurifiedState s(KeyKind::relation, 2, 0, 2);
  s.set(RelKey{Relation(2)}, basis_vector(2, 0));
  PurifiedState out = v_query(s);
  PurifiedState expect(KeyKind::relation, 2, 0, 2);
  expect.set(RelKey{Relation(2, {{0, 0}})}, M_SQRT1_2 * basis_vector(2, 0));
  expect.set(RelKey{Relation(2, {{0, 1}})}, M_SQRT1_2 * basis_vector(2, 1));
  CHECK(state_distance(out, expect) < 1e-14);

  // Single remaining image point: V|1>|{(0,1)}> = |0>|{(0,1),(1,0)}>.
  PurifiedState s2(KeyKind::relation, 2, 0, 2);
  s2.set(RelKey{Relation(2, {{0, 1}})}, basis_vector(2, 1));
  PurifiedState out2 = v_query(s2);
  PurifiedState expect2(KeyKind::relation, 2, 0, 2);
  expect2.set(RelKey{Relation(2, {{0, 1}, {1, 0}})}, basis_vector(2, 0));
  CHECK(state_distance(out2, expect2) < 1e-14);

  // Budget exhaustion.
  PurifiedState full(KeyKind::relation, 2, 0, 2);
  full.set(RelKey{Relation(2, {{0, 0}, {1, 1}})}, basis_vector(2, 0));
  CHECK_THROWS_AS(v_query(full), CapacityError);

  // Non-injective key rejected.
  PurifiedState bad(KeyKind::relation, 2, 0, 2);
  bad.set(RelKey{Relation(2, {{0, 0}, {1, 0}})}, basis_vector(2, 0));
  CHECK_THROWS_AS(v_query(bad), std::invalid_argument);
}

TEST_CASE("circuit backend agrees with the direct map") {
  int N = 4;
  for (int t = 0; t <= 2; ++t) {
    for (const Relation& r : enumerate_relations(N, t, RelationClass::injective)) {
      for (int x = 0; x < N; ++x) {
        PurifiedState s(KeyKind::relation, N, 0, 2);
        s.set(RelKey{r}, basis_vector(N, x));
        CHECK(state_distance(v_query(s), v_circuit_backend_query(s)) < 1e-12);
      }
    }
  }
}

TEST_CASE("compress maps pf states to relation states") {
  // |pf_empty> -> |empty>.
  PurifiedState s = pfo_initial_state(2, 0);
  PurifiedState c = compress(s);
  REQUIRE(c.key_count() == 1);
  CHECK(std::abs((*c.find(RelKey{Relation(2)}))(0) - Complex(1.0)) < 1e-12);

  // Compress is an isometry on the bijective span: pairwise inner
  // products preserved at N=4, |R| <= 2.
  int N = 4;
  std::vector<PurifiedState> pf_states;
  std::vector<PurifiedState> compressed;
  for (int t = 0; t <= 2; ++t) {
    for (const Relation& r : enumerate_relations(N, t, RelationClass::bijective)) {
      pf_states.push_back(pf_state_on(N, r, 0));
      compressed.push_back(compress(pf_states.back()));
    }
  }
  for (size_t i = 0; i < pf_states.size(); i += 7) {
    for (size_t j = i; j < pf_states.size(); j += 5) {
      Complex lhs = inner_product(pf_states[i], pf_states[j]);
      Complex rhs = inner_product(compressed[i], compressed[j]);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("pf distinct projection keeps bijective components") {
  int N = 2;
  // Build sum of |0>|pf_R> over one bijective and one repeated relation.
  PurifiedState bij = pf_state_on(N, Relation(2, {{0, 1}}), 0);
  PurifiedState rep = pf_state_on(N, Relation(2, {{0, 1}, {0, 1}}), 0);
  PurifiedState mixed(KeyKind::perm_func, N, 0, 2);
  for (const auto& [k, v] : bij.amplitudes()) mixed.add(k, v);
  PurifiedState projected = pf_dist_project(mixed, 1);
  CHECK(state_distance(projected, bij) < 1e-12);
  // Size mismatch projects to zero.
  CHECK(pf_dist_project(mixed, 2).norm2() < 1e-20);
  (void)rep;
}

TEST_CASE("restricted queries") {
  int N = 4;
  RestrictedSet all = RestrictedSet::all_injective(N);
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    PurifiedState s(KeyKind::relation, N, 0, 2);
    CVector v(N);
    for (int i = 0; i < N; ++i) v(i) = Complex(rng.gaussian(), rng.gaussian());
    v /= v.norm();
    s.set(RelKey{Relation(N)}, v);
    CHECK(state_distance(v_query(s), v_restricted_query(s, all)) < 1e-12);
  }

  // Identity-relation restriction: V(S)|x>|R> = |x>|R u {(x,x)}>.
  RestrictedSet idset = RestrictedSet::identity_pairs(N);
  PurifiedState s(KeyKind::relation, N, 0, 2);
  s.set(RelKey{Relation(N, {{2, 2}})}, basis_vector(N, 1));
  PurifiedState out = v_restricted_query(s, idset);
  PurifiedState expect(KeyKind::relation, N, 0, 2);
  expect.set(RelKey{Relation(N, {{1, 1}, {2, 2}})}, basis_vector(N, 1));
  CHECK(state_distance(out, expect) < 1e-14);
}

TEST_CASE("distinct-x key filter") {
  PurifiedState s(KeyKind::relation, 2, 0, 2);
  s.set(RelKey{Relation(2, {{0, 0}, {1, 1}})}, basis_vector(2, 0));
  s.set(RelKey{Relation(2, {{0, 0}, {0, 1}})}, basis_vector(2, 1));
  PurifiedState kept = dist_project_keys(s);
  CHECK(kept.key_count() == 1);
  CHECK(kept.find(RelKey{Relation(2, {{0, 0}, {1, 1}})}) != nullptr);
}

TEST_CASE("expand_full and slot rotation") {
  // A single key expands to the tensor product with its relation state.
  PurifiedState s(KeyKind::relation, 2, 0, 2);
  s.set(RelKey{Relation(2, {{0, 1}})}, basis_vector(2, 1));
  CVector dense = expand_full(s, 1);
  REQUIRE(dense.size() == 2 * 4);
  CHECK(std::abs(dense(1 * 4 + 1) - Complex(1.0)) < 1e-15);

  // Identity rotation leaves the expansion unchanged.
  CVector same = apply_g_slots(dense, 2, 1, 2, identity(2));
  CHECK((same - dense).norm() < 1e-15);

  // A Pauli-X on the x slot moves (0,1) to (1,1).
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  CVector moved = apply_g_slots(dense, 2, 1, 2, x);
  CHECK(std::abs(moved(1 * 4 + 3) - Complex(1.0)) < 1e-15);
}
