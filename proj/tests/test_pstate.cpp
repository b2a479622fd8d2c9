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
#include <json.hpp>

#include "pstate.hpp"
#include "rng.hpp"

using namespace prulab;

namespace {

PurifiedState random_relation_state(int N, int m, int keys, uint64_t seed) {
  PurifiedState s(KeyKind::relation, N, m, 2);
  auto rels = enumerate_relations(N, 1, RelationClass::injective);
  Rng rng(seed);
  for (int k = 0; k < keys && k < static_cast<int>(rels.size()); ++k) {
    CVector v(s.vec_dim());
    for (long i = 0; i < v.size(); ++i)
      v(i) = Complex(rng.gaussian(), rng.gaussian());
    s.set(RelKey{rels[k]}, v);
  }
  double norm = std::sqrt(s.norm2());
  s.scale(1.0 / norm);
  return s;
}

}  // namespace

TEST_CASE("key kinds are enforced") {
  PurifiedState s(KeyKind::relation, 2, 0, 2);
  CHECK_THROWS_AS(s.set(PermFuncKey{0, 0}, CVector::Zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(s.set(RelKey{Relation(2)}, CVector::Zero(3)),
                  std::invalid_argument);
  PurifiedState pf(KeyKind::perm_func, 2, 0, 2);
  CHECK_THROWS_AS(pf.set(PermFuncKey{0, 0, 1, 1}, CVector::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("apply_system_unitary preserves structure") {
  PurifiedState s = random_relation_state(4, 1, 3, 5);
  CHECK(s.apply_system_unitary(identity(8)).norm2() ==
        doctest::Approx(s.norm2()).epsilon(1e-14));
  for (uint64_t k = 0; k < 200; ++k) {
    PurifiedState t = random_relation_state(4, 1, 3, 1000 + k);
    CMatrix u = sample_haar_dim(8, k);
    PurifiedState rotated = t.apply_system_unitary(u);
    CHECK(std::abs(rotated.norm2() - t.norm2()) < 1e-12);
    CHECK(rotated.key_count() == t.key_count());
  }
}

TEST_CASE("reduction to the adversary") {
  // Single key with a unit vector gives the projector onto it.
  PurifiedState s(KeyKind::relation, 2, 0, 2);
  CVector psi(2);
  psi << M_SQRT1_2, Complex(0, M_SQRT1_2);
  s.set(RelKey{Relation(2)}, psi);
  CHECK(max_abs_diff(s.reduce_to_adversary(), CMatrix(psi * psi.adjoint())) < 1e-15);

  // Two orthogonal keys carrying the same vector with weight 1/2 each.
  PurifiedState two(KeyKind::relation, 2, 0, 2);
  two.set(RelKey{Relation(2)}, psi / M_SQRT2);
  two.set(RelKey{Relation(2, {{0, 0}})}, psi / M_SQRT2);
  CHECK(max_abs_diff(two.reduce_to_adversary(), CMatrix(psi * psi.adjoint())) <
        1e-15);

  // Trace equals the total squared norm.
  PurifiedState r = random_relation_state(4, 1, 4, 17);
  CHECK(r.reduce_to_adversary().trace().real() ==
        doctest::Approx(r.norm2()).epsilon(1e-12));

  // Reduction commutes with system unitaries.
  CMatrix u = sample_haar_dim(8, 23);
  CHECK(max_abs_diff(r.apply_system_unitary(u).reduce_to_adversary(),
                     u * r.reduce_to_adversary() * u.adjoint()) < 1e-12);
}

TEST_CASE("inner products") {
  PurifiedState a = random_relation_state(4, 0, 3, 1);
  CHECK(std::imag(inner_product(a, a)) == doctest::Approx(0.0));
  CHECK(std::real(inner_product(a, a)) >= 0.0);

  // Orthogonal key supports.
  PurifiedState x(KeyKind::relation, 2, 0, 2), y(KeyKind::relation, 2, 0, 2);
  x.set(RelKey{Relation(2)}, basis_vector(2, 0));
  y.set(RelKey{Relation(2, {{0, 0}})}, basis_vector(2, 0));
  CHECK(std::abs(inner_product(x, y)) == 0.0);

  // Cauchy-Schwarz on seeded pairs.
  for (uint64_t k = 0; k < 200; ++k) {
    PurifiedState u = random_relation_state(4, 0, 3, 300 + k);
    PurifiedState v = random_relation_state(4, 0, 3, 600 + k);
    CHECK(std::norm(inner_product(u, v)) <= u.norm2() * v.norm2() + 1e-12);
  }

  PurifiedState pf(KeyKind::perm_func, 4, 0, 2);
  CHECK_THROWS_AS(inner_product(a, pf), std::invalid_argument);
}

TEST_CASE("dense round trip") {
  std::vector<StateKey> basis;
  for (const Relation& r : enumerate_relations(4, 1, RelationClass::injective))
    basis.push_back(RelKey{r});

  PurifiedState empty(KeyKind::relation, 4, 0, 2);
  CHECK(empty.to_dense(basis).norm() == 0.0);

  for (uint64_t k = 0; k < 100; ++k) {
    PurifiedState s = random_relation_state(4, 0, 5, 40 + k);
    CVector dense = s.to_dense(basis);
    CHECK(dense.squaredNorm() == doctest::Approx(s.norm2()).epsilon(1e-14));
    PurifiedState back =
        PurifiedState::from_dense(KeyKind::relation, 4, 0, 2, basis, dense);
    CHECK(state_diff_norm(s, back) < 1e-15);
  }

  // A live key missing from the basis is rejected.
  PurifiedState s(KeyKind::relation, 4, 0, 2);
  s.set(RelKey{Relation(4, {{0, 0}, {1, 1}})}, basis_vector(4, 0));
  CHECK_THROWS_AS(s.to_dense(basis), std::invalid_argument);
}

TEST_CASE("prune drops negligible keys") {
  PurifiedState s(KeyKind::relation, 2, 0, 2);
  s.set(RelKey{Relation(2)}, 1e-14 * basis_vector(2, 0));
  s.set(RelKey{Relation(2, {{0, 0}})}, basis_vector(2, 0));
  s.prune();
  CHECK(s.key_count() == 1);
}

TEST_CASE("debug dump is valid JSON") {
  PurifiedState s = random_relation_state(2, 0, 2, 9);
  nlohmann::json j = nlohmann::json::parse(s.dump_json());
  CHECK(j.at("kind") == "relation");
  CHECK(j.at("entries").size() == s.key_count());
}
