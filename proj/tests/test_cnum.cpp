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

#include "cnum.hpp"
#include "rng.hpp"

using namespace prulab;

namespace {

CMatrix pauli_x() {
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

CMatrix hadamard() {
  CMatrix h(2, 2);
  h << 1, 1, 1, -1;
  return h * M_SQRT1_2;
}

DensityMatrix random_density(int dim, uint64_t seed) {
  CMatrix u = sample_haar_dim(dim, seed);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
  Rng rng(seed ^ 0xabcdef);
  double total = 0.0;
  for (int i = 0; i < dim; ++i) {
    p(i) = rng.uniform() + 1e-3;
    total += p(i);
  }
  p /= total;
  return u * p.asDiagonal() * u.adjoint();
}

}  // namespace

TEST_CASE("kron basics") {
  CHECK(max_abs_diff(kron(identity(2), identity(2)), identity(4)) == 0.0);

  // Bit flip on the most significant qubit: |00> -> |10>.
  CVector v00 = basis_vector(4, 0);
  CVector flipped = kron(pauli_x(), identity(2)) * v00;
  CHECK((flipped - basis_vector(4, 2)).norm() == doctest::Approx(0.0));

  // H (x) H on |00> is the uniform superposition; frozen from the direct
  // 4x4 product.
  CVector plus2 = kron(hadamard(), hadamard()) * v00;
  for (int i = 0; i < 4; ++i) CHECK(std::abs(plus2(i) - Complex(0.5, 0.0)) < 1e-15);
}

TEST_CASE("partial trace") {
  // Product state.
  DensityMatrix rho00 = basis_vector(4, 0) * basis_vector(4, 0).adjoint();
  DensityMatrix reduced = partial_trace(rho00, {2, 2}, {0});
  CHECK(max_abs_diff(reduced, basis_vector(2, 0) * basis_vector(2, 0).adjoint()) <
        1e-15);

  // Maximally entangled state reduces to I/2.
  CVector epr = epr_state(2);
  DensityMatrix rho = epr * epr.adjoint();
  CHECK(max_abs_diff(partial_trace(rho, {2, 2}, {0}), identity(2) / 2.0) < 1e-15);

  // Seeded input against an index-summation oracle.
  DensityMatrix big = random_density(12, 7);
  DensityMatrix fast = partial_trace(big, {3, 4}, {0});
  CMatrix slow = CMatrix::Zero(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int k = 0; k < 4; ++k) slow(a, b) += big(a * 4 + k, b * 4 + k);
  CHECK(max_abs_diff(fast, slow) < 1e-12);

  // Trace preservation on seeded inputs.
  for (uint64_t s = 0; s < 5; ++s) {
    DensityMatrix r = random_density(8, 100 + s);
    DensityMatrix part = partial_trace(r, {2, 2, 2}, {1});
    CHECK(std::abs(part.trace().real() - r.trace().real()) < 1e-12);
  }

  CHECK_THROWS_AS(partial_trace(rho00, {2, 3}, {0}), std::invalid_argument);
}

TEST_CASE("trace distance") {
  DensityMatrix zero = basis_vector(2, 0) * basis_vector(2, 0).adjoint();
  DensityMatrix one = basis_vector(2, 1) * basis_vector(2, 1).adjoint();
  CHECK(trace_distance(zero, zero) == doctest::Approx(0.0));
  CHECK(trace_distance(zero, one) == doctest::Approx(1.0));

  CVector plus(2);
  plus << M_SQRT1_2, M_SQRT1_2;
  DensityMatrix plus_rho = plus * plus.adjoint();
  // Eigenvalues of the 2x2 difference are +-1/sqrt(2).
  CHECK(std::abs(trace_distance(zero, plus_rho) - 0.7071067811865476) < 1e-6);

  CMatrix nonherm = CMatrix::Zero(2, 2);
  nonherm(0, 1) = 1.0;
  CHECK_THROWS_AS(trace_distance(nonherm, zero), std::invalid_argument);

  // Triangle inequality on seeded Hermitian triples.
  for (uint64_t s = 0; s < 1000; ++s) {
    DensityMatrix a = random_density(4, 3 * s);
    DensityMatrix b = random_density(4, 3 * s + 1);
    DensityMatrix c = random_density(4, 3 * s + 2);
    CHECK(trace_distance(a, c) <=
          trace_distance(a, b) + trace_distance(b, c) + 1e-9);
  }
}

TEST_CASE("operator norm") {
  CHECK(operator_norm(identity(5)) == doctest::Approx(1.0));
  CMatrix rank1 = CMatrix::Zero(2, 2);
  rank1(0, 1) = 2.0;
  CHECK(operator_norm(rank1) == doctest::Approx(2.0));
}

TEST_CASE("haar sampling") {
  for (uint64_t s = 0; s < 100; ++s)
    CHECK(unitary_defect(sample_haar(2, s)) < 1e-10);

  // Determinism per seed.
  CHECK(max_abs_diff(sample_haar(1, 42), sample_haar(1, 42)) == 0.0);
  CHECK(max_abs_diff(sample_haar(1, 42), sample_haar(1, 43)) > 1e-3);

  // First-moment Monte Carlo: mean of U|0><0|U^dag approaches I/N.
  int N = 4;
  CMatrix acc = CMatrix::Zero(N, N);
  for (int k = 0; k < 4096; ++k) {
    CMatrix u = sample_haar(2, derive_seed(99, k));
    acc += u.col(0) * u.col(0).adjoint();
  }
  acc /= 4096.0;
  CHECK(max_abs_diff(acc, identity(N) / double(N)) < 0.05);

  CHECK_THROWS_AS(sample_haar(5, 1), CapacityError);
}

TEST_CASE("permutation and phase unitaries") {
  std::vector<int> ident{0, 1};
  CHECK(max_abs_diff(permutation_unitary(ident), identity(2)) == 0.0);
  CHECK(max_abs_diff(phase_unitary({0, 0}, 2), identity(2)) == 0.0);

  // N=2, pi = swap, f = (0,1), q=2: P_pi F_f |1> = -|0>.
  CMatrix op = permutation_unitary({1, 0}) * phase_unitary({0, 1}, 2);
  CVector out = op * basis_vector(2, 1);
  CHECK((out - Complex(-1.0, 0.0) * basis_vector(2, 0)).norm() < 1e-15);

  CHECK_THROWS_AS(permutation_unitary({0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(phase_unitary({0, 2}, 2), std::invalid_argument);
}

TEST_CASE("permutation ranking round-trips") {
  int N = 4;
  for (long r = 0; r < factorial(N); ++r)
    CHECK(perm_rank(perm_unrank(N, r)) == r);
  // Lexicographic order: rank 0 is the identity.
  std::vector<int> first = perm_unrank(N, 0);
  for (int i = 0; i < N; ++i) CHECK(first[i] == i);
}

TEST_CASE("clifford group enumeration") {
  const CliffordGroup& c1 = CliffordGroup::instance(1);
  CHECK(c1.size() == 24);
  const CliffordGroup& c2 = CliffordGroup::instance(2);
  CHECK(c2.size() == 11520);
  for (size_t i = 0; i < c1.size(); ++i)
    CHECK(unitary_defect(c1.element(i)) < 1e-10);
  CHECK_THROWS_AS(CliffordGroup::instance(3), CapacityError);
}

TEST_CASE("twirl averages") {
  // Exact Clifford twirl of the equality projector at n = 1.
  UnitaryEnsemble cl = UnitaryEnsemble::clifford(1);
  CMatrix avg = twirl_average(cl, eq_projector(2), TwirlMode::UU);
  CHECK(max_abs_diff(avg, (2.0 / 3.0) * sym2_projector(2)) < 1e-10);

  // Mixed twirl against the EPR form.
  CMatrix mixed = twirl_average(cl, eq_projector(2), TwirlMode::UConj);
  CVector epr = epr_state(2);
  CMatrix eprp = epr * epr.adjoint();
  CHECK(max_abs_diff(mixed, eprp + (identity(4) - eprp) / 3.0) < 1e-10);

  // Identity observable is fixed.
  CHECK(max_abs_diff(twirl_average(cl, identity(4), TwirlMode::UU), identity(4)) <
        1e-12);
}

TEST_CASE("dist projector") {
  CMatrix p = dist_projector(2, 2);
  CHECK(p(0, 0) == Complex(0.0));  // |00> has a repeat
  CHECK(p(1, 1) == Complex(1.0));
  CHECK(p(2, 2) == Complex(1.0));
  CHECK(p(3, 3) == Complex(0.0));
}

TEST_CASE("derived seeds differ") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(1, 7) == derive_seed(1, 7));
}
