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

#include "adversary.hpp"

using namespace prulab;

TEST_CASE("concrete runs") {
  // t = 1, A_1 = I, oracle U: the result is U|0><0|U^dag (x) |0_B><0_B|.
  int N = 4;
  CMatrix u = sample_haar_dim(N, 5);
  std::vector<GateSpec> gates(1);
  gates[0].seeded = false;
  gates[0].matrix = identity(N * 2);
  AdversaryProgram adv(N, 1, gates, {});
  RunResult r = run(adv, OracleSpec::concrete(u));
  CVector psi = kron_vec(CVector(u.col(0)), basis_vector(2, 0));
  CHECK(max_abs_diff(r.rho, CMatrix(psi * psi.adjoint())) < 1e-12);
  CHECK(r.trace == doctest::Approx(1.0));
}

TEST_CASE("program JSON round-trip") {
  AdversaryProgram adv = AdversaryProgram::seeded(4, 1, 3, 99, {false, true, false});
  AdversaryProgram back = AdversaryProgram::from_json(adv.to_json());
  CHECK(back.sys_dim() == 4);
  CHECK(back.anc_qubits() == 1);
  CHECK(back.queries() == 3);
  CHECK(back.dirs() == std::vector<bool>{false, true, false});
  for (int i = 0; i < 3; ++i)
    CHECK(max_abs_diff(adv.gate(i), back.gate(i)) == 0.0);

  // Explicit matrices survive the round trip too.
  std::vector<GateSpec> gates(1);
  gates[0].seeded = false;
  gates[0].matrix = sample_haar_dim(8, 3);
  AdversaryProgram explicit_adv(4, 1, gates, {});
  AdversaryProgram back2 = AdversaryProgram::from_json(explicit_adv.to_json());
  CHECK(max_abs_diff(explicit_adv.gate(0), back2.gate(0)) < 1e-15);
}

TEST_CASE("V run against the explicit-form expansion") {
  // |A_t^V> = sqrt((N-t)!/N!) sum_{x in [N]^t, y distinct}
  //   [ prod_i |y_i><x_i| A_i |0> ] (x) |{(x_i, y_i)}>, at N = 2, t = 2.
  int N = 2, m = 1, t = 2;
  AdversaryProgram adv = AdversaryProgram::seeded(N, m, t, 123);
  PurifiedState direct = v_run_state(adv);

  PurifiedState expect(KeyKind::relation, N, m, 2);
  CMatrix a1 = adv.gate(0), a2 = adv.gate(1);
  double pref = std::sqrt(double(factorial(N - t)) / double(factorial(N)));
  long anc = 1 << m;
  for (int x1 = 0; x1 < N; ++x1)
    for (int x2 = 0; x2 < N; ++x2)
      for (int y1 = 0; y1 < N; ++y1)
        for (int y2 = 0; y2 < N; ++y2) {
          if (y1 == y2) continue;
          CVector v = CVector::Zero(N * anc);
          v(0) = 1.0;
          v = a1 * v;
          CVector picked = CVector::Zero(N * anc);
          picked.segment(y1 * anc, anc) = v.segment(x1 * anc, anc);
          picked = a2 * picked;
          CVector out = CVector::Zero(N * anc);
          out.segment(y2 * anc, anc) = picked.segment(x2 * anc, anc);
          Relation rec(N, {{static_cast<uint16_t>(x1), static_cast<uint16_t>(y1)},
                           {static_cast<uint16_t>(x2), static_cast<uint16_t>(y2)}});
          expect.add(RelKey{rec}, pref * out);
        }
  expect.prune();
  CHECK(state_diff_norm(direct, expect) < 1e-10);
  CHECK(run(adv, OracleSpec::path_recording()).trace == doctest::Approx(1.0));
}

TEST_CASE("PF exact agrees across the direct and purified routes") {
  int N = 2;
  AdversaryProgram adv = AdversaryProgram::seeded(N, 1, 2, 7);
  UnitaryEnsemble cl = UnitaryEnsemble::clifford(1);
  RunResult direct = run(adv, OracleSpec::pf(cl));  // (pi, f, C) enumeration
  DensityMatrix purified = DensityMatrix::Zero(adv.ab_dim(), adv.ab_dim());
  for (size_t i = 0; i < cl.size(); ++i) {
    CMatrix c = cl.element(i);
    purified += pfo_run_state(adv, &c).reduce_to_adversary();
  }
  purified /= double(cl.size());
  CHECK(max_abs_diff(direct.rho, purified) < 1e-10);
}

TEST_CASE("Monte-Carlo error ladder") {
  int N = 4;
  AdversaryProgram adv = AdversaryProgram::seeded(N, 1, 2, 11);
  double prev_se = 0.0;
  for (int k : {512, 1024, 2048, 4096}) {
    RunResult r = run(adv, OracleSpec::haar_mc_spec(k, 21));
    CHECK(r.mc_samples == k);
    CHECK(std::abs(r.trace - 1.0) < 1e-9);
    if (prev_se > 0.0) {
      double ratio = prev_se / r.se_trace;  // expect about sqrt(2)
      CHECK(ratio > M_SQRT2 * 0.7);
      CHECK(ratio < M_SQRT2 * 1.3);
    }
    prev_se = r.se_trace;
  }
}

TEST_CASE("determinism of runs") {
  AdversaryProgram adv = AdversaryProgram::seeded(4, 1, 2, 31);
  RunResult a = run(adv, OracleSpec::haar_mc_spec(128, 77));
  RunResult b = run(adv, OracleSpec::haar_mc_spec(128, 77));
  CHECK(max_abs_diff(a.rho, b.rho) == 0.0);
  CHECK(a.se_trace == b.se_trace);
}

TEST_CASE("forward-only guards") {
  AdversaryProgram inverse_adv =
      AdversaryProgram::seeded(4, 1, 2, 41, {false, true});
  CHECK_THROWS_AS(run(inverse_adv, OracleSpec::path_recording()),
                  std::invalid_argument);
  CHECK_THROWS_AS(run(inverse_adv, OracleSpec::purified_pfo()),
                  std::invalid_argument);
  // The symmetric oracle accepts inverse queries.
  RunResult r = run(inverse_adv, OracleSpec::path_recording_symmetric());
  CHECK(r.trace <= 1.0 + 1e-9);
}

TEST_CASE("restricted-oracle construction rejects inconsistent sets") {
  AdversaryProgram adv = AdversaryProgram::seeded(4, 1, 2, 43);
  CHECK_THROWS_AS(
      run(adv, OracleSpec::path_recording_restricted(RestrictedSet::full_size_only(4))),
      std::invalid_argument);
}

TEST_CASE("standard hybrid chain at N = 2") {
  AdversaryProgram adv = AdversaryProgram::seeded(2, 1, 2, 51);
  StandardHybridChain chain =
      run_hybrid_chain_standard(adv, UnitaryEnsemble::clifford(1));
  REQUIRE(chain.states.size() == 6);
  CHECK(chain.purified_vs_standard < 1e-10);
  CHECK(max_abs_diff(chain.states[0].second, chain.states[1].second) < 1e-10);
  CHECK(max_abs_diff(chain.states[2].second, chain.states[3].second) < 1e-10);
  CHECK(max_abs_diff(chain.states[4].second, chain.states[5].second) < 1e-10);
  CHECK(chain.compress_residual < 1e-10);
  CHECK(chain.rightinv_residual < 1e-10);
  // Projection steps stay inside the stated bound t(t-1)/(N+1).
  CHECK(trace_distance(chain.states[1].second, chain.states[2].second) <=
        2.0 / 3.0 + 1e-9);
  CHECK(trace_distance(chain.states[3].second, chain.states[4].second) <=
        2.0 / 3.0 + 1e-9);
}

TEST_CASE("strong block run at N = 2") {
  AdversaryProgram adv = AdversaryProgram::seeded(2, 1, 2, 61, {false, true});
  TruncatedBasis basis(2, 2);
  TruncatedOperator w = build_W(basis);
  TruncatedOperator pdw = w.adjoint().compose(w);
  TruncatedOperator piw = w.compose(w.adjoint());
  CMatrix c = clifford_sample(1, 3), d = clifford_sample(1, 4);
  StrongBlock block = strong_block_run(adv, c, d, basis, pdw, piw);
  CHECK(block.compress_residual < 1e-10);
  CHECK(block.w_norm2 <= 1.0 + 1e-10);
  CHECK(block.rho_w.trace().real() == doctest::Approx(block.w_norm2));
  validate_density(block.rho_spfo, 1.0, 1e-9);
}

TEST_CASE("glued chain at (1,1,1)") {
  AdversaryProgram adv = AdversaryProgram::seeded(8, 1, 2, 71);
  GluedChain chain = run_glued(adv, 1, 1, 1, 256, 81);
  REQUIRE(chain.states.size() == 5);
  CHECK(chain.uncompress_residual < 1e-10);
  CHECK(max_abs_diff(chain.states[2].second, chain.states[3].second) < 1e-10);
  for (const auto& [label, rho] : chain.states)
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-8);
}

TEST_CASE("glue uncompress is an isometry on reachable states") {
  AdversaryProgram adv = AdversaryProgram::seeded(8, 0, 2, 91);
  RestrictedSet set_full = RestrictedSet::y_mask_distinct(8, 0x2);
  PurifiedState full = v_restricted_run_state(adv, set_full);
  PurifiedState lifted = glue_uncompress(full, 1, 1, 1);
  CHECK(lifted.norm2() == doctest::Approx(full.norm2()).epsilon(1e-10));
}

TEST_CASE("exact Haar second moments match design and sampled averages") {
  // Single whole-register unitary at N = 4: the exact evaluator must
  // reproduce the exact Clifford (2-design) average bit-for-bit in value.
  AdversaryProgram adv = AdversaryProgram::seeded(4, 0, 2, 101);
  DensityMatrix exact = glued_haar_exact_rho(adv, {whole_system(4)});
  const CliffordGroup& cl = CliffordGroup::instance(2);
  DensityMatrix design = DensityMatrix::Zero(4, 4);
  for (size_t i = 0; i < cl.size(); ++i)
    design += run(adv, OracleSpec::concrete(cl.element(i))).rho;
  design /= double(cl.size());
  CHECK(max_abs_diff(exact, design) < 1e-12);
  validate_density(exact, 1.0, 1e-9);

  // Two independent blocks at (1,1,1): agreement with Monte Carlo.
  AdversaryProgram glued_adv = AdversaryProgram::seeded(8, 0, 2, 103);
  BlockSpec b23{2, 4, 1};
  BlockSpec b12{1, 4, 2};
  DensityMatrix exact_pair = glued_haar_exact_rho(glued_adv, {b23, b12});
  validate_density(exact_pair, 1.0, 1e-9);
  GluedLayer l23{1, 2, true, std::nullopt};
  GluedLayer l12{0, 2, true, std::nullopt};
  RunResult mc =
      run(glued_adv, OracleSpec::glued_spec(3, {l23, l12}, 8192, 105));
  CHECK(trace_distance(exact_pair, mc.rho) < 6.0 * mc.se_trace + 0.02);
}
