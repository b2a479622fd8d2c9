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

#include "oracle_strong.hpp"
#include "rng.hpp"

using namespace prulab;

namespace {

double state_distance(const PurifiedState& a, const PurifiedState& b) {
  return state_diff_norm(a, b);
}

PurifiedState pf3_state_on(int N, const Relation& l, const Relation& r, int x) {
  PurifiedState s(KeyKind::perm_func, N, 0, 3);
  CVector pf = build_pf3(l, r);
  long qn = 1;
  for (int i = 0; i < N; ++i) qn *= 3;
  for (long rank = 0; rank < factorial(N); ++rank)
    for (long f = 0; f < qn; ++f) {
      Complex c = pf(rank * qn + f);
      if (std::abs(c) < 1e-15) continue;
      s.set(PermFuncKey{static_cast<int32_t>(rank), f}, c * basis_vector(N, x));
    }
  return s;
}

}  // namespace

TEST_CASE("truncated basis structure") {
  for (int N : {2, 4}) {
    for (int t_max : {1, 2, 3}) {
      TruncatedBasis basis(N, t_max);
      CHECK(basis.total_dim() == TruncatedBasis::closed_form_size(N, t_max));
      // index_of and key_at are inverse.
      for (long i = 0; i < basis.total_dim(); i += 7) {
        auto [a, l, r] = basis.key_at(i);
        CHECK(basis.index_of(a, l, r) == i);
      }
    }
  }
  CHECK_THROWS_AS(TruncatedBasis(32, 2), CapacityError);
}

TEST_CASE("VL and VR examples") {
  // N=2: V^L|0>|empty>|{(1,1)}>: one free image point, coefficient 1.
  TruncatedBasis basis(2, 2);
  TruncatedOperator vl = build_VL(basis);
  long col = basis.index_of(0, Relation(2), Relation(2, {{1, 1}}));
  long row = basis.index_of(0, Relation(2, {{0, 0}}), Relation(2, {{1, 1}}));
  CMatrix dense = vl.dense();
  CHECK(std::abs(dense(row, col) - Complex(1.0)) < 1e-14);
  for (long i = 0; i < basis.total_dim(); ++i)
    if (i != row) CHECK(std::abs(dense(i, col)) < 1e-14);

  // Multiplicity branch: V^L|0>|{(0,1)}>|empty> has no y = 1 branch and
  // coefficient 1 on y = 0.
  long col2 = basis.index_of(0, Relation(2, {{0, 1}}), Relation(2));
  long row2 = basis.index_of(0, Relation(2, {{0, 1}, {0, 0}}), Relation(2));
  CHECK(std::abs(dense(row2, col2) - Complex(1.0)) < 1e-14);
  long bad = basis.index_of(1, Relation(2, {{0, 1}, {0, 1}}), Relation(2));
  CHECK(std::abs(dense(bad, col2)) < 1e-14);
}

TEST_CASE("E operator multiplicity weights") {
  // E^L|0>|{(0,1)}>|empty> at N=2: y=1 branch sqrt(2)/sqrt(2) = 1,
  // y=0 branch 1/sqrt(2).
  TruncatedBasis basis(2, 2);
  TruncatedOperator el = build_E(basis, Side::L);
  CMatrix dense = el.dense();
  long col = basis.index_of(0, Relation(2, {{0, 1}}), Relation(2));
  long row_y1 = basis.index_of(1, Relation(2, {{0, 1}, {0, 1}}), Relation(2));
  long row_y0 = basis.index_of(0, Relation(2, {{0, 1}, {0, 0}}), Relation(2));
  CHECK(std::abs(dense(row_y1, col) - Complex(1.0)) < 1e-14);
  CHECK(std::abs(dense(row_y0, col) - Complex(M_SQRT1_2)) < 1e-14);
}

TEST_CASE("W algebra") {
  for (int N : {2, 4}) {
    TruncatedBasis basis(N, 2);
    TruncatedOperator w = build_W(basis);
    CHECK(w.compose(w.adjoint()).compose(w).sub(w).max_abs_entry() < 1e-12);

    TruncatedOperator wl = build_WL(basis);
    TruncatedOperator wr = build_WR(basis);
    // Domain of W^L orthogonal to the image of W^R.
    CHECK(wl.adjoint()
              .compose(wl)
              .compose(wr.compose(wr.adjoint()))
              .max_abs_entry() < 1e-12);
    // Pi^{D(W)} = Pi^{D(W^L)} + Pi^{I(W^R)}.
    TruncatedOperator pdw = w.adjoint().compose(w);
    CHECK(wl.adjoint()
              .compose(wl)
              .add(wr.compose(wr.adjoint()))
              .sub(pdw)
              .max_abs_entry() < 1e-12);
    // W^L agrees with V^L on the W^L domain.
    TruncatedOperator vl = build_VL(basis);
    CHECK(vl.compose(wl.adjoint().compose(wl)).sub(wl).max_abs_entry() < 1e-12);
  }
}

TEST_CASE("symmetric V") {
  for (int N : {2, 4}) {
    TruncatedBasis basis(N, 2);
    TruncatedOperator v = build_symmetric_V(basis);
    // Partial isometry.
    CHECK(v.compose(v.adjoint()).compose(v).sub(v).max_abs_entry() < 1e-12);
    // Fresh forward query: V|0>|empty>|empty> = N^{-1/2} sum_y |y>|{(0,y)}>|empty>.
    CVector e = CVector::Zero(basis.total_dim());
    e(basis.index_of(0, Relation(N), Relation(N))) = 1.0;
    CVector out = v.as_linop()->apply(e);
    for (int y = 0; y < N; ++y) {
      Relation rec(N, {{0, static_cast<uint16_t>(y)}});
      CHECK(std::abs(out(basis.index_of(y, rec, Relation(N))) -
                     Complex(1.0 / std::sqrt(double(N)))) < 1e-12);
    }
    CHECK(std::abs(out.squaredNorm() - 1.0) < 1e-12);
    // Forward then inverse returns a fresh record to the input.
    CVector back = v.adjoint().as_linop()->apply(out);
    CHECK((back - e).norm() < 1e-12);
    // W = V Pi^{D(W)} and W^dag = V^dag Pi^{I(W)}.
    TruncatedOperator w = build_W(basis);
    TruncatedOperator pdw = w.adjoint().compose(w);
    TruncatedOperator piw = w.compose(w.adjoint());
    CHECK(v.compose(pdw).sub(w).max_abs_entry() < 1e-12);
    CHECK(v.adjoint().compose(piw).sub(w.adjoint()).max_abs_entry() < 1e-12);
    // W^dag V = Pi^{D(W)}, W V^dag = Pi^{I(W)}.
    CHECK(w.adjoint().compose(v).sub(pdw).max_abs_entry() < 1e-12);
    CHECK(w.compose(v.adjoint()).sub(piw).max_abs_entry() < 1e-12);
    // The lazy composition agrees with the sparse product.
    LinOpPtr lazy = symmetric_v_linop(basis);
    Rng rng(4);
    CVector probe(basis.total_dim());
    for (long i = 0; i < probe.size(); ++i)
      probe(i) = Complex(rng.gaussian(), rng.gaussian());
    CHECK((lazy->apply(probe) - v.as_linop()->apply(probe)).norm() < 1e-10);
  }
}

TEST_CASE("Q twirl operator") {
  TruncatedBasis basis(2, 2);
  CMatrix c = sample_haar_dim(2, 11), d = sample_haar_dim(2, 12);
  TruncatedOperator q = build_Q(basis, c, d);
  // Unitary on the truncated space.
  CHECK(q.adjoint().compose(q).sub(trunc_identity(basis)).max_abs_entry() < 1e-12);
  // C = D = I gives the identity.
  CHECK(build_Q(basis, identity(2), identity(2))
            .sub(trunc_identity(basis))
            .max_abs_entry() < 1e-12);
  // The lazy operator agrees with the materialized one.
  LinOpPtr lazy = q_twirl_op(basis, c, d);
  Rng rng(9);
  CVector probe(basis.total_dim());
  for (long i = 0; i < probe.size(); ++i)
    probe(i) = Complex(rng.gaussian(), rng.gaussian());
  CHECK((lazy->apply(probe) - q.as_linop()->apply(probe)).norm() < 1e-10);
  CHECK((lazy->apply_adjoint(probe) - q.adjoint().as_linop()->apply(probe)).norm() <
        1e-10);
}

TEST_CASE("norm engines agree") {
  TruncatedBasis basis(2, 2);
  TruncatedOperator vl = build_VL(basis);
  TruncatedOperator el = build_E(basis, Side::L);
  TruncatedOperator diff = vl.sub(el);
  double svd = operator_norm(diff.dense());
  NormResult p = power_norm(*diff.as_linop(), 17, 1e-10, 20000);
  NormResult l = lanczos_norm(*diff.as_linop(), 18, 1e-10, 200);
  CHECK(p.converged);
  CHECK(l.converged);
  CHECK(std::abs(p.value - svd) < 1e-6);
  CHECK(std::abs(l.value - svd) < 1e-6);
  CHECK(operator_norm(diff) == doctest::Approx(svd).epsilon(1e-6));
}

TEST_CASE("spfo action and compress") {
  int N = 2;
  // Forward action on |x>|pf_{empty,empty}>.
  PurifiedState s = pf3_state_on(N, Relation(N), Relation(N), 0);
  PurifiedState out = spfo_query(s, false);
  PurifiedState expect(KeyKind::perm_func, N, 0, 3);
  for (int y = 0; y < N; ++y) {
    PurifiedState term = pf3_state_on(
        N, Relation(N, {{0, static_cast<uint16_t>(y)}}), Relation(N), y);
    for (const auto& [k, v] : term.amplitudes())
      expect.add(k, v / std::sqrt(double(N)));
  }
  expect.prune();
  CHECK(state_distance(out, expect) < 1e-12);

  // Inverse action appends to the right record.
  PurifiedState inv = spfo_query(s, true);
  PurifiedState expect_inv(KeyKind::perm_func, N, 0, 3);
  for (int x = 0; x < N; ++x) {
    PurifiedState term = pf3_state_on(
        N, Relation(N), Relation(N, {{static_cast<uint16_t>(x), 0}}), x);
    for (const auto& [k, v] : term.amplitudes())
      expect_inv.add(k, v / std::sqrt(double(N)));
  }
  expect_inv.prune();
  CHECK(state_distance(inv, expect_inv) < 1e-12);

  // Forward then inverse is the identity.
  CHECK(state_distance(spfo_query(out, true), s) < 1e-12);

  // Compress relabels: |pf_{empty,empty}> -> |empty>|empty>.
  PurifiedState c = compress_strong(spfo_initial_state(N, 0), N);
  REQUIRE(c.key_count() == 1);
  CHECK(c.find(RelPairKey{Relation(N), Relation(N)}) != nullptr);
  // Compress^dag round-trips on the distinct span.
  PurifiedState lifted = compress_strong_adjoint(c);
  CHECK(state_distance(lifted, spfo_initial_state(N, 0)) < 1e-12);
}

TEST_CASE("w_query matches the sparse operator") {
  for (int N : {2, 4}) {
    TruncatedBasis basis(N, 2);
    TruncatedOperator w = build_W(basis);
    TruncatedOperator wdag = w.adjoint();
    Eigen::VectorXd bij = basis.mask_bij();
    for (long idx = 0; idx < basis.total_dim(); ++idx) {
      if (bij(idx) == 0.0) continue;
      auto [a, l, r] = basis.key_at(idx);
      if (static_cast<int>(l.size() + r.size()) >= basis.t_max()) continue;
      PurifiedState s(KeyKind::relation_pair, N, 0, 3);
      s.set(RelPairKey{l, r}, basis_vector(N, a));
      CHECK(state_distance(w_query(s, false), apply_truncated(w, s)) < 1e-12);
      CHECK(state_distance(w_query(s, true), apply_truncated(wdag, s)) < 1e-12);
    }
  }
}

TEST_CASE("pf3 domain projection matches the compressed projector") {
  int N = 2;
  TruncatedBasis basis(N, 2);
  TruncatedOperator w = build_W(basis);
  TruncatedOperator pdw = w.adjoint().compose(w);
  // A state supported on |x>|pf_{L,R}> with x in Dom(L u R) is annihilated
  // by Pi~^{D(W)}; a fresh x passes through.
  PurifiedState fresh = pf3_state_on(N, Relation(N, {{0, 1}}), Relation(N), 1);
  PurifiedState stale = pf3_state_on(N, Relation(N, {{0, 1}}), Relation(N), 0);
  PurifiedState kept = spfo_projected(fresh, basis, pdw, 2);
  PurifiedState killed = spfo_projected(stale, basis, pdw, 2);
  CHECK(state_distance(kept, fresh) < 1e-12);
  CHECK(killed.norm2() < 1e-20);
}

TEST_CASE("closed-form domain and image projectors at N = 2") {
  TruncatedBasis basis(2, 2);
  TruncatedOperator w = build_W(basis);
  CMatrix pdw = w.adjoint().compose(w).dense();
  CMatrix piw = w.compose(w.adjoint()).dense();
  CMatrix low = CMatrix(trunc_diag(basis, basis.mask_leq(1)).mat);
  CMatrix cf_d(basis.total_dim(), basis.total_dim());
  CMatrix cf_i(basis.total_dim(), basis.total_dim());
  {
    LinOpPtr d = closed_form_domain_W(basis);
    LinOpPtr i = closed_form_image_W(basis);
    CVector e = CVector::Zero(basis.total_dim());
    for (long j = 0; j < basis.total_dim(); ++j) {
      e(j) = 1.0;
      cf_d.col(j) = d->apply(e);
      cf_i.col(j) = i->apply(e);
      e(j) = 0.0;
    }
  }
  CHECK(max_abs_diff(low * pdw * low, low * cf_d * low) < 1e-12);
  CHECK(max_abs_diff(low * piw * low, low * cf_i * low) < 1e-12);
}

TEST_CASE("coherent backend matches V on every basis input") {
  int N = 2;
  TruncatedBasis basis(N, 2);
  TruncatedOperator v = build_symmetric_V(basis);
  SymVBackend backend(basis);
  for (long idx = 0; idx < basis.total_dim(); ++idx) {
    auto [a, l, r] = basis.key_at(idx);
    for (bool inverse : {false, true}) {
      PurifiedState s(KeyKind::relation_pair, N, 0, 3);
      s.set(RelPairKey{l, r}, basis_vector(N, a));
      SymVBackend::Result res = backend.query(s, inverse);
      PurifiedState direct = apply_truncated(inverse ? v.adjoint() : v, s);
      CHECK(state_distance(res.state, direct) < 1e-12);
      CHECK(res.reset_defect < 1e-12);
    }
  }
}

TEST_CASE("column-restricted symmetric V matches the product form") {
  for (int N : {2, 4}) {
    TruncatedBasis basis(N, 2);
    TruncatedOperator full = build_symmetric_V(basis);
    TruncatedOperator restricted = build_symmetric_V_restricted(basis, 1);
    TruncatedOperator cut =
        full.compose(trunc_diag(basis, basis.mask_leq(1)));
    CHECK(restricted.sub(cut).max_abs_entry() < 1e-13);
  }
}
