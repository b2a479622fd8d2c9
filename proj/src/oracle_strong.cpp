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

#include "oracle_strong.hpp"

#include <cmath>
#include <memory>
#include <mutex>

namespace prulab {

namespace {

long pow3(int n) {
  long v = 1;
  for (int i = 0; i < n; ++i) v *= 3;
  return v;
}

Relation union_rel(const Relation& a, const Relation& b) {
  std::vector<Relation::Pair> pairs = a.pairs();
  pairs.insert(pairs.end(), b.pairs().begin(), b.pairs().end());
  return Relation(a.dim(), std::move(pairs));
}

std::vector<long> matching_perm_ranks(const Relation& r) {
  int N = r.dim();
  std::vector<long> ranks;
  long nfact = factorial(N);
  for (long rank = 0; rank < nfact; ++rank) {
    std::vector<int> pi = perm_unrank(N, rank);
    bool ok = true;
    for (auto [x, y] : r.pairs())
      if (pi[x] != y) {
        ok = false;
        break;
      }
    if (ok) ranks.push_back(rank);
  }
  return ranks;
}

int ternary_digit(long f, int x) {
  for (int i = 0; i < x; ++i) f /= 3;
  return static_cast<int>(f % 3);
}

Complex omega3_power(int k) {
  k = ((k % 3) + 3) % 3;
  if (k == 0) return {1.0, 0.0};
  double theta = 2.0 * M_PI * k / 3.0;
  return {std::cos(theta), std::sin(theta)};
}

// Phase exponent sum_L f(x) - sum_R f(x') for the pf_{L,R} state.
int pf3_exponent(long f, const Relation& left, const Relation& right) {
  int e = 0;
  for (auto [x, y] : left.pairs()) e += ternary_digit(f, x);
  for (auto [x, y] : right.pairs()) e -= ternary_digit(f, x);
  return e;
}

// Cached pf_{L,R} data over all (L, R) in R^{2,dist} with |L| + |R| <= N:
// matching permutation ranks and omega_3 exponents per f.
struct Pf3Table {
  struct Entry {
    Relation left{1};
    Relation right{1};
    std::vector<long> ranks;
    std::vector<int8_t> expo;  // omega_3 exponent mod 3, indexed by f
    double norm;
  };
  std::vector<Entry> entries;
  std::map<std::pair<std::string, std::string>, size_t> index;

  static const Pf3Table& instance(int N) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Pf3Table>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(N);
    if (it == cache.end()) {
      auto table = std::make_unique<Pf3Table>();
      long qn = pow3(N);
      for (const auto& [left, right] : enumerate_dist_pairs(N, N)) {
        Entry e;
        e.left = left;
        e.right = right;
        e.ranks = matching_perm_ranks(union_rel(left, right));
        e.expo.resize(qn);
        for (long f = 0; f < qn; ++f)
          e.expo[f] = static_cast<int8_t>(((pf3_exponent(f, left, right) % 3) + 3) % 3);
        int total = static_cast<int>(left.size() + right.size());
        e.norm = 1.0 / std::sqrt(double(factorial(N - total)) * double(qn));
        table->index.emplace(std::make_pair(left.key(), right.key()),
                             table->entries.size());
        table->entries.push_back(std::move(e));
      }
      it = cache.emplace(N, std::move(table)).first;
    }
    return *it->second;
  }
};

}  // namespace

CVector build_pf3(const Relation& left, const Relation& right) {
  int N = left.dim();
  if (right.dim() != N) throw std::invalid_argument("build_pf3: alphabet mismatch");
  if (N > 4) throw CapacityError("build_pf3: N must be <= 4");
  int total = static_cast<int>(left.size() + right.size());
  if (total > N) throw std::invalid_argument("build_pf3: |L| + |R| > N");
  long qn = pow3(N);
  CVector v = CVector::Zero(pf_dim(N, 3));
  double norm = 1.0 / std::sqrt(double(factorial(N - total)) * double(qn));
  for (long rank : matching_perm_ranks(union_rel(left, right))) {
    for (long f = 0; f < qn; ++f)
      v(rank * qn + f) = norm * omega3_power(pf3_exponent(f, left, right));
  }
  return v;
}

PurifiedState spfo_initial_state(int N, int anc_qubits) {
  if (N > 4) throw CapacityError("spfo_initial_state: N must be <= 4");
  PurifiedState s(KeyKind::perm_func, N, anc_qubits, 3);
  long nfact = factorial(N);
  long qn = pow3(N);
  double amp = 1.0 / std::sqrt(double(nfact) * double(qn));
  CVector v = CVector::Zero(s.vec_dim());
  v(0) = amp;
  for (long rank = 0; rank < nfact; ++rank)
    for (long f = 0; f < qn; ++f)
      s.set(PermFuncKey{static_cast<int32_t>(rank), f}, v);
  return s;
}

PurifiedState spfo_query(const PurifiedState& s, bool inverse) {
  if (s.kind() != KeyKind::perm_func && s.kind() != KeyKind::perm_func_design)
    throw std::invalid_argument("spfo_query: key-space kind mismatch");
  if (s.q() != 3) throw std::invalid_argument("spfo_query: requires q = 3");
  int N = s.sys_dim();
  if (N > 4) throw CapacityError("spfo_query: N must be <= 4");
  long anc = 1L << s.anc_qubits();
  PurifiedState out(s.kind(), N, s.anc_qubits(), 3);
  for (const auto& [key, v] : s.amplitudes()) {
    const auto& pf = std::get<PermFuncKey>(key);
    std::vector<int> pi = perm_unrank(N, pf.perm);
    CVector w = CVector::Zero(v.size());
    if (!inverse) {
      for (int x = 0; x < N; ++x)
        w.segment(static_cast<long>(pi[x]) * anc, anc) =
            omega3_power(ternary_digit(pf.func, x)) *
            v.segment(static_cast<long>(x) * anc, anc);
    } else {
      std::vector<int> inv = perm_inverse(pi);
      for (int y = 0; y < N; ++y)
        w.segment(static_cast<long>(inv[y]) * anc, anc) =
            omega3_power(-ternary_digit(pf.func, inv[y])) *
            v.segment(static_cast<long>(y) * anc, anc);
    }
    out.set(key, std::move(w));
  }
  return out;
}

std::vector<std::pair<Relation, Relation>> enumerate_dist_pairs(int N, int max_total) {
  std::vector<std::pair<Relation, Relation>> out;
  for (int total = 0; total <= std::min(max_total, N); ++total) {
    for (int l = 0; l <= total; ++l) {
      int r = total - l;
      for (const Relation& left : enumerate_relations(N, l, RelationClass::bijective)) {
        for (const Relation& right : enumerate_relations(N, r, RelationClass::bijective)) {
          if (union_rel(left, right).is_bijective()) out.emplace_back(left, right);
        }
      }
    }
  }
  return out;
}

PurifiedState compress_strong(const PurifiedState& s, int max_total) {
  if (s.kind() != KeyKind::perm_func)
    throw std::invalid_argument("compress_strong: key-space kind mismatch");
  if (s.q() != 3) throw std::invalid_argument("compress_strong: requires q = 3");
  int N = s.sys_dim();
  if (N > 4) throw CapacityError("compress_strong: N must be <= 4");
  long qn = pow3(N);
  PurifiedState out(KeyKind::relation_pair, N, s.anc_qubits(), 3);
  for (const auto& e : Pf3Table::instance(N).entries) {
    if (static_cast<int>(e.left.size() + e.right.size()) > max_total) continue;
    CVector acc = CVector::Zero(s.vec_dim());
    for (long rank : e.ranks) {
      for (long f = 0; f < qn; ++f) {
        const CVector* v = s.find(PermFuncKey{static_cast<int32_t>(rank), f});
        if (!v) continue;
        acc += std::conj(omega3_power(e.expo[f])) * e.norm * (*v);
      }
    }
    if (acc.squaredNorm() > PurifiedState::kPruneThreshold)
      out.set(RelPairKey{e.left, e.right}, std::move(acc));
  }
  return out;
}

PurifiedState compress_strong_adjoint(const PurifiedState& s) {
  if (s.kind() != KeyKind::relation_pair)
    throw std::invalid_argument("compress_strong_adjoint: key-space kind mismatch");
  int N = s.sys_dim();
  if (N > 4) throw CapacityError("compress_strong_adjoint: N must be <= 4");
  long qn = pow3(N);
  const Pf3Table& table = Pf3Table::instance(N);
  PurifiedState out(KeyKind::perm_func, N, s.anc_qubits(), 3);
  for (const auto& [key, v] : s.amplitudes()) {
    const auto& pk = std::get<RelPairKey>(key);
    auto it = table.index.find({pk.left.key(), pk.right.key()});
    if (it == table.index.end())
      throw std::invalid_argument("compress_strong_adjoint: key outside R^{2,dist}");
    const auto& e = table.entries[it->second];
    for (long rank : e.ranks) {
      for (long f = 0; f < qn; ++f)
        out.add(PermFuncKey{static_cast<int32_t>(rank), f},
                omega3_power(e.expo[f]) * e.norm * v);
    }
  }
  out.prune();
  return out;
}

CMatrix pair_state_to_coords(const TruncatedBasis& basis, const PurifiedState& s) {
  if (s.kind() != KeyKind::relation_pair)
    throw std::invalid_argument("pair_state_to_coords: key-space kind mismatch");
  int n = basis.dim_n();
  if (s.sys_dim() != n)
    throw std::invalid_argument("pair_state_to_coords: dimension mismatch");
  long anc = 1L << s.anc_qubits();
  CMatrix coords = CMatrix::Zero(basis.total_dim(), anc);
  for (const auto& [key, v] : s.amplitudes()) {
    const auto& pk = std::get<RelPairKey>(key);
    for (int a = 0; a < n; ++a) {
      long row = basis.index_of(a, pk.left, pk.right);
      for (long b = 0; b < anc; ++b) coords(row, b) = v(static_cast<long>(a) * anc + b);
    }
  }
  return coords;
}

PurifiedState coords_to_pair_state(const TruncatedBasis& basis, const CMatrix& coords,
                                   int anc_qubits) {
  int n = basis.dim_n();
  long anc = 1L << anc_qubits;
  if (coords.rows() != basis.total_dim() || coords.cols() != anc)
    throw std::invalid_argument("coords_to_pair_state: shape mismatch");
  PurifiedState out(KeyKind::relation_pair, n, anc_qubits, 3);
  for (const Sector& sec : basis.sectors()) {
    const auto& ls = basis.relations(sec.l);
    const auto& rs = basis.relations(sec.r);
    long rr = static_cast<long>(rs.size());
    for (long il = 0; il < static_cast<long>(ls.size()); ++il) {
      for (long ir = 0; ir < rr; ++ir) {
        long base = sec.offset + (il * rr + ir) * n;
        CVector v = CVector::Zero(static_cast<long>(n) * anc);
        double weight = 0.0;
        for (int a = 0; a < n; ++a) {
          for (long b = 0; b < anc; ++b) {
            Complex c = coords(base + a, b);
            v(static_cast<long>(a) * anc + b) = c;
            weight += std::norm(c);
          }
        }
        if (weight > PurifiedState::kPruneThreshold)
          out.set(RelPairKey{ls[il], rs[ir]}, std::move(v));
      }
    }
  }
  return out;
}

PurifiedState apply_truncated(const TruncatedOperator& op, const PurifiedState& s) {
  CMatrix coords = pair_state_to_coords(*op.basis, s);
  CMatrix moved = op.mat * coords;
  return coords_to_pair_state(*op.basis, moved, s.anc_qubits());
}

PurifiedState apply_linop(const TruncatedBasis& basis, const LinOp& op,
                          const PurifiedState& s) {
  CMatrix coords = pair_state_to_coords(basis, s);
  CMatrix moved(coords.rows(), coords.cols());
  for (long b = 0; b < coords.cols(); ++b) {
    CVector col = coords.col(b);
    moved.col(b) = op.apply(col);
  }
  return coords_to_pair_state(basis, moved, s.anc_qubits());
}

PurifiedState w_query(const PurifiedState& s, bool inverse) {
  if (s.kind() != KeyKind::relation_pair)
    throw std::invalid_argument("w_query: key-space kind mismatch");
  int N = s.sys_dim();
  long anc = 1L << s.anc_qubits();
  PurifiedState out(KeyKind::relation_pair, N, s.anc_qubits(), s.q());
  for (const auto& [key, v] : s.amplitudes()) {
    const auto& pk = std::get<RelPairKey>(key);
    Relation u = union_rel(pk.left, pk.right);
    if (!u.is_bijective())
      throw std::invalid_argument("w_query: live key outside R^{2,dist}");
    auto dom = u.dom();
    auto im = u.im();
    int usize = static_cast<int>(u.size());
    for (int a = 0; a < N; ++a) {
      CVector slice = v.segment(static_cast<long>(a) * anc, anc);
      if (slice.squaredNorm() == 0.0) continue;
      if (!inverse) {
        // W^L part: a = x fresh, append to L.
        if (!dom.count(a) && usize < N) {
          Complex coeff = 1.0 / std::sqrt(double(N - usize));
          for (int y = 0; y < N; ++y) {
            if (im.count(y)) continue;
            Relation l2 =
                pk.left.insert({static_cast<uint16_t>(a), static_cast<uint16_t>(y)});
            CVector& dst = out.at_or_zero(RelPairKey{l2, pk.right});
            dst.segment(static_cast<long>(y) * anc, anc) += coeff * slice;
          }
        }
        // W^{R,dag} part: remove the unique pair of R with x = a.
        for (auto [x, y] : pk.right.pairs()) {
          if (x != a) continue;
          Relation r2 = pk.right.remove_one({x, y});
          Complex coeff = 1.0 / std::sqrt(double(N - (usize - 1)));
          CVector& dst = out.at_or_zero(RelPairKey{pk.left, r2});
          dst.segment(static_cast<long>(y) * anc, anc) += coeff * slice;
        }
      } else {
        // W^{L,dag} part: remove the unique pair of L with y = a.
        for (auto [x, y] : pk.left.pairs()) {
          if (y != a) continue;
          Relation l2 = pk.left.remove_one({x, y});
          Complex coeff = 1.0 / std::sqrt(double(N - (usize - 1)));
          CVector& dst = out.at_or_zero(RelPairKey{l2, pk.right});
          dst.segment(static_cast<long>(x) * anc, anc) += coeff * slice;
        }
        // W^R part: a = y fresh, append to R.
        if (!im.count(a) && usize < N) {
          Complex coeff = 1.0 / std::sqrt(double(N - usize));
          for (int x = 0; x < N; ++x) {
            if (dom.count(x)) continue;
            Relation r2 =
                pk.right.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(a)});
            CVector& dst = out.at_or_zero(RelPairKey{pk.left, r2});
            dst.segment(static_cast<long>(x) * anc, anc) += coeff * slice;
          }
        }
      }
    }
  }
  out.prune();
  return out;
}

PurifiedState spfo_projected(const PurifiedState& s, const TruncatedBasis& basis,
                             const TruncatedOperator& projector, int max_total) {
  PurifiedState pair = compress_strong(s, max_total);
  PurifiedState projected = apply_truncated(projector, pair);
  return compress_strong_adjoint(projected);
}

SymVBackend::SymVBackend(const TruncatedBasis& basis)
    : basis_(&basis),
      vl_(build_VL(basis)),
      vr_(build_VR(basis)),
      pil_(vl_.compose(vl_.adjoint())),
      pir_(vr_.compose(vr_.adjoint())) {}

double SymVBackend::image_flag_weight(const PurifiedState& s, Side side) const {
  CMatrix coords = pair_state_to_coords(*basis_, s);
  const TruncatedOperator& proj = (side == Side::L) ? pil_ : pir_;
  return (proj.mat * coords).squaredNorm();
}

SymVBackend::Result SymVBackend::query(const PurifiedState& s, bool inverse) const {
  CMatrix coords = pair_state_to_coords(*basis_, s);
  const TruncatedOperator& grow = inverse ? vr_ : vl_;
  const TruncatedOperator& shrink = inverse ? vl_ : vr_;
  const TruncatedOperator& grow_image = inverse ? pir_ : pil_;
  const TruncatedOperator& shrink_image = inverse ? pil_ : pir_;

  // Coherent measurement of the shrink-side image projector; the flagged
  // branch is inverted, the unflagged branch grows a fresh record.
  CMatrix flagged = shrink_image.mat * coords;
  CMatrix fresh = coords - flagged;
  CMatrix grown = grow.mat * fresh;
  CMatrix inverted = shrink.mat.adjoint() * flagged;
  // Post-selection: drop the grow-side-image component of the inverted
  // branch (second ancilla outcome 1 aborts).
  CMatrix abort_part = grow_image.mat * inverted;
  inverted -= abort_part;

  Result res;
  res.abort_prob = abort_part.squaredNorm();
  // Final coherent grow-side image measurement resets the first ancilla:
  // the grown branch must be flagged, the inverted branch must not be.
  res.reset_defect = std::sqrt((grown - grow_image.mat * grown).squaredNorm() +
                               (grow_image.mat * inverted).squaredNorm());
  res.state = coords_to_pair_state(*basis_, CMatrix(grown + inverted), s.anc_qubits());
  return res;
}

}  // namespace prulab
