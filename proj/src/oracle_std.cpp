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

#include "oracle_std.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace prulab {

namespace {

void check_block(const PurifiedState& s, const BlockSpec& bs) {
  if (static_cast<long>(bs.hi) * bs.blk * bs.lo != s.sys_dim())
    throw std::invalid_argument("oracle block does not cover the system register");
}

// Vector layout: ((h * blk + x) * lo + l) * anc + b.
CVector gather_slice(const CVector& v, const BlockSpec& bs, long anc, int x) {
  long tail = static_cast<long>(bs.lo) * anc;
  CVector out(static_cast<long>(bs.hi) * tail);
  for (int h = 0; h < bs.hi; ++h)
    out.segment(h * tail, tail) =
        v.segment((static_cast<long>(h) * bs.blk + x) * tail, tail);
  return out;
}

void scatter_add(CVector& v, const BlockSpec& bs, long anc, int y,
                 const CVector& slice, Complex coeff) {
  long tail = static_cast<long>(bs.lo) * anc;
  for (int h = 0; h < bs.hi; ++h)
    v.segment((static_cast<long>(h) * bs.blk + y) * tail, tail) +=
        coeff * slice.segment(h * tail, tail);
}

// pi ranks with delta_{pi,R} = 1, i.e. pi(x) = y for every (x, y) in R.
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

// Cached pf-state data for every bijective relation with |R| <= N: the
// matching permutation ranks and the (-1)^{sum f(x_i)} signs per f.
struct PfTable {
  struct Entry {
    Relation rel{1};
    std::vector<long> ranks;
    std::vector<int8_t> sign;  // indexed by f in [2^N]
    double norm;
  };
  std::vector<Entry> entries;               // grouped by size, canonical order
  std::vector<size_t> size_begin;           // entries index of each size

  static const PfTable& instance(int N) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<PfTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(N);
    if (it == cache.end()) {
      auto table = std::make_unique<PfTable>();
      long qn = 1L << N;
      for (int t = 0; t <= N; ++t) {
        table->size_begin.push_back(table->entries.size());
        for (const Relation& r :
             enumerate_relations(N, t, RelationClass::bijective)) {
          Entry e;
          e.rel = r;
          e.ranks = matching_perm_ranks(r);
          e.sign.resize(qn);
          for (long f = 0; f < qn; ++f) {
            int parity = 0;
            for (auto [x, y] : r.pairs()) parity ^= (f >> x) & 1;
            e.sign[f] = parity ? -1 : 1;
          }
          e.norm = 1.0 / std::sqrt(double(factorial(N - t)) * double(qn));
          table->entries.push_back(std::move(e));
        }
      }
      table->size_begin.push_back(table->entries.size());
      it = cache.emplace(N, std::move(table)).first;
    }
    return *it->second;
  }
};

}  // namespace

CMatrix embed_block(const CMatrix& u, const BlockSpec& bs, int anc_qubits) {
  if (u.rows() != bs.blk || u.cols() != bs.blk)
    throw std::invalid_argument("embed_block: matrix does not match block");
  CMatrix out = kron(identity(bs.hi), u);
  out = kron(out, identity(bs.lo));
  return kron(out, identity(1 << anc_qubits));
}

long pf_dim(int N, int q) {
  long d = factorial(N);
  for (int i = 0; i < N; ++i) d *= q;
  return d;
}

CVector build_pf(const Relation& r) {
  int N = r.dim();
  if (N > 4) throw CapacityError("build_pf: N must be <= 4");
  int t = static_cast<int>(r.size());
  if (t > N) throw std::invalid_argument("build_pf: |R| > N");
  long qn = 1L << N;
  CVector v = CVector::Zero(pf_dim(N, 2));
  double norm = 1.0 / std::sqrt(double(factorial(N - t)) * double(qn));
  for (long rank : matching_perm_ranks(r)) {
    for (long f = 0; f < qn; ++f) {
      int parity = 0;
      for (auto [x, y] : r.pairs()) parity ^= (f >> x) & 1;
      v(rank * qn + f) = (parity ? -norm : norm);
    }
  }
  return v;
}

std::vector<StateKey> pf_basis_keys(int N, int q) {
  long nfact = factorial(N);
  long qn = 1;
  for (int i = 0; i < N; ++i) qn *= q;
  std::vector<StateKey> keys;
  keys.reserve(nfact * qn);
  for (long rank = 0; rank < nfact; ++rank)
    for (long f = 0; f < qn; ++f)
      keys.push_back(PermFuncKey{static_cast<int32_t>(rank), f});
  return keys;
}

PurifiedState pfo_initial_state(int N, int anc_qubits) {
  if (N > 4) throw CapacityError("pfo_initial_state: N must be <= 4");
  PurifiedState s(KeyKind::perm_func, N, anc_qubits, 2);
  long nfact = factorial(N);
  long qn = 1L << N;
  double amp = 1.0 / std::sqrt(double(nfact) * double(qn));
  CVector v = CVector::Zero(s.vec_dim());
  v(0) = amp;
  for (long rank = 0; rank < nfact; ++rank)
    for (long f = 0; f < qn; ++f)
      s.set(PermFuncKey{static_cast<int32_t>(rank), f}, v);
  return s;
}

PurifiedState pfo_query(const PurifiedState& s) {
  if (s.kind() != KeyKind::perm_func && s.kind() != KeyKind::perm_func_design)
    throw std::invalid_argument("pfo_query: key-space kind mismatch");
  if (s.q() != 2) throw std::invalid_argument("pfo_query: requires q = 2");
  int N = s.sys_dim();
  if (N > 4) throw CapacityError("pfo_query: N must be <= 4");
  long anc = 1L << s.anc_qubits();
  PurifiedState out(s.kind(), N, s.anc_qubits(), 2);
  for (const auto& [key, v] : s.amplitudes()) {
    const auto& pf = std::get<PermFuncKey>(key);
    std::vector<int> pi = perm_unrank(N, pf.perm);
    CVector w = CVector::Zero(v.size());
    for (int x = 0; x < N; ++x) {
      double sign = ((pf.func >> x) & 1) ? -1.0 : 1.0;
      w.segment(static_cast<long>(pi[x]) * anc, anc) =
          sign * v.segment(static_cast<long>(x) * anc, anc);
    }
    out.set(key, std::move(w));
  }
  return out;
}

PurifiedState v_query(const PurifiedState& s, const BlockSpec& bs) {
  if (s.kind() != KeyKind::relation)
    throw std::invalid_argument("v_query: key-space kind mismatch");
  check_block(s, bs);
  int N = bs.blk;
  long anc = 1L << s.anc_qubits();
  PurifiedState out(KeyKind::relation, s.sys_dim(), s.anc_qubits(), s.q());
  for (const auto& [key, v] : s.amplitudes()) {
    const Relation& r = std::get<RelKey>(key).r;
    if (r.dim() != N)
      throw std::invalid_argument("v_query: relation alphabet mismatch");
    if (!r.is_injective())
      throw std::invalid_argument("v_query: live key not injective");
    if (static_cast<int>(r.size()) >= N)
      throw CapacityError("v_query: query budget exhausted (|R| = N)");
    auto im = r.im();
    Complex coeff = 1.0 / std::sqrt(double(N - r.size()));
    for (int x = 0; x < N; ++x) {
      CVector slice = gather_slice(v, bs, anc, x);
      if (slice.squaredNorm() == 0.0) continue;
      for (int y = 0; y < N; ++y) {
        if (im.count(y)) continue;
        Relation r2 = r.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        scatter_add(out.at_or_zero(RelKey{std::move(r2)}), bs, anc, y, slice, coeff);
      }
    }
  }
  out.prune();
  return out;
}

PurifiedState v_query(const PurifiedState& s) {
  return v_query(s, whole_system(s.sys_dim()));
}

PurifiedState v_restricted_query(const PurifiedState& s, const RestrictedSet& set,
                                 const BlockSpec& bs) {
  if (s.kind() != KeyKind::relation)
    throw std::invalid_argument("v_restricted_query: key-space kind mismatch");
  check_block(s, bs);
  if (set.dim() != bs.blk)
    throw std::invalid_argument("v_restricted_query: set alphabet mismatch");
  long anc = 1L << s.anc_qubits();
  PurifiedState out(KeyKind::relation, s.sys_dim(), s.anc_qubits(), s.q());
  for (const auto& [key, v] : s.amplitudes()) {
    const Relation& r = std::get<RelKey>(key).r;
    if (!set.contains(r))
      throw std::invalid_argument("v_restricted_query: live key outside S^inj");
    if (static_cast<int>(r.size()) >= set.t_max())
      throw CapacityError("v_restricted_query: query budget exhausted (t_max)");
    for (int x = 0; x < bs.blk; ++x) {
      CVector slice = gather_slice(v, bs, anc, x);
      if (slice.squaredNorm() == 0.0) continue;
      std::vector<int> ys = set.growth_values(r, x);
      if (ys.empty())
        throw std::invalid_argument("v_restricted_query: set not consistent");
      Complex coeff = 1.0 / std::sqrt(double(ys.size()));
      for (int y : ys) {
        Relation r2 = r.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        scatter_add(out.at_or_zero(RelKey{std::move(r2)}), bs, anc, y, slice, coeff);
      }
    }
  }
  out.prune();
  return out;
}

PurifiedState v_restricted_query(const PurifiedState& s, const RestrictedSet& set) {
  return v_restricted_query(s, set, whole_system(s.sys_dim()));
}

PurifiedState v_restricted_pair_query(const PurifiedState& s, PairSide side,
                                      const RestrictedSet& set, const BlockSpec& bs) {
  if (s.kind() != KeyKind::relation_pair)
    throw std::invalid_argument("v_restricted_pair_query: key-space kind mismatch");
  check_block(s, bs);
  if (set.dim() != bs.blk)
    throw std::invalid_argument("v_restricted_pair_query: set alphabet mismatch");
  long anc = 1L << s.anc_qubits();
  PurifiedState out(KeyKind::relation_pair, s.sys_dim(), s.anc_qubits(), s.q());
  for (const auto& [key, v] : s.amplitudes()) {
    const auto& pk = std::get<RelPairKey>(key);
    const Relation& r = (side == PairSide::left) ? pk.left : pk.right;
    if (!set.contains(r))
      throw std::invalid_argument("v_restricted_pair_query: live key outside S^inj");
    if (static_cast<int>(r.size()) >= set.t_max())
      throw CapacityError("v_restricted_pair_query: query budget exhausted (t_max)");
    for (int x = 0; x < bs.blk; ++x) {
      CVector slice = gather_slice(v, bs, anc, x);
      if (slice.squaredNorm() == 0.0) continue;
      std::vector<int> ys = set.growth_values(r, x);
      if (ys.empty())
        throw std::invalid_argument("v_restricted_pair_query: set not consistent");
      Complex coeff = 1.0 / std::sqrt(double(ys.size()));
      for (int y : ys) {
        Relation r2 = r.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        RelPairKey out_key = (side == PairSide::left)
                                 ? RelPairKey{std::move(r2), pk.right}
                                 : RelPairKey{pk.left, std::move(r2)};
        scatter_add(out.at_or_zero(std::move(out_key)), bs, anc, y, slice, coeff);
      }
    }
  }
  out.prune();
  return out;
}

PurifiedState v_circuit_backend_query(const PurifiedState& s, const BlockSpec& bs) {
  if (s.kind() != KeyKind::relation)
    throw std::invalid_argument("v_circuit_backend_query: key-space kind mismatch");
  check_block(s, bs);
  int N = bs.blk;
  long anc = 1L << s.anc_qubits();
  PurifiedState out(KeyKind::relation, s.sys_dim(), s.anc_qubits(), s.q());
  for (const auto& [key, v] : s.amplitudes()) {
    const Relation& r = std::get<RelKey>(key).r;
    if (!r.is_injective())
      throw std::invalid_argument("v_circuit_backend_query: live key not injective");
    if (static_cast<int>(r.size()) >= N)
      throw CapacityError("v_circuit_backend_query: query budget exhausted");
    auto im = r.im();
    int free_count = N - static_cast<int>(r.size());
    Complex coeff = 1.0 / std::sqrt(double(free_count));
    for (int x = 0; x < N; ++x) {
      CVector slice = gather_slice(v, bs, anc, x);
      if (slice.squaredNorm() == 0.0) continue;
      // Step 1: uniform superposition over ranks, mapped in place through
      // the order-statistics bijection onto the free image points.
      for (int k = 1; k <= free_count; ++k) {
        int y = kth_free_value(im, N, k);
        // Step 2: sorted insert of (x, y).
        Relation r2 = r.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        // Step 3: uncompute (x, R) from (y, R u {(x,y)}); y is outside
        // Im(R), so the preimage pair is unique.
        int x_back = -1;
        for (auto [xx, yy] : r2.pairs())
          if (yy == y) {
            x_back = xx;
            break;
          }
        if (x_back != x || r2.remove_one({static_cast<uint16_t>(x_back),
                                          static_cast<uint16_t>(y)}) != r)
          throw std::logic_error("v_circuit_backend_query: uncompute failed");
        scatter_add(out.at_or_zero(RelKey{std::move(r2)}), bs, anc, y, slice, coeff);
      }
    }
  }
  out.prune();
  return out;
}

PurifiedState v_circuit_backend_query(const PurifiedState& s) {
  return v_circuit_backend_query(s, whole_system(s.sys_dim()));
}

namespace {

// w_R = <pf_R | s>_PF: a partial inner product leaving an A (x) B vector.
CVector pf_overlap(const PurifiedState& s, const PfTable::Entry& e) {
  long qn = 1L << s.sys_dim();
  CVector acc = CVector::Zero(s.vec_dim());
  for (long rank : e.ranks) {
    for (long f = 0; f < qn; ++f) {
      const CVector* v = s.find(PermFuncKey{static_cast<int32_t>(rank), f});
      if (!v) continue;
      acc += (e.sign[f] * e.norm) * (*v);
    }
  }
  return acc;
}

}  // namespace

PurifiedState compress(const PurifiedState& s) {
  if (s.kind() != KeyKind::perm_func)
    throw std::invalid_argument("compress: key-space kind mismatch");
  if (s.q() != 2) throw std::invalid_argument("compress: requires q = 2");
  int N = s.sys_dim();
  if (N > 4) throw CapacityError("compress: N must be <= 4");
  PurifiedState out(KeyKind::relation, N, s.anc_qubits(), 2);
  for (const auto& e : PfTable::instance(N).entries) {
    CVector w = pf_overlap(s, e);
    if (w.squaredNorm() > PurifiedState::kPruneThreshold)
      out.set(RelKey{e.rel}, std::move(w));
  }
  return out;
}

PurifiedState pf_dist_project(const PurifiedState& s, int t) {
  if (s.kind() != KeyKind::perm_func)
    throw std::invalid_argument("pf_dist_project: key-space kind mismatch");
  if (s.q() != 2) throw std::invalid_argument("pf_dist_project: requires q = 2");
  int N = s.sys_dim();
  if (N > 4) throw CapacityError("pf_dist_project: N must be <= 4");
  if (t < 0 || t > N) throw std::invalid_argument("pf_dist_project: bad size");
  long qn = 1L << N;
  PurifiedState out(KeyKind::perm_func, N, s.anc_qubits(), 2);
  const PfTable& table = PfTable::instance(N);
  for (size_t i = table.size_begin[t]; i < table.size_begin[t + 1]; ++i) {
    const auto& e = table.entries[i];
    CVector w = pf_overlap(s, e);
    if (w.squaredNorm() <= PurifiedState::kPruneThreshold) continue;
    for (long rank : e.ranks)
      for (long f = 0; f < qn; ++f)
        out.add(PermFuncKey{static_cast<int32_t>(rank), f}, (e.sign[f] * e.norm) * w);
  }
  out.prune();
  return out;
}

PurifiedState dist_project_keys(const PurifiedState& s) {
  if (s.kind() != KeyKind::relation)
    throw std::invalid_argument("dist_project_keys: key-space kind mismatch");
  PurifiedState out(KeyKind::relation, s.sys_dim(), s.anc_qubits(), s.q());
  for (const auto& [key, v] : s.amplitudes()) {
    const Relation& r = std::get<RelKey>(key).r;
    if (r.dom().size() == r.size()) out.set(key, v);
  }
  return out;
}

CVector expand_full(const PurifiedState& s, int t) {
  if (s.kind() != KeyKind::relation)
    throw std::invalid_argument("expand_full: key-space kind mismatch");
  int N = 0;
  for (const auto& [key, v] : s.amplitudes()) {
    const Relation& r = std::get<RelKey>(key).r;
    if (static_cast<int>(r.size()) != t)
      throw std::invalid_argument("expand_full: key size mismatch");
    N = r.dim();
  }
  if (N == 0) throw std::invalid_argument("expand_full: empty state");
  long ab = s.vec_dim();
  long rdim = 1;
  for (int i = 0; i < t; ++i) rdim *= static_cast<long>(N) * N;
  if (ab * rdim > (1L << 24)) throw CapacityError("expand_full: space too large");
  CVector dense = CVector::Zero(ab * rdim);
  for (const auto& [key, v] : s.amplitudes()) {
    CVector rvec = expand_relation_state(std::get<RelKey>(key).r);
    for (long a = 0; a < ab; ++a) {
      if (v(a) == Complex(0.0)) continue;
      dense.segment(a * rdim, rdim) += v(a) * rvec;
    }
  }
  return dense;
}

namespace {

// g applied to one tensor factor: vector viewed as [before][d][after].
void apply_factor(CVector& v, long before, int d, long after, const CMatrix& g) {
  CVector scratch(d);
  for (long b = 0; b < before; ++b) {
    for (long a = 0; a < after; ++a) {
      long base = b * d * after + a;
      for (int i = 0; i < d; ++i) scratch(i) = v(base + static_cast<long>(i) * after);
      for (int i = 0; i < d; ++i) {
        Complex acc = 0.0;
        for (int j = 0; j < d; ++j) acc += g(i, j) * scratch(j);
        v(base + static_cast<long>(i) * after) = acc;
      }
    }
  }
}

}  // namespace

CVector apply_g_slots(const CVector& dense, int N, int t, long ab_dim,
                      const CMatrix& g) {
  long pair = static_cast<long>(N) * N;
  long rdim = 1;
  for (int i = 0; i < t; ++i) rdim *= pair;
  if (dense.size() != ab_dim * rdim)
    throw std::invalid_argument("apply_g_slots: dimension mismatch");
  CVector out = dense;
  for (int slot = 0; slot < t; ++slot) {
    long before = ab_dim;
    for (int i = 0; i < slot; ++i) before *= pair;
    long after = static_cast<long>(N);  // the y coordinate of this slot
    for (int i = slot + 1; i < t; ++i) after *= pair;
    apply_factor(out, before, N, after, g);
  }
  return out;
}

}  // namespace prulab
