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

#include "truncated.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace prulab {

namespace {

long pow_long(long base, int e) {
  long v = 1;
  for (int i = 0; i < e; ++i) v *= base;
  return v;
}

long binom_multiset(long alphabet, int t) {
  // Number of size-t multisets over `alphabet` letters: C(alphabet+t-1, t).
  long num = 1, den = 1;
  for (int i = 0; i < t; ++i) {
    num *= alphabet + i;
    den *= i + 1;
  }
  return num / den;
}

Relation union_rel(const Relation& a, const Relation& b) {
  std::vector<Relation::Pair> pairs = a.pairs();
  pairs.insert(pairs.end(), b.pairs().begin(), b.pairs().end());
  return Relation(a.dim(), std::move(pairs));
}

// g applied to one tensor factor of a flat vector viewed [before][d][after].
void apply_factor(CVector& v, long before, int d, long after, const CMatrix& g) {
  if (after >= 16) {
    // Row-major view (d x after) per block; the product allocates a
    // temporary, so the in-place assignment is safe.
    using RowMat =
        Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (long b = 0; b < before; ++b) {
      Eigen::Map<RowMat> view(v.data() + b * d * after, d, after);
      view = g * view;
    }
    return;
  }
  static thread_local std::vector<Complex> scratch;
  scratch.resize(d);
  for (long b = 0; b < before; ++b) {
    long block = b * d * after;
    for (long a = 0; a < after; ++a) {
      long base = block + a;
      for (int i = 0; i < d; ++i) scratch[i] = v(base + static_cast<long>(i) * after);
      for (int i = 0; i < d; ++i) {
        Complex acc = 0.0;
        for (int j = 0; j < d; ++j) acc += g(i, j) * scratch[j];
        v(base + static_cast<long>(i) * after) = acc;
      }
    }
  }
}

}  // namespace

TruncatedBasis::TruncatedBasis(int dim_n, int t_max) : n_(dim_n), t_max_(t_max) {
  if (dim_n < 2 || dim_n > 16)
    throw CapacityError("TruncatedBasis: N must be in [2, 16]");
  if (t_max < 1 || t_max > 4)
    throw CapacityError("TruncatedBasis: t_max must be in [1, 4]");
  rels_.resize(t_max + 1);
  rel_index_.resize(t_max + 1);
  for (int t = 0; t <= t_max; ++t) {
    rels_[t] = enumerate_relations(dim_n, t, RelationClass::all);
    for (long i = 0; i < static_cast<long>(rels_[t].size()); ++i)
      rel_index_[t].emplace(rels_[t][i].key(), i);
  }
  long offset = 0;
  for (int total = 0; total <= t_max; ++total) {
    for (int l = 0; l <= total; ++l) {
      int r = total - l;
      Sector s;
      s.l = l;
      s.r = r;
      s.offset = offset;
      s.pair_dim = static_cast<long>(rels_[l].size()) * rels_[r].size();
      sector_lookup_.emplace(std::make_pair(l, r), sectors_.size());
      sectors_.push_back(s);
      offset += s.pair_dim * n_;
    }
  }
  total_dim_ = offset;
}

long TruncatedBasis::closed_form_size(int dim_n, int t_max) {
  long alphabet = static_cast<long>(dim_n) * dim_n;
  long total = 0;
  for (int l = 0; l <= t_max; ++l)
    for (int r = 0; l + r <= t_max; ++r)
      total += binom_multiset(alphabet, l) * binom_multiset(alphabet, r) * dim_n;
  return total;
}

const Sector& TruncatedBasis::sector(int l, int r) const {
  auto it = sector_lookup_.find({l, r});
  if (it == sector_lookup_.end())
    throw std::out_of_range("TruncatedBasis::sector: no such sector");
  return sectors_[it->second];
}

bool TruncatedBasis::has_sector(int l, int r) const {
  return sector_lookup_.count({l, r}) > 0;
}

const std::vector<Relation>& TruncatedBasis::relations(int size) const {
  if (size < 0 || size > t_max_)
    throw std::out_of_range("TruncatedBasis::relations: size out of range");
  return rels_[size];
}

long TruncatedBasis::relation_index(const Relation& rel) const {
  int size = static_cast<int>(rel.size());
  const auto& index = rel_index_.at(size);
  auto it = index.find(rel.key());
  if (it == index.end())
    throw std::out_of_range("TruncatedBasis::relation_index: unknown relation");
  return it->second;
}

long TruncatedBasis::index_of(int a, const Relation& left, const Relation& right) const {
  const Sector& s = sector(static_cast<int>(left.size()), static_cast<int>(right.size()));
  long il = relation_index(left);
  long ir = relation_index(right);
  return s.offset + (il * static_cast<long>(rels_[s.r].size()) + ir) * n_ + a;
}

std::tuple<int, Relation, Relation> TruncatedBasis::key_at(long index) const {
  for (const Sector& s : sectors_) {
    long dim = s.pair_dim * n_;
    if (index >= s.offset && index < s.offset + dim) {
      long rel = (index - s.offset) / n_;
      int a = static_cast<int>((index - s.offset) % n_);
      long rr_count = static_cast<long>(rels_[s.r].size());
      return {a, rels_[s.l][rel / rr_count], rels_[s.r][rel % rr_count]};
    }
  }
  throw std::out_of_range("TruncatedBasis::key_at: index out of range");
}

Eigen::VectorXd TruncatedBasis::mask_all() const {
  return Eigen::VectorXd::Ones(total_dim_);
}

Eigen::VectorXd TruncatedBasis::mask_leq(int t) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(total_dim_);
  for (const Sector& s : sectors_)
    if (s.l + s.r <= t) m.segment(s.offset, s.pair_dim * n_).setOnes();
  return m;
}

Eigen::VectorXd TruncatedBasis::mask_sector(int l, int r) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(total_dim_);
  const Sector& s = sector(l, r);
  m.segment(s.offset, s.pair_dim * n_).setOnes();
  return m;
}

Eigen::VectorXd TruncatedBasis::mask_bij() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(total_dim_);
  for (const Sector& s : sectors_) {
    long rr = static_cast<long>(rels_[s.r].size());
    for (long il = 0; il < static_cast<long>(rels_[s.l].size()); ++il) {
      for (long ir = 0; ir < rr; ++ir) {
        if (union_rel(rels_[s.l][il], rels_[s.r][ir]).is_bijective())
          m.segment(s.offset + (il * rr + ir) * n_, n_).setOnes();
      }
    }
  }
  return m;
}

Eigen::VectorXd TruncatedBasis::mask_not_in_dom() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(total_dim_);
  for (const Sector& s : sectors_) {
    long rr = static_cast<long>(rels_[s.r].size());
    for (long il = 0; il < static_cast<long>(rels_[s.l].size()); ++il) {
      for (long ir = 0; ir < rr; ++ir) {
        auto dom = union_rel(rels_[s.l][il], rels_[s.r][ir]).dom();
        long base = s.offset + (il * rr + ir) * n_;
        for (int a = 0; a < n_; ++a)
          if (!dom.count(a)) m(base + a) = 1.0;
      }
    }
  }
  return m;
}

Eigen::VectorXd TruncatedBasis::mask_not_in_im() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(total_dim_);
  for (const Sector& s : sectors_) {
    long rr = static_cast<long>(rels_[s.r].size());
    for (long il = 0; il < static_cast<long>(rels_[s.l].size()); ++il) {
      for (long ir = 0; ir < rr; ++ir) {
        auto im = union_rel(rels_[s.l][il], rels_[s.r][ir]).im();
        long base = s.offset + (il * rr + ir) * n_;
        for (int a = 0; a < n_; ++a)
          if (!im.count(a)) m(base + a) = 1.0;
      }
    }
  }
  return m;
}

const SparseCMatrix& TruncatedBasis::symmetrizer(int size) const {
  std::lock_guard<std::mutex> lock(sym_mutex_);
  auto it = sym_cache_.find(size);
  if (it != sym_cache_.end()) return it->second;
  const auto& list = relations(size);
  long pair = static_cast<long>(n_) * n_;
  long rows = pow_long(pair, size);
  SparseCMatrix s(rows, static_cast<long>(list.size()));
  std::vector<Eigen::Triplet<Complex>> trips;
  // Column entries computed directly from the permutation sum; the dense
  // expansion would zero a full tensor per relation.
  std::map<long, int> terms;
  for (long j = 0; j < static_cast<long>(list.size()); ++j) {
    const Relation& rel = list[j];
    int t = static_cast<int>(rel.size());
    double norm2 = factorial(t);
    const auto& ps = rel.pairs();
    for (size_t i = 0; i < ps.size();) {
      size_t k = i;
      while (k < ps.size() && ps[k] == ps[i]) ++k;
      norm2 *= factorial(static_cast<int>(k - i));
      i = k;
    }
    terms.clear();
    std::vector<int> order(t);
    for (int i = 0; i < t; ++i) order[i] = i;
    do {
      long idx = 0;
      for (int slot = 0; slot < t; ++slot) {
        auto [x, y] = ps[order[slot]];
        idx = idx * pair + (static_cast<long>(x) * n_ + y);
      }
      ++terms[idx];
    } while (std::next_permutation(order.begin(), order.end()));
    double scale = 1.0 / std::sqrt(norm2);
    for (const auto& [idx, count] : terms)
      trips.emplace_back(idx, j, Complex(count * scale));
  }
  s.setFromTriplets(trips.begin(), trips.end());
  return sym_cache_.emplace(size, std::move(s)).first->second;
}

// ---------------------------------------------------------------------------
// LinOp implementations.

CVector LinOp::apply(const CVector& in) const {
  CVector out;
  apply(in, out);
  return out;
}

CVector LinOp::apply_adjoint(const CVector& in) const {
  CVector out;
  apply_adjoint(in, out);
  return out;
}

namespace {

class SparseLinOp final : public LinOp {
 public:
  explicit SparseLinOp(SparseCMatrix m) : m_(std::move(m)), adj_(m_.adjoint()) {}
  long rows() const override { return m_.rows(); }
  long cols() const override { return m_.cols(); }
  void apply(const CVector& in, CVector& out) const override { out = m_ * in; }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    out = adj_ * in;
  }

 private:
  SparseCMatrix m_;
  SparseCMatrix adj_;
};

class DiagLinOp final : public LinOp {
 public:
  explicit DiagLinOp(Eigen::VectorXd mask) : mask_(std::move(mask)) {}
  long rows() const override { return mask_.size(); }
  long cols() const override { return mask_.size(); }
  void apply(const CVector& in, CVector& out) const override {
    out = mask_.cast<Complex>().cwiseProduct(in);
  }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    apply(in, out);
  }

 private:
  Eigen::VectorXd mask_;
};

class DenseLinOp final : public LinOp {
 public:
  explicit DenseLinOp(CMatrix m) : m_(std::move(m)) {}
  long rows() const override { return m_.rows(); }
  long cols() const override { return m_.cols(); }
  void apply(const CVector& in, CVector& out) const override { out = m_ * in; }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    out = m_.adjoint() * in;
  }

 private:
  CMatrix m_;
};

class IdentityLinOp final : public LinOp {
 public:
  explicit IdentityLinOp(long dim) : dim_(dim) {}
  long rows() const override { return dim_; }
  long cols() const override { return dim_; }
  void apply(const CVector& in, CVector& out) const override { out = in; }
  void apply_adjoint(const CVector& in, CVector& out) const override { out = in; }

 private:
  long dim_;
};

class ScaledLinOp final : public LinOp {
 public:
  ScaledLinOp(Complex c, LinOpPtr op) : c_(c), op_(std::move(op)) {}
  long rows() const override { return op_->rows(); }
  long cols() const override { return op_->cols(); }
  void apply(const CVector& in, CVector& out) const override {
    op_->apply(in, out);
    out *= c_;
  }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    op_->apply_adjoint(in, out);
    out *= std::conj(c_);
  }

 private:
  Complex c_;
  LinOpPtr op_;
};

class SumLinOp final : public LinOp {
 public:
  explicit SumLinOp(std::vector<LinOpPtr> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw std::invalid_argument("sum_op: empty");
    for (const auto& t : terms_)
      if (t->rows() != terms_[0]->rows() || t->cols() != terms_[0]->cols())
        throw std::invalid_argument("sum_op: shape mismatch");
  }
  long rows() const override { return terms_[0]->rows(); }
  long cols() const override { return terms_[0]->cols(); }
  void apply(const CVector& in, CVector& out) const override {
    out = CVector::Zero(rows());
    CVector tmp;
    for (const auto& t : terms_) {
      t->apply(in, tmp);
      out += tmp;
    }
  }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    out = CVector::Zero(cols());
    CVector tmp;
    for (const auto& t : terms_) {
      t->apply_adjoint(in, tmp);
      out += tmp;
    }
  }

 private:
  std::vector<LinOpPtr> terms_;
};

class ChainLinOp final : public LinOp {
 public:
  explicit ChainLinOp(std::vector<LinOpPtr> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("chain_op: empty");
    for (size_t i = 0; i + 1 < factors_.size(); ++i)
      if (factors_[i]->cols() != factors_[i + 1]->rows())
        throw std::invalid_argument("chain_op: shape mismatch");
  }
  long rows() const override { return factors_.front()->rows(); }
  long cols() const override { return factors_.back()->cols(); }
  void apply(const CVector& in, CVector& out) const override {
    CVector cur = in;
    for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
      CVector next;
      (*it)->apply(cur, next);
      cur = std::move(next);
    }
    out = std::move(cur);
  }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    CVector cur = in;
    for (const auto& f : factors_) {
      CVector next;
      f->apply_adjoint(cur, next);
      cur = std::move(next);
    }
    out = std::move(cur);
  }

 private:
  std::vector<LinOpPtr> factors_;
};

class AdjointLinOp final : public LinOp {
 public:
  explicit AdjointLinOp(LinOpPtr op) : op_(std::move(op)) {}
  long rows() const override { return op_->cols(); }
  long cols() const override { return op_->rows(); }
  void apply(const CVector& in, CVector& out) const override {
    op_->apply_adjoint(in, out);
  }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    op_->apply(in, out);
  }

 private:
  LinOpPtr op_;
};

class BlockALinOp final : public LinOp {
 public:
  BlockALinOp(const TruncatedBasis& basis, CMatrix u)
      : dim_(basis.total_dim()), n_(basis.dim_n()), u_(std::move(u)) {
    if (u_.rows() != n_ || u_.cols() != n_)
      throw std::invalid_argument("block_a_op: matrix must be N x N");
  }
  long rows() const override { return dim_; }
  long cols() const override { return dim_; }
  void apply(const CVector& in, CVector& out) const override { run(in, out, u_); }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    run(in, out, u_.adjoint());
  }

 private:
  void run(const CVector& in, CVector& out, const CMatrix& g) const {
    out.resize(dim_);
    for (long base = 0; base < dim_; base += n_)
      out.segment(base, n_) = g * in.segment(base, n_);
  }
  long dim_;
  int n_;
  CMatrix u_;
};

// Shared sector-lift machinery: relation coordinates of one sector
// <-> flat tensor coordinates [tL][tR][a].
struct SectorLift {
  const TruncatedBasis* basis;
  const Sector* sec;
  long nl, nr;        // relation counts |R_l|, |R_r|
  long tl, tr;        // tensor dims (N^2)^l, (N^2)^r
  int n;

  SectorLift(const TruncatedBasis& b, const Sector& s) : basis(&b), sec(&s) {
    n = b.dim_n();
    nl = static_cast<long>(b.relations(s.l).size());
    nr = static_cast<long>(b.relations(s.r).size());
    tl = pow_long(static_cast<long>(n) * n, s.l);
    tr = pow_long(static_cast<long>(n) * n, s.r);
  }

  // in: full-basis vector; out: flat tensor vector of dim tl*tr*n.
  CVector lift(const CVector& in) const {
    const SparseCMatrix& sl = basis->symmetrizer(sec->l);
    const SparseCMatrix& sr = basis->symmetrizer(sec->r);
    // Gather sector slice as a matrix A(iL, iR*n + a).
    CMatrix a0(nl, nr * n);
    for (long il = 0; il < nl; ++il)
      for (long k = 0; k < nr * n; ++k)
        a0(il, k) = in(sec->offset + il * nr * n + k);
    CMatrix t1 = sl * a0;  // (tl, nr*n)
    // Rearrange to B(iR, tL*n + a), lift R side.
    CMatrix b(nr, tl * n);
    for (long itl = 0; itl < tl; ++itl)
      for (long ir = 0; ir < nr; ++ir)
        for (int a = 0; a < n; ++a)
          b(ir, itl * n + a) = t1(itl, ir * n + a);
    CMatrix t2 = sr * b;  // (tr, tl*n)
    CVector flat(tl * tr * n);
    for (long itl = 0; itl < tl; ++itl)
      for (long itr = 0; itr < tr; ++itr)
        for (int a = 0; a < n; ++a)
          flat((itl * tr + itr) * n + a) = t2(itr, itl * n + a);
    return flat;
  }

  // Adjoint of lift: flat tensor vector back into the sector slice of `out`.
  void project_add(const CVector& flat, CVector& out) const {
    const SparseCMatrix& sl = basis->symmetrizer(sec->l);
    const SparseCMatrix& sr = basis->symmetrizer(sec->r);
    CMatrix t2(tr, tl * n);
    for (long itl = 0; itl < tl; ++itl)
      for (long itr = 0; itr < tr; ++itr)
        for (int a = 0; a < n; ++a)
          t2(itr, itl * n + a) = flat((itl * tr + itr) * n + a);
    CMatrix b = sr.adjoint() * t2;  // (nr, tl*n)
    CMatrix t1(tl, nr * n);
    for (long itl = 0; itl < tl; ++itl)
      for (long ir = 0; ir < nr; ++ir)
        for (int a = 0; a < n; ++a)
          t1(itl, ir * n + a) = b(ir, itl * n + a);
    CMatrix a0 = sl.adjoint() * t1;  // (nl, nr*n)
    for (long il = 0; il < nl; ++il)
      for (long k = 0; k < nr * n; ++k)
        out(sec->offset + il * nr * n + k) += a0(il, k);
  }
};

class QTwirlLinOp final : public LinOp {
 public:
  QTwirlLinOp(const TruncatedBasis& basis, CMatrix c, CMatrix d)
      : basis_(&basis), c_(std::move(c)), d_(std::move(d)) {
    if (c_.rows() != basis.dim_n() || d_.rows() != basis.dim_n())
      throw std::invalid_argument("q_twirl_op: C, D must be N x N");
    if (unitary_defect(c_) > 1e-10 || unitary_defect(d_) > 1e-10)
      throw std::invalid_argument("q_twirl_op: C, D must be unitary");
  }
  long rows() const override { return basis_->total_dim(); }
  long cols() const override { return basis_->total_dim(); }
  void apply(const CVector& in, CVector& out) const override {
    run(in, out, c_, d_);
  }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    // Q[C,D]^dag = Q[C^dag, D^dag].
    run(in, out, c_.adjoint(), d_.adjoint());
  }

 private:
  void run(const CVector& in, CVector& out, const CMatrix& c,
           const CMatrix& d) const {
    int n = basis_->dim_n();
    long pair = static_cast<long>(n) * n;
    CMatrix dt = d.transpose();
    CMatrix cbar = c.conjugate();
    CMatrix ddag = d.adjoint();
    out = CVector::Zero(basis_->total_dim());
    for (const Sector& s : basis_->sectors()) {
      // Sector-local action: untouched sectors are skipped outright.
      if (in.segment(s.offset, s.pair_dim * n).squaredNorm() == 0.0) continue;
      SectorLift lift(*basis_, s);
      CVector flat = lift.lift(in);
      // L slots carry C on x and D^T on y; R slots carry conj(C) on x and
      // D^dag on y. Slot i of tL has x stride n*(pair^{l-1-i})*tr*n.
      for (int i = 0; i < s.l; ++i) {
        long before = pow_long(pair, i);
        long after_x = n * pow_long(pair, s.l - 1 - i) * lift.tr * n;
        apply_factor(flat, before, n, after_x, c);
        long before_y = before * n;
        long after_y = pow_long(pair, s.l - 1 - i) * lift.tr * n;
        apply_factor(flat, before_y, n, after_y, dt);
      }
      for (int j = 0; j < s.r; ++j) {
        long before = lift.tl * pow_long(pair, j);
        long after_x = n * pow_long(pair, s.r - 1 - j) * n;
        apply_factor(flat, before, n, after_x, cbar);
        long before_y = before * n;
        long after_y = pow_long(pair, s.r - 1 - j) * n;
        apply_factor(flat, before_y, n, after_y, ddag);
      }
      lift.project_add(flat, out);
    }
  }

  const TruncatedBasis* basis_;
  CMatrix c_, d_;
};

class EprSlotSumLinOp final : public LinOp {
 public:
  EprSlotSumLinOp(const TruncatedBasis& basis, int l, int r, Side side, bool x_coord)
      : basis_(&basis), l_(l), r_(r), side_(side), x_(x_coord) {
    basis.sector(l, r);  // validate
  }
  long rows() const override { return basis_->total_dim(); }
  long cols() const override { return basis_->total_dim(); }
  void apply(const CVector& in, CVector& out) const override {
    int n = basis_->dim_n();
    long pair = static_cast<long>(n) * n;
    const Sector& s = basis_->sector(l_, r_);
    SectorLift lift(*basis_, s);
    CVector flat = lift.lift(in);
    CVector acc = CVector::Zero(flat.size());
    int count = (side_ == Side::L) ? s.l : s.r;
    for (int i = 0; i < count; ++i) {
      // Strides of the chosen slot coordinate in the [tL][tR][a] layout.
      long before, after;
      if (side_ == Side::L) {
        before = pow_long(pair, i) * (x_ ? 1 : n);
        after = (x_ ? n : 1) * pow_long(pair, s.l - 1 - i) * lift.tr * n;
      } else {
        before = lift.tl * pow_long(pair, i) * (x_ ? 1 : n);
        after = (x_ ? n : 1) * pow_long(pair, s.r - 1 - i) * n;
      }
      acc += epr_apply(flat, before, n, after);
    }
    out = CVector::Zero(basis_->total_dim());
    lift.project_add(acc, out);
  }
  void apply_adjoint(const CVector& in, CVector& out) const override {
    apply(in, out);  // sum of projectors, Hermitian
  }

 private:
  // Pi^EPR on the (slot coordinate, a) pair: layout [before][coord=n][after']
  // where `a` is always the last (stride-1) axis of dim n and after = after'
  // includes it. after % n == 0 is guaranteed since `a` is innermost.
  static CVector epr_apply(const CVector& v, long before, int n, long after) {
    CVector out = CVector::Zero(v.size());
    long mid = after / n;  // strides between the coord axis and the a axis
    for (long b = 0; b < before; ++b) {
      for (long m = 0; m < mid; ++m) {
        long base = b * n * after + m * n;
        Complex s = 0.0;
        for (int u = 0; u < n; ++u) s += v(base + static_cast<long>(u) * after + u);
        s /= double(n);
        for (int u = 0; u < n; ++u) out(base + static_cast<long>(u) * after + u) = s;
      }
    }
    return out;
  }

  const TruncatedBasis* basis_;
  int l_, r_;
  Side side_;
  bool x_;
};

}  // namespace

LinOpPtr sparse_op(SparseCMatrix m) { return std::make_shared<SparseLinOp>(std::move(m)); }
LinOpPtr diag_op(Eigen::VectorXd mask) { return std::make_shared<DiagLinOp>(std::move(mask)); }
LinOpPtr dense_op(CMatrix m) { return std::make_shared<DenseLinOp>(std::move(m)); }
LinOpPtr identity_op(long dim) { return std::make_shared<IdentityLinOp>(dim); }
LinOpPtr scaled_op(Complex c, LinOpPtr op) {
  return std::make_shared<ScaledLinOp>(c, std::move(op));
}
LinOpPtr sum_op(std::vector<LinOpPtr> terms) {
  return std::make_shared<SumLinOp>(std::move(terms));
}
LinOpPtr chain_op(std::vector<LinOpPtr> factors) {
  return std::make_shared<ChainLinOp>(std::move(factors));
}
LinOpPtr adjoint_op(LinOpPtr op) { return std::make_shared<AdjointLinOp>(std::move(op)); }
LinOpPtr block_a_op(const TruncatedBasis& basis, const CMatrix& u) {
  return std::make_shared<BlockALinOp>(basis, u);
}
LinOpPtr q_twirl_op(const TruncatedBasis& basis, const CMatrix& c, const CMatrix& d) {
  return std::make_shared<QTwirlLinOp>(basis, c, d);
}
LinOpPtr epr_slot_sum_op(const TruncatedBasis& basis, int l, int r, Side side,
                         bool x_coord) {
  return std::make_shared<EprSlotSumLinOp>(basis, l, r, side, x_coord);
}

NormResult power_norm(const LinOp& op, uint64_t seed, double rtol, int max_iters) {
  Rng rng(seed);
  CVector v(op.cols());
  for (long i = 0; i < v.size(); ++i) v(i) = Complex(rng.gaussian(), rng.gaussian());
  double nv = v.norm();
  if (nv == 0.0) return {0.0, 0, true, 0.0};
  v /= nv;
  NormResult res;
  double lambda = 0.0;
  CVector bv;
  for (int it = 1; it <= max_iters; ++it) {
    bv = op.apply_adjoint(op.apply(v));
    double next = std::real(v.dot(bv));
    double bn = bv.norm();
    res.iterations = it;
    // Absolute floor: an operator that is zero to roundoff converges at
    // once instead of chasing a relative tolerance it can never meet.
    if (bn < 1e-24 || next < 1e-28) {
      res.value = std::sqrt(std::max(0.0, next));
      res.converged = true;
      res.residual = bn;
      return res;
    }
    double residual = (bv - next * v).norm();
    if (std::abs(next - lambda) <= rtol * next &&
        residual <= std::sqrt(rtol) * next) {
      res.value = std::sqrt(next);
      res.converged = true;
      res.residual = residual;
      return res;
    }
    lambda = next;
    v = bv / bn;
  }
  res.value = std::sqrt(lambda);
  res.converged = false;
  res.residual = (bv - lambda * v).norm();
  return res;
}

NormResult lanczos_norm(const LinOp& op, uint64_t seed, double rtol, int max_iters) {
  Rng rng(seed);
  long dim = op.cols();
  CVector v(dim);
  for (long i = 0; i < dim; ++i) v(i) = Complex(rng.gaussian(), rng.gaussian());
  v /= v.norm();

  std::vector<CVector> basis{v};
  std::vector<double> alpha, beta;
  double lambda_prev = 0.0;
  NormResult res;
  for (int it = 1; it <= max_iters && it <= dim; ++it) {
    CVector w = op.apply_adjoint(op.apply(basis.back()));
    double a = std::real(basis.back().dot(w));
    alpha.push_back(a);
    w -= a * basis.back();
    if (basis.size() > 1) w -= beta.back() * basis[basis.size() - 2];
    // Full reorthogonalization keeps the small Krylov basis clean.
    for (const CVector& u : basis) w -= u.dot(w) * u;
    double b = w.norm();

    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(alpha.size(), alpha.size());
    for (size_t i = 0; i < alpha.size(); ++i) {
      tri(i, i) = alpha[i];
      if (i + 1 < alpha.size()) {
        tri(i, i + 1) = beta[i];
        tri(i + 1, i) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    double lambda = es.eigenvalues().maxCoeff();
    res.iterations = it;
    bool stagnant = it > 2 && std::abs(lambda - lambda_prev) <=
                                  rtol * std::max(lambda, 1e-300);
    if (stagnant || b <= 1e-14 * std::max(1.0, std::sqrt(std::abs(lambda)))) {
      // Residual certificate via the Ritz vector.
      long top;
      es.eigenvalues().maxCoeff(&top);
      CVector ritz = CVector::Zero(dim);
      for (size_t i = 0; i < basis.size(); ++i)
        ritz += es.eigenvectors()(i, top) * basis[i];
      ritz /= ritz.norm();
      CVector br = op.apply_adjoint(op.apply(ritz));
      double lam = std::real(ritz.dot(br));
      res.value = std::sqrt(std::max(0.0, lam));
      res.residual = (br - lam * ritz).norm();
      res.converged = true;
      return res;
    }
    lambda_prev = lambda;
    beta.push_back(b);
    basis.push_back(w / b);
  }
  res.value = std::sqrt(std::max(0.0, lambda_prev));
  res.converged = false;
  return res;
}

// ---------------------------------------------------------------------------
// TruncatedOperator.

TruncatedOperator TruncatedOperator::adjoint() const {
  return {*basis, SparseCMatrix(mat.adjoint())};
}

TruncatedOperator TruncatedOperator::compose(const TruncatedOperator& rhs) const {
  if (basis != rhs.basis)
    throw std::invalid_argument("TruncatedOperator::compose: basis mismatch");
  return {*basis, SparseCMatrix(mat * rhs.mat)};
}

TruncatedOperator TruncatedOperator::add(const TruncatedOperator& rhs) const {
  if (basis != rhs.basis)
    throw std::invalid_argument("TruncatedOperator::add: basis mismatch");
  return {*basis, SparseCMatrix(mat + rhs.mat)};
}

TruncatedOperator TruncatedOperator::sub(const TruncatedOperator& rhs) const {
  if (basis != rhs.basis)
    throw std::invalid_argument("TruncatedOperator::sub: basis mismatch");
  return {*basis, SparseCMatrix(mat - rhs.mat)};
}

TruncatedOperator TruncatedOperator::scaled(Complex c) const {
  return {*basis, SparseCMatrix(c * mat)};
}

LinOpPtr TruncatedOperator::as_linop() const { return sparse_op(mat); }

CMatrix TruncatedOperator::dense(long max_dim) const {
  if (mat.rows() > max_dim)
    throw CapacityError("TruncatedOperator::dense: dimension too large");
  return CMatrix(mat);
}

double TruncatedOperator::max_abs_entry() const {
  double m = 0.0;
  for (int k = 0; k < mat.outerSize(); ++k)
    for (SparseCMatrix::InnerIterator it(mat, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

TruncatedOperator trunc_identity(const TruncatedBasis& basis) {
  SparseCMatrix m(basis.total_dim(), basis.total_dim());
  m.setIdentity();
  return {basis, std::move(m)};
}

TruncatedOperator trunc_diag(const TruncatedBasis& basis, const Eigen::VectorXd& mask) {
  std::vector<Eigen::Triplet<Complex>> trips;
  for (long i = 0; i < mask.size(); ++i)
    if (mask(i) != 0.0) trips.emplace_back(i, i, Complex(mask(i)));
  SparseCMatrix m(basis.total_dim(), basis.total_dim());
  m.setFromTriplets(trips.begin(), trips.end());
  return {basis, std::move(m)};
}

double operator_norm(const TruncatedOperator& op) {
  auto lin = op.as_linop();
  NormResult res = power_norm(*lin, /*seed=*/0x9d2c5680u, 1e-8, 10000);
  if (!res.converged) {
    std::ostringstream os;
    os << "operator_norm: power iteration did not converge after 10000 steps"
       << "; last iterate " << res.value;
    throw std::runtime_error(os.str());
  }
  if (op.mat.rows() <= 512) {
    double svd = operator_norm(CMatrix(op.mat));
    if (std::abs(svd - res.value) > 1e-6 * std::max(1.0, svd))
      throw std::runtime_error("operator_norm: dense SVD cross-check failed");
  }
  return res.value;
}

// ---------------------------------------------------------------------------
// Operator builders.

namespace {

using Trip = Eigen::Triplet<Complex>;

TruncatedOperator from_triplets(const TruncatedBasis& basis, std::vector<Trip>& trips) {
  SparseCMatrix m(basis.total_dim(), basis.total_dim());
  m.setFromTriplets(trips.begin(), trips.end());
  return {basis, std::move(m)};
}

template <typename Fn>
void for_each_key(const TruncatedBasis& basis, int max_total, Fn&& fn) {
  for (const Sector& s : basis.sectors()) {
    if (s.l + s.r > max_total) continue;
    const auto& ls = basis.relations(s.l);
    const auto& rs = basis.relations(s.r);
    long rr = static_cast<long>(rs.size());
    for (long il = 0; il < static_cast<long>(ls.size()); ++il) {
      for (long ir = 0; ir < rr; ++ir) {
        long base = s.offset + (il * rr + ir) * basis.dim_n();
        fn(ls[il], rs[ir], base);
      }
    }
  }
}

}  // namespace

TruncatedOperator build_VL(const TruncatedBasis& basis) {
  int n = basis.dim_n();
  std::vector<Trip> trips;
  int cap = std::min(basis.t_max() - 1, n - 1);
  for_each_key(basis, cap, [&](const Relation& L, const Relation& R, long base) {
    Relation u = union_rel(L, R);
    auto im = u.im();
    double coeff = 1.0 / std::sqrt(double(n - im.size()));
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        if (im.count(y)) continue;
        Relation l2 = L.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        trips.emplace_back(basis.index_of(y, l2, R), base + x, coeff);
      }
    }
  });
  return from_triplets(basis, trips);
}

TruncatedOperator build_VR(const TruncatedBasis& basis) {
  int n = basis.dim_n();
  std::vector<Trip> trips;
  int cap = std::min(basis.t_max() - 1, n - 1);
  for_each_key(basis, cap, [&](const Relation& L, const Relation& R, long base) {
    Relation u = union_rel(L, R);
    auto dom = u.dom();
    double coeff = 1.0 / std::sqrt(double(n - dom.size()));
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        if (dom.count(x)) continue;
        Relation r2 = R.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        trips.emplace_back(basis.index_of(x, L, r2), base + y, coeff);
      }
    }
  });
  return from_triplets(basis, trips);
}

TruncatedOperator build_WL(const TruncatedBasis& basis) {
  int n = basis.dim_n();
  std::vector<Trip> trips;
  int cap = std::min(basis.t_max() - 1, n - 1);
  for_each_key(basis, cap, [&](const Relation& L, const Relation& R, long base) {
    Relation u = union_rel(L, R);
    if (!u.is_bijective()) return;
    auto dom = u.dom();
    auto im = u.im();
    double coeff = 1.0 / std::sqrt(double(n - u.size()));
    for (int x = 0; x < n; ++x) {
      if (dom.count(x)) continue;
      for (int y = 0; y < n; ++y) {
        if (im.count(y)) continue;
        Relation l2 = L.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        trips.emplace_back(basis.index_of(y, l2, R), base + x, coeff);
      }
    }
  });
  return from_triplets(basis, trips);
}

TruncatedOperator build_WR(const TruncatedBasis& basis) {
  int n = basis.dim_n();
  std::vector<Trip> trips;
  int cap = std::min(basis.t_max() - 1, n - 1);
  for_each_key(basis, cap, [&](const Relation& L, const Relation& R, long base) {
    Relation u = union_rel(L, R);
    if (!u.is_bijective()) return;
    auto dom = u.dom();
    auto im = u.im();
    double coeff = 1.0 / std::sqrt(double(n - u.size()));
    for (int y = 0; y < n; ++y) {
      if (im.count(y)) continue;
      for (int x = 0; x < n; ++x) {
        if (dom.count(x)) continue;
        Relation r2 = R.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
        trips.emplace_back(basis.index_of(x, L, r2), base + y, coeff);
      }
    }
  });
  return from_triplets(basis, trips);
}

TruncatedOperator build_W(const TruncatedBasis& basis) {
  return build_WL(basis).add(build_WR(basis).adjoint());
}

TruncatedOperator build_symmetric_V(const TruncatedBasis& basis) {
  if (basis.total_dim() > 100000)
    throw CapacityError("build_symmetric_V: basis too large to materialize");
  TruncatedOperator vl = build_VL(basis);
  TruncatedOperator vr = build_VR(basis);
  TruncatedOperator id = trunc_identity(basis);
  TruncatedOperator pir = vr.compose(vr.adjoint());
  TruncatedOperator pil = vl.compose(vl.adjoint());
  return vl.compose(id.sub(pir)).add(id.sub(pil).compose(vr.adjoint()));
}

LinOpPtr symmetric_v_linop(const TruncatedBasis& basis) {
  LinOpPtr vl = build_VL(basis).as_linop();
  LinOpPtr vr = build_VR(basis).as_linop();
  LinOpPtr id = identity_op(basis.total_dim());
  LinOpPtr pil = chain_op({vl, adjoint_op(vl)});
  LinOpPtr pir = chain_op({vr, adjoint_op(vr)});
  LinOpPtr term1 = chain_op({vl, sum_op({id, scaled_op(-1.0, pir)})});
  LinOpPtr term2 = chain_op({sum_op({id, scaled_op(-1.0, pil)}), adjoint_op(vr)});
  return sum_op({term1, term2});
}

TruncatedOperator build_symmetric_V_restricted(const TruncatedBasis& basis,
                                               int t_cols) {
  TruncatedOperator vl = build_VL(basis);
  TruncatedOperator vr = build_VR(basis);
  SparseCMatrix vld = vl.mat.adjoint();
  SparseCMatrix vrd = vr.mat.adjoint();

  using SVec = std::map<long, Complex>;
  auto apply_sparse = [](const SparseCMatrix& m, const SVec& in) {
    SVec out;
    for (const auto& [j, c] : in)
      for (SparseCMatrix::InnerIterator it(m, j); it; ++it)
        out[it.row()] += it.value() * c;
    return out;
  };

  Eigen::VectorXd mask = basis.mask_leq(t_cols);
  std::vector<Trip> trips;
  for (long j = 0; j < basis.total_dim(); ++j) {
    if (mask(j) == 0.0) continue;
    SVec e{{j, Complex(1.0)}};
    SVec vrd_e = apply_sparse(vrd, e);
    SVec column = apply_sparse(vr.mat, vrd_e);  // Pi^{I(V^R)} e
    for (auto& [idx, c] : column) c = -c;
    column[j] += 1.0;
    column = apply_sparse(vl.mat, column);  // V^L (1 - Pi^{I(V^R)})
    for (const auto& [idx, c] : vrd_e) column[idx] += c;
    SVec drop = apply_sparse(vl.mat, apply_sparse(vld, vrd_e));
    for (const auto& [idx, c] : drop) column[idx] -= c;
    for (const auto& [idx, c] : column)
      if (std::abs(c) > 1e-16) trips.emplace_back(idx, j, c);
  }
  SparseCMatrix m(basis.total_dim(), basis.total_dim());
  m.setFromTriplets(trips.begin(), trips.end());
  return {basis, std::move(m)};
}

TruncatedOperator build_E(const TruncatedBasis& basis, Side side) {
  int n = basis.dim_n();
  std::vector<Trip> trips;
  double inv_sqrt_n = 1.0 / std::sqrt(double(n));
  for_each_key(basis, basis.t_max() - 1,
               [&](const Relation& L, const Relation& R, long base) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (side == Side::L) {
          // a = x in, b = y out.
          Relation::Pair p{static_cast<uint16_t>(a), static_cast<uint16_t>(b)};
          double coeff = inv_sqrt_n * std::sqrt(double(L.num(p) + 1));
          trips.emplace_back(basis.index_of(b, L.insert(p), R), base + a, coeff);
        } else {
          // a = y in, b = x out.
          Relation::Pair p{static_cast<uint16_t>(b), static_cast<uint16_t>(a)};
          double coeff = inv_sqrt_n * std::sqrt(double(R.num(p) + 1));
          trips.emplace_back(basis.index_of(b, L, R.insert(p)), base + a, coeff);
        }
      }
    }
  });
  return from_triplets(basis, trips);
}

TruncatedOperator build_Q(const TruncatedBasis& basis, const CMatrix& c,
                          const CMatrix& d) {
  int n = basis.dim_n();
  if (n > 4 || basis.t_max() > 2)
    throw CapacityError("build_Q: materialization capped at N <= 4, t_max <= 2");
  if (unitary_defect(c) > 1e-10 || unitary_defect(d) > 1e-10)
    throw std::invalid_argument("build_Q: C, D must be unitary");
  long pair = static_cast<long>(n) * n;
  CMatrix ml = kron(c, d.transpose());
  CMatrix mr = kron(c.conjugate(), d.adjoint());

  auto sym_block = [&](int size, const CMatrix& m) {
    const SparseCMatrix& s = basis.symmetrizer(size);
    CMatrix dense_s = CMatrix(s);
    CMatrix lifted = dense_s;
    for (int slot = 0; slot < size; ++slot) {
      long before = pow_long(pair, slot);
      long after = pow_long(pair, size - 1 - slot);
      for (long col = 0; col < lifted.cols(); ++col) {
        CVector v = lifted.col(col);
        apply_factor(v, before, static_cast<int>(pair), after, m);
        lifted.col(col) = v;
      }
    }
    return CMatrix(dense_s.adjoint() * lifted);
  };

  std::vector<Trip> trips;
  for (const Sector& s : basis.sectors()) {
    CMatrix ql = sym_block(s.l, ml);
    CMatrix qr = sym_block(s.r, mr);
    long nl = ql.rows(), nr = qr.rows();
    for (long il2 = 0; il2 < nl; ++il2)
      for (long il = 0; il < nl; ++il)
        for (long ir2 = 0; ir2 < nr; ++ir2)
          for (long ir = 0; ir < nr; ++ir) {
            Complex v = ql(il2, il) * qr(ir2, ir);
            if (std::abs(v) < 1e-15) continue;
            for (int a = 0; a < n; ++a)
              trips.emplace_back(s.offset + (il2 * nr + ir2) * n + a,
                                 s.offset + (il * nr + ir) * n + a, v);
          }
  }
  return from_triplets(basis, trips);
}

LinOpPtr closed_form_domain_W(const TruncatedBasis& basis) {
  int n = basis.dim_n();
  std::vector<LinOpPtr> middle{diag_op(basis.mask_not_in_dom())};
  for (const Sector& s : basis.sectors()) {
    if (s.r < 1) continue;
    int ell = s.l, r = s.r - 1;
    if (ell + r >= n) continue;
    double coeff = double(n) / double(n - ell - r);
    middle.push_back(scaled_op(coeff, epr_slot_sum_op(basis, s.l, s.r, Side::R,
                                                      /*x_coord=*/true)));
  }
  LinOpPtr bij = diag_op(basis.mask_bij());
  return chain_op({bij, sum_op(std::move(middle)), bij});
}

LinOpPtr closed_form_image_W(const TruncatedBasis& basis) {
  int n = basis.dim_n();
  std::vector<LinOpPtr> middle{diag_op(basis.mask_not_in_im())};
  for (const Sector& s : basis.sectors()) {
    if (s.l < 1) continue;
    int ell = s.l - 1, r = s.r;
    if (ell + r >= n) continue;
    double coeff = double(n) / double(n - ell - r);
    middle.push_back(scaled_op(coeff, epr_slot_sum_op(basis, s.l, s.r, Side::L,
                                                      /*x_coord=*/false)));
  }
  LinOpPtr bij = diag_op(basis.mask_bij());
  return chain_op({bij, sum_op(std::move(middle)), bij});
}

}  // namespace prulab
