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
// Exact sparse operator algebra over the truncated basis
// {(a, L, R) : a in [N], |L| + |R| <= t_max}. Realizes the two-register
// path-recording operators (W^L, W^R, W, V^L, V^R, V, E^L, E^R), their
// projector algebra, and the twirl operators Q[C,D].
//
// Operators that grow the records (V^L, V^R, W^L, W^R, E^L, E^R) are
// built as B * Pi_{<= t_max - 1}, so the top sector is domain-excluded;
// identities are stated on Pi_{<= t_max - 1}.

#ifndef PRULAB_TRUNCATED_HPP
#define PRULAB_TRUNCATED_HPP

#include <Eigen/SparseCore>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "relations.hpp"

namespace prulab {

using SparseCMatrix = Eigen::SparseMatrix<Complex>;

struct Sector {
  int l = 0;
  int r = 0;
  long offset = 0;    // index of the sector's first basis element
  long pair_dim = 0;  // number of (L, R) pairs in the sector
};

/// Deterministic enumeration of the basis {(a, L, R)}: sectors ordered by
/// (l + r, l); within a sector, (L, R) pairs in canonical relation order
/// with the system index a fastest-varying. Relations range over all
/// multisets of the given sizes.
class TruncatedBasis {
 public:
  TruncatedBasis(int dim_n, int t_max);

  int dim_n() const { return n_; }
  int t_max() const { return t_max_; }
  long total_dim() const { return total_dim_; }

  const std::vector<Sector>& sectors() const { return sectors_; }
  const Sector& sector(int l, int r) const;
  bool has_sector(int l, int r) const;

  const std::vector<Relation>& relations(int size) const;
  long relation_index(const Relation& rel) const;

  long index_of(int a, const Relation& left, const Relation& right) const;
  std::tuple<int, Relation, Relation> key_at(long index) const;

  /// 0/1 diagonal masks over the basis.
  Eigen::VectorXd mask_all() const;
  Eigen::VectorXd mask_leq(int t) const;
  Eigen::VectorXd mask_sector(int l, int r) const;
  Eigen::VectorXd mask_bij() const;         // L u R bijective
  Eigen::VectorXd mask_not_in_dom() const;  // a not in Dom(L u R)
  Eigen::VectorXd mask_not_in_im() const;   // a not in Im(L u R)

  /// Sparse (N^2)^size x |R_size| isometry whose columns are the
  /// expansions of the relation states of that size. Cached.
  const SparseCMatrix& symmetrizer(int size) const;

  /// Number of basis elements predicted by the closed-form multiset
  /// count; equals total_dim().
  static long closed_form_size(int dim_n, int t_max);

 private:
  int n_;
  int t_max_;
  long total_dim_ = 0;
  std::vector<Sector> sectors_;
  std::map<std::pair<int, int>, size_t> sector_lookup_;
  std::vector<std::vector<Relation>> rels_;              // by size
  std::vector<std::map<std::string, long>> rel_index_;   // key -> position
  mutable std::mutex sym_mutex_;
  mutable std::map<int, SparseCMatrix> sym_cache_;
};

/// Matrix-free linear operator over truncated-basis coordinates.
class LinOp {
 public:
  virtual ~LinOp() = default;
  virtual long rows() const = 0;
  virtual long cols() const = 0;
  virtual void apply(const CVector& in, CVector& out) const = 0;
  virtual void apply_adjoint(const CVector& in, CVector& out) const = 0;
  CVector apply(const CVector& in) const;
  CVector apply_adjoint(const CVector& in) const;
};

using LinOpPtr = std::shared_ptr<const LinOp>;

LinOpPtr sparse_op(SparseCMatrix m);
LinOpPtr diag_op(Eigen::VectorXd mask);
LinOpPtr dense_op(CMatrix m);
LinOpPtr identity_op(long dim);
LinOpPtr scaled_op(Complex c, LinOpPtr op);
LinOpPtr sum_op(std::vector<LinOpPtr> terms);
/// Product in application order: chain_op({A, B}) applies B then A.
LinOpPtr chain_op(std::vector<LinOpPtr> factors);
LinOpPtr adjoint_op(LinOpPtr op);

/// The system-register unitary u acting on the `a` coordinate of every
/// basis element (u is N x N).
LinOpPtr block_a_op(const TruncatedBasis& basis, const CMatrix& u);

/// Q[C,D] = (C (x) D^T)^{(x)*} on L (x) (conj(C) (x) D^dag)^{(x)*} on R,
/// applied sector-blockwise through the symmetric-subspace lift. Unitary
/// on the truncated space.
LinOpPtr q_twirl_op(const TruncatedBasis& basis, const CMatrix& c, const CMatrix& d);

struct NormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

/// Largest singular value by power iteration on A^dag A with a seeded
/// start vector and a residual certificate.
NormResult power_norm(const LinOp& op, uint64_t seed, double rtol = 1e-8,
                      int max_iters = 10000);

/// Largest singular value by Lanczos on A^dag A (full reorthogonalization,
/// seeded start, residual certificate). Used for the large matrix-free
/// norm scans where plain power iteration is too slow.
NormResult lanczos_norm(const LinOp& op, uint64_t seed, double rtol = 1e-8,
                        int max_iters = 400);

/// Sparse operator bound to a basis.
struct TruncatedOperator {
  const TruncatedBasis* basis = nullptr;
  SparseCMatrix mat;

  TruncatedOperator() = default;
  TruncatedOperator(const TruncatedBasis& b, SparseCMatrix m)
      : basis(&b), mat(std::move(m)) {}

  TruncatedOperator adjoint() const;
  TruncatedOperator compose(const TruncatedOperator& rhs) const;  // this * rhs
  TruncatedOperator add(const TruncatedOperator& rhs) const;
  TruncatedOperator sub(const TruncatedOperator& rhs) const;
  TruncatedOperator scaled(Complex c) const;
  LinOpPtr as_linop() const;
  CMatrix dense(long max_dim = 4096) const;
  double max_abs_entry() const;
};

TruncatedOperator trunc_identity(const TruncatedBasis& basis);
TruncatedOperator trunc_diag(const TruncatedBasis& basis, const Eigen::VectorXd& mask);

/// Largest singular value: power iteration at relative tolerance 1e-8,
/// cross-checked against a dense SVD whenever the dimension is <= 512.
/// Throws on power-iteration non-convergence, reporting the last iterate.
double operator_norm(const TruncatedOperator& op);

// Path-recording operator builders (Part II definitions).
TruncatedOperator build_VL(const TruncatedBasis& basis);
TruncatedOperator build_VR(const TruncatedBasis& basis);
TruncatedOperator build_WL(const TruncatedBasis& basis);
TruncatedOperator build_WR(const TruncatedBasis& basis);
/// W = W^L + W^{R,dag}.
TruncatedOperator build_W(const TruncatedBasis& basis);
/// V = V^L (Id - V^R V^{R,dag}) + (Id - V^L V^{L,dag}) V^{R,dag}.
TruncatedOperator build_symmetric_V(const TruncatedBasis& basis);
/// The same operator as a lazy composition of the sparse V^L, V^R; usable
/// at basis sizes where materializing the product is too large.
LinOpPtr symmetric_v_linop(const TruncatedBasis& basis);
/// V restricted to columns with |L| + |R| <= t_cols (V . Pi_{<= t_cols}),
/// built column-sparse; the norm scans at N = 8 need this instead of the
/// full product.
TruncatedOperator build_symmetric_V_restricted(const TruncatedBasis& basis,
                                               int t_cols);
enum class Side { L, R };
TruncatedOperator build_E(const TruncatedBasis& basis, Side side);
/// Q[C,D] materialized sparsely (sector-dense); N <= 4 and t_max <= 3.
TruncatedOperator build_Q(const TruncatedBasis& basis, const CMatrix& c,
                          const CMatrix& d);

/// sum_{i in [count]} Pi^EPR on the (a, slot-i coordinate) pair of one
/// sector, where `side`/`x_coord` pick the register and the x or y
/// coordinate of each slot. Returned as a LinOp on full basis coordinates
/// (zero outside the sector).
LinOpPtr epr_slot_sum_op(const TruncatedBasis& basis, int l, int r, Side side,
                         bool x_coord);

/// Closed-form expansions of Pi^{D(W)} / Pi^{I(W)} (bijective projector
/// sandwich of the not-in-dom/im part plus weighted EPR slot sums).
LinOpPtr closed_form_domain_W(const TruncatedBasis& basis);
LinOpPtr closed_form_image_W(const TruncatedBasis& basis);

}  // namespace prulab

#endif
