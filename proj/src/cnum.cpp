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

#include "cnum.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace prulab {

CMatrix identity(int dim) { return CMatrix::Identity(dim, dim); }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CVector kron_vec(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

CVector basis_vector(int dim, int index) {
  CVector v = CVector::Zero(dim);
  v(index) = 1.0;
  return v;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  return (a - b).cwiseAbs().maxCoeff();
}

double herm_defect(const CMatrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double unitary_defect(const CMatrix& u) {
  return (u.adjoint() * u - identity(u.cols())).cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMatrix& a, double tol) {
  return a.rows() == a.cols() && herm_defect(a) < tol;
}

void validate_density(const DensityMatrix& rho, double expected_trace,
                      double tol) {
  if (rho.rows() != rho.cols())
    throw std::invalid_argument("density matrix must be square");
  if (herm_defect(rho) > tol)
    throw std::invalid_argument("density matrix not Hermitian within tolerance");
  if (std::abs(rho.trace().real() - expected_trace) > tol ||
      std::abs(rho.trace().imag()) > tol)
    throw std::invalid_argument("density matrix trace out of tolerance");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol)
    throw std::invalid_argument("density matrix has negative eigenvalue");
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& dims,
                            const std::vector<int>& keep) {
  long total = 1;
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("partial_trace: nonpositive dim");
    total *= d;
  }
  if (total != rho.rows() || rho.rows() != rho.cols())
    throw std::invalid_argument("partial_trace: dims do not match matrix");
  for (size_t i = 0; i + 1 < keep.size(); ++i)
    if (keep[i] >= keep[i + 1])
      throw std::invalid_argument("partial_trace: keep must be increasing");
  for (int k : keep)
    if (k < 0 || k >= static_cast<int>(dims.size()))
      throw std::invalid_argument("partial_trace: keep index out of range");

  std::vector<int> traced;
  for (int i = 0; i < static_cast<int>(dims.size()); ++i)
    if (!std::binary_search(keep.begin(), keep.end(), i)) traced.push_back(i);

  long keep_dim = 1, traced_dim = 1;
  for (int k : keep) keep_dim *= dims[k];
  for (int t : traced) traced_dim *= dims[t];

  // Strides of each subsystem in the big-endian composite index.
  std::vector<long> stride(dims.size());
  long s = 1;
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    stride[i] = s;
    s *= dims[i];
  }

  auto embed = [&](long sub, const std::vector<int>& subsys) {
    long idx = 0;
    for (int i = static_cast<int>(subsys.size()) - 1; i >= 0; --i) {
      int d = dims[subsys[i]];
      idx += (sub % d) * stride[subsys[i]];
      sub /= d;
    }
    return idx;
  };

  DensityMatrix out = DensityMatrix::Zero(keep_dim, keep_dim);
  for (long a = 0; a < keep_dim; ++a) {
    long ia = embed(a, keep);
    for (long b = 0; b < keep_dim; ++b) {
      long ib = embed(b, keep);
      Complex acc = 0.0;
      for (long t = 0; t < traced_dim; ++t) {
        long it = embed(t, traced);
        acc += rho(ia + it, ib + it);
      }
      out(a, b) = acc;
    }
  }
  return out;
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma,
                      double herm_tol) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw std::invalid_argument("trace_distance: shape mismatch");
  if (!is_hermitian(rho, herm_tol) || !is_hermitian(sigma, herm_tol))
    throw std::invalid_argument("trace_distance: input not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho - sigma, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double operator_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

CMatrix sample_haar_dim(int dim, uint64_t seed) {
  if (dim < 1 || dim > 64)
    throw CapacityError("sample_haar_dim: dim must be in [1, 64]");
  Rng rng(seed);
  CMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      g(i, j) = Complex(rng.gaussian(), rng.gaussian()) * M_SQRT1_2;
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    Complex d = r(j, j);
    double mag = std::abs(d);
    q.col(j) *= (mag > 0) ? d / mag : Complex(1.0, 0.0);
  }
  return q;
}

CMatrix sample_haar(int num_qubits, uint64_t seed) {
  if (num_qubits < 1 || num_qubits > 4)
    throw CapacityError("sample_haar: qubit count must be in [1, 4]");
  return sample_haar_dim(1 << num_qubits, seed);
}

CMatrix permutation_unitary(const std::vector<int>& pi) {
  int dim = static_cast<int>(pi.size());
  std::vector<bool> seen(dim, false);
  for (int v : pi) {
    if (v < 0 || v >= dim || seen[v])
      throw std::invalid_argument("permutation_unitary: not a bijection");
    seen[v] = true;
  }
  CMatrix p = CMatrix::Zero(dim, dim);
  for (int x = 0; x < dim; ++x) p(pi[x], x) = 1.0;
  return p;
}

CMatrix phase_unitary(const std::vector<int>& f, int q) {
  if (q != 2 && q != 3)
    throw std::invalid_argument("phase_unitary: q must be 2 or 3");
  int dim = static_cast<int>(f.size());
  CMatrix out = CMatrix::Zero(dim, dim);
  for (int x = 0; x < dim; ++x) {
    if (f[x] < 0 || f[x] >= q)
      throw std::invalid_argument("phase_unitary: f value out of range");
    double theta = 2.0 * M_PI * f[x] / q;
    out(x, x) = Complex(std::cos(theta), std::sin(theta));
  }
  return out;
}

long factorial(int n) {
  long r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

std::vector<int> perm_unrank(int dim, long rank) {
  std::vector<int> avail(dim);
  for (int i = 0; i < dim; ++i) avail[i] = i;
  std::vector<int> pi(dim);
  for (int i = 0; i < dim; ++i) {
    long f = factorial(dim - 1 - i);
    long k = rank / f;
    rank %= f;
    pi[i] = avail[k];
    avail.erase(avail.begin() + k);
  }
  return pi;
}

long perm_rank(const std::vector<int>& pi) {
  int dim = static_cast<int>(pi.size());
  std::vector<int> avail(dim);
  for (int i = 0; i < dim; ++i) avail[i] = i;
  long rank = 0;
  for (int i = 0; i < dim; ++i) {
    auto it = std::find(avail.begin(), avail.end(), pi[i]);
    rank += (it - avail.begin()) * factorial(dim - 1 - i);
    avail.erase(it);
  }
  return rank;
}

std::vector<int> perm_inverse(const std::vector<int>& pi) {
  std::vector<int> inv(pi.size());
  for (size_t x = 0; x < pi.size(); ++x) inv[pi[x]] = static_cast<int>(x);
  return inv;
}

CMatrix eq_projector(int dim) {
  CMatrix out = CMatrix::Zero(dim * dim, dim * dim);
  for (int x = 0; x < dim; ++x) out(x * dim + x, x * dim + x) = 1.0;
  return out;
}

CMatrix sym2_projector(int dim) {
  CMatrix swap = CMatrix::Zero(dim * dim, dim * dim);
  for (int x = 0; x < dim; ++x)
    for (int y = 0; y < dim; ++y) swap(y * dim + x, x * dim + y) = 1.0;
  return 0.5 * (identity(dim * dim) + swap);
}

CVector epr_state(int dim) {
  CVector v = CVector::Zero(dim * dim);
  for (int x = 0; x < dim; ++x) v(x * dim + x) = 1.0 / std::sqrt(double(dim));
  return v;
}

CMatrix dist_projector(int dim, int t) {
  long total = 1;
  for (int i = 0; i < t; ++i) total *= dim;
  if (total > (1 << 20)) throw CapacityError("dist_projector: space too large");
  CMatrix out = CMatrix::Zero(total, total);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    std::vector<int> digits(t);
    for (int i = t - 1; i >= 0; --i) {
      digits[i] = rest % dim;
      rest /= dim;
    }
    bool distinct = true;
    for (int i = 0; i < t && distinct; ++i)
      for (int j = i + 1; j < t; ++j)
        if (digits[i] == digits[j]) {
          distinct = false;
          break;
        }
    if (distinct) out(idx, idx) = 1.0;
  }
  return out;
}

CMatrix canonicalize_phase(const CMatrix& u, double tol) {
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      Complex v = u(i, j);
      if (std::abs(v) > tol) return u * (std::conj(v) / std::abs(v));
    }
  }
  return u;
}

namespace {

// Hash key for closure: canonicalized entries rounded to a fixed grid.
std::string matrix_key(const CMatrix& u) {
  std::string key;
  key.reserve(u.size() * 8);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      auto push = [&key](double v) {
        auto r = static_cast<int32_t>(std::llround(v * 1e6));
        key.append(reinterpret_cast<const char*>(&r), sizeof r);
      };
      push(u(i, j).real());
      push(u(i, j).imag());
    }
  }
  return key;
}

}  // namespace

CliffordGroup::CliffordGroup(int num_qubits) : n_(num_qubits) {
  if (num_qubits < 1 || num_qubits > 2)
    throw CapacityError("CliffordGroup: enumeration supported for n in {1, 2}");
  int dim = 1 << num_qubits;

  std::vector<CMatrix> gens;
  CMatrix h(2, 2), s(2, 2);
  h << 1, 1, 1, -1;
  h *= M_SQRT1_2;
  s << 1, 0, 0, Complex(0, 1);
  if (num_qubits == 1) {
    gens = {h, s};
  } else {
    gens.push_back(kron(h, identity(2)));
    gens.push_back(kron(identity(2), h));
    gens.push_back(kron(s, identity(2)));
    gens.push_back(kron(identity(2), s));
    CMatrix cz = identity(4);
    cz(3, 3) = -1;
    gens.push_back(cz);
  }

  std::map<std::string, size_t> seen;
  std::vector<CMatrix> frontier{canonicalize_phase(identity(dim))};
  seen[matrix_key(frontier[0])] = 0;
  elements_.push_back(frontier[0]);
  while (!frontier.empty()) {
    std::vector<CMatrix> next;
    for (const CMatrix& u : frontier) {
      for (const CMatrix& g : gens) {
        CMatrix v = canonicalize_phase(g * u);
        std::string key = matrix_key(v);
        if (seen.emplace(key, elements_.size()).second) {
          elements_.push_back(v);
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
  }

  // |C_n| = 2^{n^2 + 2n} * prod_{j=1..n} (4^j - 1), modulo global phase.
  long expected = 1L << (num_qubits * num_qubits + 2 * num_qubits);
  for (int j = 1; j <= num_qubits; ++j) expected *= (1L << (2 * j)) - 1;
  if (static_cast<long>(elements_.size()) != expected)
    throw std::runtime_error("CliffordGroup: closure order mismatch");
}

const CliffordGroup& CliffordGroup::instance(int num_qubits) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<CliffordGroup>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(num_qubits);
  if (it == cache.end()) {
    it = cache.emplace(num_qubits,
                       std::unique_ptr<CliffordGroup>(new CliffordGroup(num_qubits)))
             .first;
  }
  return *it->second;
}

CMatrix clifford_sample(int num_qubits, uint64_t seed) {
  const CliffordGroup& group = CliffordGroup::instance(num_qubits);
  Rng rng(seed);
  return group.element(rng.uniform_int(group.size()));
}

UnitaryEnsemble UnitaryEnsemble::haar(int num_qubits, uint64_t seed) {
  if (num_qubits < 1 || num_qubits > 4)
    throw CapacityError("UnitaryEnsemble::haar: qubit count must be in [1, 4]");
  return haar_dim(1 << num_qubits, seed);
}

UnitaryEnsemble UnitaryEnsemble::haar_dim(int dim, uint64_t seed) {
  UnitaryEnsemble e;
  e.kind_ = EnsembleKind::haar;
  e.dim_ = dim;
  e.seed_ = seed;
  return e;
}

UnitaryEnsemble UnitaryEnsemble::clifford(int num_qubits) {
  UnitaryEnsemble e;
  e.kind_ = EnsembleKind::clifford;
  e.dim_ = 1 << num_qubits;
  const CliffordGroup& g = CliffordGroup::instance(num_qubits);
  e.list_.assign(g.elements().begin(), g.elements().end());
  return e;
}

UnitaryEnsemble UnitaryEnsemble::enumerated(std::vector<CMatrix> list) {
  if (list.empty())
    throw std::invalid_argument("UnitaryEnsemble::enumerated: empty list");
  UnitaryEnsemble e;
  e.kind_ = EnsembleKind::enumerated_list;
  e.dim_ = static_cast<int>(list[0].rows());
  for (const CMatrix& u : list) {
    if (u.rows() != e.dim_ || u.cols() != e.dim_)
      throw std::invalid_argument("UnitaryEnsemble::enumerated: mixed dims");
    if (unitary_defect(u) > 1e-10)
      throw std::invalid_argument("UnitaryEnsemble::enumerated: non-unitary element");
  }
  e.list_ = std::move(list);
  return e;
}

UnitaryEnsemble UnitaryEnsemble::single(CMatrix u) {
  if (unitary_defect(u) > 1e-10)
    throw std::invalid_argument("UnitaryEnsemble::single: non-unitary element");
  UnitaryEnsemble e;
  e.kind_ = EnsembleKind::single;
  e.dim_ = static_cast<int>(u.rows());
  e.list_.push_back(std::move(u));
  return e;
}

size_t UnitaryEnsemble::size() const {
  if (!enumerable())
    throw std::logic_error("UnitaryEnsemble::size: not enumerable");
  return list_.size();
}

const CMatrix& UnitaryEnsemble::element(size_t i) const {
  if (!enumerable())
    throw std::logic_error("UnitaryEnsemble::element: not enumerable");
  return list_.at(i);
}

CMatrix UnitaryEnsemble::draw(uint64_t index) const {
  switch (kind_) {
    case EnsembleKind::haar:
      return sample_haar_dim(dim_, derive_seed(seed_, index));
    case EnsembleKind::single:
      return list_[0];
    case EnsembleKind::clifford:
    case EnsembleKind::enumerated_list: {
      Rng rng(derive_seed(seed_, index));
      return list_[rng.uniform_int(list_.size())];
    }
  }
  throw std::logic_error("UnitaryEnsemble::draw: bad kind");
}

CMatrix twirl_average(const UnitaryEnsemble& ensemble, const CMatrix& observable,
                      TwirlMode mode, int mc_samples) {
  int dim = ensemble.dim();
  if (observable.rows() != dim * dim || observable.cols() != dim * dim)
    throw std::invalid_argument("twirl_average: observable must be N^2 x N^2");
  auto term = [&](const CMatrix& u) {
    CMatrix w = (mode == TwirlMode::UU) ? kron(u, u) : kron(u, u.conjugate());
    return CMatrix(w.adjoint() * observable * w);
  };
  CMatrix acc = CMatrix::Zero(dim * dim, dim * dim);
  if (ensemble.enumerable()) {
    for (size_t i = 0; i < ensemble.size(); ++i) acc += term(ensemble.element(i));
    return acc / double(ensemble.size());
  }
  for (int k = 0; k < mc_samples; ++k) acc += term(ensemble.draw(k));
  return acc / double(mc_samples);
}

}  // namespace prulab
