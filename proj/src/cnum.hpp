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
// Dense complex linear algebra, metric computations, and unitary-ensemble
// sampling/enumeration. Basis index convention for composite registers is
// big-endian over the listed subsystems: for dims (d0, d1, ...), basis
// index = ((i0 * d1 + i1) * d2 + i2) ... with the first subsystem most
// significant. Every other module follows this convention.

#ifndef PRULAB_CNUM_HPP
#define PRULAB_CNUM_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace prulab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
// Density matrices share the dense representation; invariants (Hermitian,
// PSD, unit or stated trace) are enforced by the validators below.
using DensityMatrix = Eigen::MatrixXcd;

/// Raised when a requested computation exceeds the desk-scale caps
/// (dimension, enumeration size, query budget).
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Tolerance ladder: exact identities / isometry checks / iterative norms.
inline constexpr double kTolExact = 1e-12;
inline constexpr double kTolIsometry = 1e-10;
inline constexpr double kTolIterative = 1e-6;

CMatrix identity(int dim);

/// Kronecker product, left factor most significant.
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron_vec(const CVector& a, const CVector& b);

CVector basis_vector(int dim, int index);

inline CMatrix dag(const CMatrix& a) { return a.adjoint(); }

/// Max absolute entry of a - b.
double max_abs_diff(const CMatrix& a, const CMatrix& b);
double herm_defect(const CMatrix& a);
double unitary_defect(const CMatrix& u);

bool is_hermitian(const CMatrix& a, double tol);

/// Checks the DensityMatrix invariants: Hermitian to `tol`, eigenvalues
/// >= -tol, trace within `tol` of `expected_trace`.
void validate_density(const DensityMatrix& rho, double expected_trace = 1.0,
                      double tol = 1e-9);

/// Reduced density matrix on the kept subsystems (ordering preserved).
/// `dims` are the subsystem dimensions, most significant first; `keep`
/// lists subsystem indices to keep, strictly increasing.
DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& dims,
                            const std::vector<int>& keep);

/// Half the trace norm of rho - sigma. Both inputs must be Hermitian
/// within `herm_tol`.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma,
                      double herm_tol = 1e-8);

/// Largest singular value (dense SVD).
double operator_norm(const CMatrix& a);

/// Exactly Haar-distributed random unitary on a `dim`-dimensional space:
/// complex Ginibre matrix, QR, then the diagonal phase correction
/// Q <- Q * diag(r_jj / |r_jj|) that removes the QR convention bias.
/// Deterministic per seed.
CMatrix sample_haar_dim(int dim, uint64_t seed);

/// Haar-random unitary on n qubits, 1 <= n <= 4.
CMatrix sample_haar(int num_qubits, uint64_t seed);

/// P_pi = sum_x |pi(x)><x| for a bijection pi on [N].
CMatrix permutation_unitary(const std::vector<int>& pi);

/// F_f = diag(omega_q^{f(x)}) with f(x) in {0..q-1}, q in {2, 3}.
CMatrix phase_unitary(const std::vector<int>& f, int q);

// Lexicographic enumeration of Sym_N as one-line notations over {0..N-1}.
long factorial(int n);
std::vector<int> perm_unrank(int dim, long rank);
long perm_rank(const std::vector<int>& pi);
std::vector<int> perm_inverse(const std::vector<int>& pi);

/// Equality projector sum_x |x><x| (x) |x><x| on C^N (x) C^N.
CMatrix eq_projector(int dim);
/// Projector onto the symmetric subspace of C^N (x) C^N.
CMatrix sym2_projector(int dim);
/// |EPR_N> = N^{-1/2} sum_x |x>|x>.
CVector epr_state(int dim);
/// Projector onto t-tuples of pairwise-distinct indices in (C^N)^{(x) t}.
CMatrix dist_projector(int dim, int t);

/// The n-qubit Clifford group modulo global phase, n in {1, 2}, obtained
/// by closure of {H, S, CZ} layer products. Matrices are canonicalized by
/// making the first nonzero entry positive real.
class CliffordGroup {
 public:
  static const CliffordGroup& instance(int num_qubits);

  int num_qubits() const { return n_; }
  size_t size() const { return elements_.size(); }
  const CMatrix& element(size_t i) const { return elements_[i]; }
  const std::vector<CMatrix>& elements() const { return elements_; }

 private:
  explicit CliffordGroup(int num_qubits);
  int n_;
  std::vector<CMatrix> elements_;
};

CMatrix clifford_sample(int num_qubits, uint64_t seed);

/// Canonical global-phase fix: first nonzero entry (row-major scan) made
/// positive real.
CMatrix canonicalize_phase(const CMatrix& u, double tol = 1e-9);

enum class EnsembleKind { haar, clifford, enumerated_list, single };

/// A distribution over unitaries of one dimension. Sampled kinds are
/// deterministic per (seed, draw index); enumerable kinds expose exact
/// iteration.
class UnitaryEnsemble {
 public:
  static UnitaryEnsemble haar(int num_qubits, uint64_t seed);
  static UnitaryEnsemble haar_dim(int dim, uint64_t seed);
  static UnitaryEnsemble clifford(int num_qubits);
  static UnitaryEnsemble enumerated(std::vector<CMatrix> list);
  static UnitaryEnsemble single(CMatrix u);

  EnsembleKind kind() const { return kind_; }
  int dim() const { return dim_; }
  uint64_t seed() const { return seed_; }
  bool enumerable() const {
    return kind_ != EnsembleKind::haar;
  }
  size_t size() const;

  /// Enumerable kinds only.
  const CMatrix& element(size_t i) const;
  /// Draw `index` of the stream (haar kinds); enumerable kinds draw a
  /// uniform index.
  CMatrix draw(uint64_t index) const;

 private:
  UnitaryEnsemble() = default;
  EnsembleKind kind_ = EnsembleKind::single;
  int dim_ = 0;
  uint64_t seed_ = 0;
  std::vector<CMatrix> list_;  // enumerated / single
};

enum class TwirlMode { UU, UConj };

/// E[(U (x) U)^dag M (U (x) U)] or E[(U (x) conj(U))^dag M (U (x) conj(U))].
/// Exact when the ensemble is enumerable, otherwise a Monte-Carlo mean
/// over `mc_samples` draws.
CMatrix twirl_average(const UnitaryEnsemble& ensemble, const CMatrix& observable,
                      TwirlMode mode, int mc_samples = 4096);

}  // namespace prulab

#endif
