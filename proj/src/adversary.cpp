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
// See the License for specific language governing permissions and
// limitations under the License.

#include "adversary.hpp"

#include <json.hpp>
#include <cmath>

namespace prulab {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(int v) {
  int n = 0;
  while ((1 << n) < v) ++n;
  if ((1 << n) != v) throw std::invalid_argument("dimension is not a power of two");
  return n;
}

// Compensated (Kahan) accumulation of density matrices plus a second
// moment for Monte-Carlo standard errors.
class McAccumulator {
 public:
  explicit McAccumulator(long dim)
      : sum_(CMatrix::Zero(dim, dim)),
        comp_(CMatrix::Zero(dim, dim)),
        sq_sum_(Eigen::MatrixXd::Zero(dim, dim)),
        sq_comp_(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(const DensityMatrix& rho) {
    CMatrix y = rho - comp_;
    CMatrix t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
    Eigen::MatrixXd sq = rho.cwiseAbs2();
    Eigen::MatrixXd ys = sq - sq_comp_;
    Eigen::MatrixXd ts = sq_sum_ + ys;
    sq_comp_ = (ts - sq_sum_) - ys;
    sq_sum_ = ts;
    ++count_;
  }

  long count() const { return count_; }
  DensityMatrix mean() const { return sum_ / double(count_); }

  // Per-entry variance estimate E|x|^2 - |mean|^2 (complex entries).
  Eigen::MatrixXd entry_variance() const {
    DensityMatrix m = mean();
    Eigen::MatrixXd var = sq_sum_ / double(count_) - m.cwiseAbs2();
    return var.cwiseMax(0.0) * (double(count_) / std::max<long>(count_ - 1, 1));
  }

  double se_max_entry() const {
    return std::sqrt(entry_variance().maxCoeff() / double(count_));
  }

  // SE proxy for trace-distance checks: 0.5 * sqrt(d * E||delta||_F^2),
  // using ||M||_1 <= sqrt(d) ||M||_F.
  double se_trace() const {
    double frob2 = entry_variance().sum() / double(count_);
    return 0.5 * std::sqrt(double(sum_.rows()) * frob2);
  }

 private:
  CMatrix sum_, comp_;
  Eigen::MatrixXd sq_sum_, sq_comp_;
  long count_ = 0;
};

}  // namespace

AdversaryProgram::AdversaryProgram(int sys_dim, int anc_qubits,
                                   std::vector<GateSpec> gates, std::vector<bool> dirs)
    : sys_dim_(sys_dim), anc_qubits_(anc_qubits), gates_(std::move(gates)),
      dirs_(std::move(dirs)) {
  if (sys_dim < 2) throw std::invalid_argument("AdversaryProgram: sys_dim < 2");
  if (anc_qubits < 0 || anc_qubits > 4)
    throw CapacityError("AdversaryProgram: ancilla width out of range");
  if (gates_.empty()) throw std::invalid_argument("AdversaryProgram: t must be >= 1");
  if (dirs_.empty()) dirs_.assign(gates_.size(), false);
  if (dirs_.size() != gates_.size())
    throw std::invalid_argument("AdversaryProgram: dirs/gates length mismatch");
  for (const GateSpec& g : gates_) {
    if (!g.seeded && (g.matrix.rows() != ab_dim() || unitary_defect(g.matrix) > 1e-10))
      throw std::invalid_argument("AdversaryProgram: explicit gate not unitary on A(x)B");
  }
}

AdversaryProgram AdversaryProgram::seeded(int sys_dim, int anc_qubits, int t,
                                          uint64_t seed, std::vector<bool> dirs) {
  std::vector<GateSpec> gates(t);
  for (int i = 0; i < t; ++i) {
    gates[i].seeded = true;
    gates[i].seed = derive_seed(seed, i);
  }
  return AdversaryProgram(sys_dim, anc_qubits, std::move(gates), std::move(dirs));
}

bool AdversaryProgram::forward_only() const {
  for (bool b : dirs_)
    if (b) return false;
  return true;
}

CMatrix AdversaryProgram::gate(int i) const {
  const GateSpec& g = gates_.at(i);
  if (!g.seeded) return g.matrix;
  return sample_haar_dim(static_cast<int>(ab_dim()), g.seed);
}

std::string AdversaryProgram::to_json() const {
  if (!is_power_of_two(sys_dim_))
    throw std::invalid_argument("to_json: system dimension must be a power of two");
  nlohmann::json j;
  j["n"] = log2_exact(sys_dim_);
  j["m"] = anc_qubits_;
  j["t"] = static_cast<int>(gates_.size());
  nlohmann::json dirs = nlohmann::json::array();
  for (bool b : dirs_) dirs.push_back(b ? 1 : 0);
  j["dirs"] = std::move(dirs);
  nlohmann::json gates = nlohmann::json::array();
  for (const GateSpec& g : gates_) {
    if (g.seeded) {
      gates.push_back(g.seed);
    } else {
      nlohmann::json m = nlohmann::json::array();
      for (Eigen::Index r = 0; r < g.matrix.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < g.matrix.cols(); ++c)
          row.push_back({g.matrix(r, c).real(), g.matrix(r, c).imag()});
        m.push_back(std::move(row));
      }
      gates.push_back(std::move(m));
    }
  }
  j["gates"] = std::move(gates);
  return j.dump();
}

AdversaryProgram AdversaryProgram::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  int n = j.at("n").get<int>();
  int m = j.at("m").get<int>();
  int t = j.at("t").get<int>();
  std::vector<bool> dirs;
  for (const auto& d : j.at("dirs")) dirs.push_back(d.get<int>() != 0);
  std::vector<GateSpec> gates;
  for (const auto& g : j.at("gates")) {
    GateSpec spec;
    if (g.is_number()) {
      spec.seeded = true;
      spec.seed = g.get<uint64_t>();
    } else {
      spec.seeded = false;
      long rows = static_cast<long>(g.size());
      spec.matrix = CMatrix(rows, rows);
      for (long r = 0; r < rows; ++r)
        for (long c = 0; c < rows; ++c)
          spec.matrix(r, c) = Complex(g[r][c][0].get<double>(), g[r][c][1].get<double>());
    }
    gates.push_back(std::move(spec));
  }
  if (static_cast<int>(gates.size()) != t)
    throw std::invalid_argument("from_json: t does not match gates length");
  return AdversaryProgram(1 << n, m, std::move(gates), std::move(dirs));
}

// ---------------------------------------------------------------------------
// OracleSpec factories.

OracleSpec OracleSpec::concrete(CMatrix u) {
  if (unitary_defect(u) > 1e-10)
    throw std::invalid_argument("OracleSpec::concrete: non-unitary oracle");
  OracleSpec s;
  s.kind = OracleKind::concrete_unitary;
  s.u = std::move(u);
  return s;
}

OracleSpec OracleSpec::haar_mc_spec(int mc_samples, uint64_t seed) {
  OracleSpec s;
  s.kind = OracleKind::haar_mc;
  s.mc_samples = mc_samples;
  s.seed = seed;
  return s;
}

OracleSpec OracleSpec::pf(UnitaryEnsemble design) {
  if (!design.enumerable())
    throw std::invalid_argument("OracleSpec::pf: exact averaging needs an enumerable design");
  OracleSpec s;
  s.kind = OracleKind::pf_exact;
  s.design = std::move(design);
  return s;
}

OracleSpec OracleSpec::spru(UnitaryEnsemble design) {
  if (!design.enumerable())
    throw std::invalid_argument("OracleSpec::spru: exact averaging needs an enumerable design");
  OracleSpec s;
  s.kind = OracleKind::spru_exact;
  s.design = std::move(design);
  return s;
}

OracleSpec OracleSpec::purified_pfo() {
  OracleSpec s;
  s.kind = OracleKind::pfo;
  return s;
}

OracleSpec OracleSpec::purified_spfo() {
  OracleSpec s;
  s.kind = OracleKind::spfo;
  return s;
}

OracleSpec OracleSpec::path_recording() {
  OracleSpec s;
  s.kind = OracleKind::v_oracle;
  return s;
}

OracleSpec OracleSpec::path_recording_symmetric() {
  OracleSpec s;
  s.kind = OracleKind::v_symmetric;
  return s;
}

OracleSpec OracleSpec::path_recording_restricted(RestrictedSet set) {
  OracleSpec s;
  s.kind = OracleKind::v_restricted;
  s.set = std::move(set);
  return s;
}

OracleSpec OracleSpec::glued_spec(int sys_qubits, std::vector<GluedLayer> layers,
                                  int mc_samples, uint64_t seed) {
  OracleSpec s;
  s.kind = OracleKind::glued;
  s.sys_qubits = sys_qubits;
  s.layers = std::move(layers);
  s.mc_samples = mc_samples;
  s.seed = seed;
  if (s.layers.empty() || s.layers.size() > 2)
    throw std::invalid_argument("glued_spec: one or two layers supported");
  for (const GluedLayer& l : s.layers)
    if (l.offset_qubits < 0 || l.width_qubits < 1 ||
        l.offset_qubits + l.width_qubits > sys_qubits)
      throw std::invalid_argument("glued_spec: layer outside the system register");
  return s;
}

// ---------------------------------------------------------------------------
// Purified run drivers.

namespace {

PurifiedState relation_vacuum(int sys_dim, int anc_qubits, int rel_dim) {
  PurifiedState s(KeyKind::relation, sys_dim, anc_qubits, 2);
  CVector v = CVector::Zero(s.vec_dim());
  v(0) = 1.0;
  s.set(RelKey{Relation(rel_dim)}, std::move(v));
  return s;
}

PurifiedState pair_vacuum(int sys_dim, int anc_qubits, int left_dim, int right_dim,
                          int q = 3) {
  PurifiedState s(KeyKind::relation_pair, sys_dim, anc_qubits, q);
  CVector v = CVector::Zero(s.vec_dim());
  v(0) = 1.0;
  s.set(RelPairKey{Relation(left_dim), Relation(right_dim)}, std::move(v));
  return s;
}

void require_forward_only(const AdversaryProgram& adv, const char* what) {
  if (!adv.forward_only())
    throw std::invalid_argument(std::string(what) + ": inverse query to a forward-only oracle");
}

CMatrix embed_sys(const AdversaryProgram& adv, const CMatrix& g) {
  return embed_block(g, whole_system(adv.sys_dim()), adv.anc_qubits());
}

}  // namespace

PurifiedState v_run_state(const AdversaryProgram& adv, const CMatrix* g) {
  require_forward_only(adv, "v_run_state");
  PurifiedState s = relation_vacuum(adv.sys_dim(), adv.anc_qubits(), adv.sys_dim());
  for (int i = 0; i < adv.queries(); ++i) {
    s = s.apply_system_unitary(adv.gate(i));
    if (g) s = s.apply_system_unitary(embed_sys(adv, *g));
    s = v_query(s);
  }
  return s;
}

PurifiedState v_restricted_run_state(const AdversaryProgram& adv,
                                     const RestrictedSet& set, const CMatrix* g) {
  require_forward_only(adv, "v_restricted_run_state");
  PurifiedState s = relation_vacuum(adv.sys_dim(), adv.anc_qubits(), adv.sys_dim());
  for (int i = 0; i < adv.queries(); ++i) {
    s = s.apply_system_unitary(adv.gate(i));
    if (g) s = s.apply_system_unitary(embed_sys(adv, *g));
    s = v_restricted_query(s, set);
  }
  return s;
}

PurifiedState pfo_run_state(const AdversaryProgram& adv, const CMatrix* g) {
  require_forward_only(adv, "pfo_run_state");
  PurifiedState s = pfo_initial_state(adv.sys_dim(), adv.anc_qubits());
  for (int i = 0; i < adv.queries(); ++i) {
    s = s.apply_system_unitary(adv.gate(i));
    if (g) s = s.apply_system_unitary(embed_sys(adv, *g));
    s = pfo_query(s);
  }
  return s;
}

PurifiedState spfo_run_state(const AdversaryProgram& adv, const CMatrix& c,
                             const CMatrix& d) {
  PurifiedState s = spfo_initial_state(adv.sys_dim(), adv.anc_qubits());
  CMatrix ce = embed_sys(adv, c), de = embed_sys(adv, d);
  CMatrix ce_dag = ce.adjoint(), de_dag = de.adjoint();
  for (int i = 0; i < adv.queries(); ++i) {
    s = s.apply_system_unitary(adv.gate(i));
    if (!adv.dirs()[i]) {
      s = spfo_query(s.apply_system_unitary(ce), false).apply_system_unitary(de);
    } else {
      s = spfo_query(s.apply_system_unitary(de_dag), true).apply_system_unitary(ce_dag);
    }
  }
  return s;
}

PurifiedState spfo_projected_run_state(const AdversaryProgram& adv, const CMatrix& c,
                                       const CMatrix& d, const TruncatedBasis& basis,
                                       const TruncatedOperator& pdw,
                                       const TruncatedOperator& piw) {
  PurifiedState s = spfo_initial_state(adv.sys_dim(), adv.anc_qubits());
  CMatrix ce = embed_sys(adv, c), de = embed_sys(adv, d);
  CMatrix ce_dag = ce.adjoint(), de_dag = de.adjoint();
  int cap = basis.t_max();
  for (int i = 0; i < adv.queries(); ++i) {
    s = s.apply_system_unitary(adv.gate(i));
    if (!adv.dirs()[i]) {
      s = spfo_projected(s.apply_system_unitary(ce), basis, pdw, cap);
      s = spfo_query(s, false).apply_system_unitary(de);
    } else {
      s = spfo_projected(s.apply_system_unitary(de_dag), basis, piw, cap);
      s = spfo_query(s, true).apply_system_unitary(ce_dag);
    }
  }
  return s;
}

PurifiedState w_run_state(const AdversaryProgram& adv, const CMatrix& c,
                          const CMatrix& d) {
  PurifiedState s =
      pair_vacuum(adv.sys_dim(), adv.anc_qubits(), adv.sys_dim(), adv.sys_dim());
  CMatrix ce = embed_sys(adv, c), de = embed_sys(adv, d);
  CMatrix ce_dag = ce.adjoint(), de_dag = de.adjoint();
  for (int i = 0; i < adv.queries(); ++i) {
    s = s.apply_system_unitary(adv.gate(i));
    if (!adv.dirs()[i]) {
      s = w_query(s.apply_system_unitary(ce), false).apply_system_unitary(de);
    } else {
      s = w_query(s.apply_system_unitary(de_dag), true).apply_system_unitary(ce_dag);
    }
  }
  return s;
}

PurifiedState vsym_run_state(const AdversaryProgram& adv, const TruncatedBasis& basis,
                             const TruncatedOperator& v) {
  PurifiedState s =
      pair_vacuum(adv.sys_dim(), adv.anc_qubits(), adv.sys_dim(), adv.sys_dim());
  TruncatedOperator vdag = v.adjoint();
  for (int i = 0; i < adv.queries(); ++i) {
    s = s.apply_system_unitary(adv.gate(i));
    s = apply_truncated(adv.dirs()[i] ? vdag : v, s);
  }
  return s;
}

// ---------------------------------------------------------------------------
// run().

namespace {

DensityMatrix concrete_run(const AdversaryProgram& adv, const CMatrix& oracle) {
  CMatrix oe = embed_block(oracle, whole_system(adv.sys_dim()), adv.anc_qubits());
  CMatrix oe_dag = oe.adjoint();
  CVector psi = CVector::Zero(adv.ab_dim());
  psi(0) = 1.0;
  for (int i = 0; i < adv.queries(); ++i) {
    psi = adv.gate(i) * psi;
    psi = (adv.dirs()[i] ? oe_dag : oe) * psi;
  }
  return psi * psi.adjoint();
}

RunResult exact_result(DensityMatrix rho) {
  RunResult r;
  r.trace = rho.trace().real();
  r.rho = std::move(rho);
  return r;
}

std::vector<int> unrank_function(long f, int dim, int q) {
  std::vector<int> out(dim);
  for (int x = 0; x < dim; ++x) {
    out[x] = static_cast<int>(f % q);
    f /= q;
  }
  return out;
}

RunResult run_pf_exact(const AdversaryProgram& adv, const UnitaryEnsemble& design) {
  require_forward_only(adv, "run(pf_exact)");
  int N = adv.sys_dim();
  if (design.dim() != N) throw std::invalid_argument("run(pf_exact): design dim mismatch");
  long nfact = factorial(N);
  long qn = 1L << N;
  DensityMatrix acc = DensityMatrix::Zero(adv.ab_dim(), adv.ab_dim());
  if (nfact * qn * static_cast<long>(design.size()) <= 200000) {
    for (size_t ci = 0; ci < design.size(); ++ci) {
      for (long rank = 0; rank < nfact; ++rank) {
        CMatrix p = permutation_unitary(perm_unrank(N, rank));
        for (long f = 0; f < qn; ++f) {
          CMatrix o = p * phase_unitary(unrank_function(f, N, 2), 2) * design.element(ci);
          acc += concrete_run(adv, o);
        }
      }
    }
    acc /= double(design.size() * nfact * qn);
  } else {
    // Purified route: one pfo run per design element.
    for (size_t ci = 0; ci < design.size(); ++ci) {
      CMatrix c = design.element(ci);
      acc += pfo_run_state(adv, &c).reduce_to_adversary();
    }
    acc /= double(design.size());
  }
  return exact_result(std::move(acc));
}

RunResult run_spru_exact(const AdversaryProgram& adv, const UnitaryEnsemble& design) {
  int N = adv.sys_dim();
  if (design.dim() != N) throw std::invalid_argument("run(spru_exact): design dim mismatch");
  long nfact = factorial(N);
  long qn = 1;
  for (int i = 0; i < N; ++i) qn *= 3;
  long pairs = static_cast<long>(design.size()) * design.size();
  if (nfact * qn * pairs > 2000000)
    throw CapacityError("run(spru_exact): enumeration too large; use block runners");
  DensityMatrix acc = DensityMatrix::Zero(adv.ab_dim(), adv.ab_dim());
  for (size_t ci = 0; ci < design.size(); ++ci) {
    for (size_t di = 0; di < design.size(); ++di) {
      for (long rank = 0; rank < nfact; ++rank) {
        CMatrix p = permutation_unitary(perm_unrank(N, rank));
        for (long f = 0; f < qn; ++f) {
          CMatrix o = design.element(di) * p *
                      phase_unitary(unrank_function(f, N, 3), 3) * design.element(ci);
          acc += concrete_run(adv, o);
        }
      }
    }
  }
  acc /= double(pairs * nfact * qn);
  return exact_result(std::move(acc));
}

struct GluedBlocks {
  BlockSpec bs;
  uint32_t y_mask = 0;  // for restricted layers
};

GluedBlocks layer_blocks(int sys_qubits, const GluedLayer& layer) {
  GluedBlocks g;
  int below = sys_qubits - layer.offset_qubits - layer.width_qubits;
  g.bs.hi = 1 << layer.offset_qubits;
  g.bs.blk = 1 << layer.width_qubits;
  g.bs.lo = 1 << below;
  return g;
}

RunResult run_glued_spec(const AdversaryProgram& adv, const OracleSpec& spec) {
  require_forward_only(adv, "run(glued)");
  if (adv.sys_dim() != (1 << spec.sys_qubits))
    throw std::invalid_argument("run(glued): system width mismatch");
  int n_restricted = 0;
  for (const GluedLayer& l : spec.layers)
    if (!l.haar) ++n_restricted;

  auto restricted_block = [&](const GluedLayer& l) {
    if (!l.set) throw std::invalid_argument("run(glued): restricted layer without a set");
    return layer_blocks(spec.sys_qubits, l).bs;
  };

  if (n_restricted == 0) {
    McAccumulator acc(adv.ab_dim());
    for (int k = 0; k < spec.mc_samples; ++k) {
      CVector psi = CVector::Zero(adv.ab_dim());
      psi(0) = 1.0;
      std::vector<CMatrix> embedded;
      for (size_t li = 0; li < spec.layers.size(); ++li) {
        BlockSpec bs = layer_blocks(spec.sys_qubits, spec.layers[li]).bs;
        CMatrix u = sample_haar_dim(bs.blk,
                                    derive_seed(spec.seed, k * spec.layers.size() + li));
        embedded.push_back(embed_block(u, bs, adv.anc_qubits()));
      }
      for (int i = 0; i < adv.queries(); ++i) {
        psi = adv.gate(i) * psi;
        for (const CMatrix& e : embedded) psi = e * psi;
      }
      acc.add(psi * psi.adjoint());
    }
    RunResult r;
    r.rho = acc.mean();
    r.trace = r.rho.trace().real();
    r.mc_samples = spec.mc_samples;
    r.se_max_entry = acc.se_max_entry();
    r.se_trace = acc.se_trace();
    return r;
  }

  if (n_restricted == 2 && spec.layers.size() == 2) {
    // Exact run with one relation register per layer.
    BlockSpec b0 = restricted_block(spec.layers[0]);
    BlockSpec b1 = restricted_block(spec.layers[1]);
    PurifiedState s = pair_vacuum(adv.sys_dim(), adv.anc_qubits(), b0.blk, b1.blk, 2);
    for (int i = 0; i < adv.queries(); ++i) {
      s = s.apply_system_unitary(adv.gate(i));
      s = v_restricted_pair_query(s, PairSide::left, *spec.layers[0].set, b0);
      s = v_restricted_pair_query(s, PairSide::right, *spec.layers[1].set, b1);
    }
    return exact_result(s.reduce_to_adversary());
  }

  if (n_restricted == 1 && spec.layers.size() <= 2) {
    // Monte-Carlo over the Haar layer, exact path recording on the other.
    McAccumulator acc(adv.ab_dim());
    size_t rest_idx = spec.layers[0].haar ? 1 : 0;
    const GluedLayer& rest = spec.layers[rest_idx];
    BlockSpec rb = restricted_block(rest);
    int samples = (spec.layers.size() == 2) ? spec.mc_samples : 1;
    for (int k = 0; k < samples; ++k) {
      PurifiedState s = relation_vacuum(adv.sys_dim(), adv.anc_qubits(), rb.blk);
      CMatrix haar_embedded;
      size_t haar_idx = 1 - rest_idx;
      if (spec.layers.size() == 2) {
        BlockSpec hb = layer_blocks(spec.sys_qubits, spec.layers[haar_idx]).bs;
        haar_embedded = embed_block(sample_haar_dim(hb.blk, derive_seed(spec.seed, k)),
                                    hb, adv.anc_qubits());
      }
      for (int i = 0; i < adv.queries(); ++i) {
        s = s.apply_system_unitary(adv.gate(i));
        for (size_t li = 0; li < spec.layers.size(); ++li) {
          if (li == rest_idx)
            s = v_restricted_query(s, *rest.set, rb);
          else
            s = s.apply_system_unitary(haar_embedded);
        }
      }
      acc.add(s.reduce_to_adversary());
    }
    RunResult r;
    r.rho = acc.mean();
    r.trace = r.rho.trace().real();
    r.mc_samples = samples;
    r.se_max_entry = acc.se_max_entry();
    r.se_trace = acc.se_trace();
    return r;
  }

  throw std::invalid_argument("run(glued): unsupported layer combination");
}

}  // namespace

RunResult run(const AdversaryProgram& adv, const OracleSpec& oracle) {
  switch (oracle.kind) {
    case OracleKind::concrete_unitary:
      if (oracle.u.rows() != adv.sys_dim())
        throw std::invalid_argument("run: oracle dimension mismatch");
      return exact_result(concrete_run(adv, oracle.u));
    case OracleKind::haar_mc: {
      McAccumulator acc(adv.ab_dim());
      for (int k = 0; k < oracle.mc_samples; ++k)
        acc.add(concrete_run(
            adv, sample_haar_dim(adv.sys_dim(), derive_seed(oracle.seed, k))));
      RunResult r;
      r.rho = acc.mean();
      r.trace = r.rho.trace().real();
      r.mc_samples = oracle.mc_samples;
      r.se_max_entry = acc.se_max_entry();
      r.se_trace = acc.se_trace();
      return r;
    }
    case OracleKind::pf_exact:
      return run_pf_exact(adv, *oracle.design);
    case OracleKind::spru_exact:
      return run_spru_exact(adv, *oracle.design);
    case OracleKind::pfo:
      return exact_result(pfo_run_state(adv).reduce_to_adversary());
    case OracleKind::spfo: {
      CMatrix id = identity(adv.sys_dim());
      return exact_result(spfo_run_state(adv, id, id).reduce_to_adversary());
    }
    case OracleKind::v_oracle:
      return exact_result(v_run_state(adv).reduce_to_adversary());
    case OracleKind::v_symmetric: {
      int t_max = std::min(adv.queries(), 4);
      TruncatedBasis basis(adv.sys_dim(), t_max);
      TruncatedOperator v = build_symmetric_V(basis);
      return exact_result(vsym_run_state(adv, basis, v).reduce_to_adversary());
    }
    case OracleKind::v_restricted: {
      RestrictedSetReport rep = restricted_set_check(*oracle.set);
      if (!rep.consistent)
        throw std::invalid_argument("run(v_restricted): inconsistent set: " + rep.detail);
      return exact_result(
          v_restricted_run_state(adv, *oracle.set).reduce_to_adversary());
    }
    case OracleKind::glued:
      return run_glued_spec(adv, oracle);
  }
  throw std::logic_error("run: bad oracle kind");
}

// ---------------------------------------------------------------------------
// Hybrid chains.

StandardHybridChain run_hybrid_chain_standard(const AdversaryProgram& adv,
                                              const UnitaryEnsemble& design) {
  require_forward_only(adv, "run_hybrid_chain_standard");
  int N = adv.sys_dim();
  int t = adv.queries();
  long dim = adv.ab_dim();
  long nfact = factorial(N);
  long qn = 1L << N;

  DensityMatrix rho[6];
  for (auto& r : rho) r = DensityMatrix::Zero(dim, dim);

  StandardHybridChain out;
  PurifiedState base_v = v_run_state(adv);
  CVector base_dense = expand_full(base_v, t);
  bool rho0_direct = nfact * qn * static_cast<long>(design.size()) <= 200000;

  for (size_t ci = 0; ci < design.size(); ++ci) {
    CMatrix c = design.element(ci);
    PurifiedState pfo_state = pfo_run_state(adv, &c);
    rho[1] += pfo_state.reduce_to_adversary();
    PurifiedState pfo_proj = pf_dist_project(pfo_state, t);
    rho[2] += pfo_proj.reduce_to_adversary();

    PurifiedState v_state = v_run_state(adv, &c);
    rho[4] += v_state.reduce_to_adversary();
    PurifiedState v_dist = dist_project_keys(v_state);
    rho[3] += v_dist.reduce_to_adversary();

    // Compress pipeline identity for this design element.
    PurifiedState compressed = compress(pfo_proj);
    out.compress_residual =
        std::max(out.compress_residual, state_diff_norm(compressed, v_dist));

    // Right unitary invariance, vector form.
    CVector lhs = expand_full(v_state, t);
    CVector rhs = apply_g_slots(base_dense, N, t, dim, c);
    out.rightinv_residual = std::max(out.rightinv_residual, (lhs - rhs).norm());

    if (rho0_direct) {
      for (long rank = 0; rank < nfact; ++rank) {
        CMatrix p = permutation_unitary(perm_unrank(N, rank));
        for (long f = 0; f < qn; ++f) {
          CMatrix o = p * phase_unitary(unrank_function(f, N, 2), 2) * c;
          rho[0] += concrete_run(adv, o) / double(nfact * qn);
        }
      }
    }
  }
  for (int i = 0; i <= 4; ++i) rho[i] /= double(design.size());

  if (!rho0_direct) {
    // Desk-scale cap: realize rho0 through the purified oracle and verify
    // the standard-vs-purified equivalence on a fixed design subset.
    rho[0] = rho[1];
    size_t probe = std::min<size_t>(design.size(), 4);
    for (size_t ci = 0; ci < probe; ++ci) {
      CMatrix c = design.element(ci);
      DensityMatrix direct = DensityMatrix::Zero(dim, dim);
      for (long rank = 0; rank < nfact; ++rank) {
        CMatrix p = permutation_unitary(perm_unrank(N, rank));
        for (long f = 0; f < qn; ++f) {
          CMatrix o = p * phase_unitary(unrank_function(f, N, 2), 2) * c;
          direct += concrete_run(adv, o) / double(nfact * qn);
        }
      }
      CMatrix purified = pfo_run_state(adv, &c).reduce_to_adversary();
      out.purified_vs_standard =
          std::max(out.purified_vs_standard, max_abs_diff(direct, purified));
    }
  } else {
    out.purified_vs_standard = max_abs_diff(rho[0], rho[1]);
  }

  rho[5] = v_run_state(adv).reduce_to_adversary();
  const char* labels[6] = {"rho0:PF(D)",          "rho1:pfo",
                           "rho2:pfo-projected",  "rho3:V-projected",
                           "rho4:V-rotated",      "rho5:V"};
  for (int i = 0; i < 6; ++i) out.states.emplace_back(labels[i], std::move(rho[i]));
  return out;
}

StrongBlock strong_block_run(const AdversaryProgram& adv, const CMatrix& c,
                             const CMatrix& d, const TruncatedBasis& basis,
                             const TruncatedOperator& pdw,
                             const TruncatedOperator& piw) {
  StrongBlock out;
  PurifiedState w_state = w_run_state(adv, c, d);
  PurifiedState proj = spfo_projected_run_state(adv, c, d, basis, pdw, piw);
  PurifiedState compressed = compress_strong(proj, basis.t_max());
  out.compress_residual = state_diff_norm(w_state, compressed);
  out.w_norm2 = w_state.norm2();
  out.rho_w = w_state.reduce_to_adversary();
  out.rho_spfo = spfo_run_state(adv, c, d).reduce_to_adversary();
  return out;
}

PurifiedState glue_uncompress(const PurifiedState& s, int a1, int a2, int a3) {
  if (s.kind() != KeyKind::relation)
    throw std::invalid_argument("glue_uncompress: key-space kind mismatch");
  int n23 = a2 + a3, n12 = a1 + a2;
  int dim23 = 1 << n23, dim12 = 1 << n12, dim2 = 1 << a2;
  uint32_t mask3 = (1u << a3) - 1;
  PurifiedState out(KeyKind::relation_pair, s.sys_dim(), s.anc_qubits(), s.q());
  for (const auto& [key, v] : s.amplitudes()) {
    const Relation& rel = std::get<RelKey>(key).r;
    int t = static_cast<int>(rel.size());
    double amp = 1.0;
    for (int i = 0; i < t; ++i) amp /= std::sqrt(double(dim2 - i));
    // Sum over ordered tuples of distinct z values assigned to the pairs.
    std::vector<int> z(t, -1);
    std::vector<bool> used(dim2, false);
    auto rec = [&](auto&& self, int depth) -> void {
      if (depth == t) {
        std::vector<Relation::Pair> rp, sp;
        for (int i = 0; i < t; ++i) {
          auto [x, y] = rel.pairs()[i];
          uint16_t x23 = static_cast<uint16_t>(x & (dim23 - 1));
          uint16_t y23 = static_cast<uint16_t>((z[i] << a3) | (y & mask3));
          uint16_t x12 = static_cast<uint16_t>(((x >> n23) << a2) | z[i]);
          uint16_t y12 = static_cast<uint16_t>(y >> a3);
          rp.push_back({x23, y23});
          sp.push_back({x12, y12});
        }
        out.add(RelPairKey{Relation(dim23, std::move(rp)), Relation(dim12, std::move(sp))},
                amp * v);
        return;
      }
      for (int zz = 0; zz < dim2; ++zz) {
        if (used[zz]) continue;
        used[zz] = true;
        z[depth] = zz;
        self(self, depth + 1);
        used[zz] = false;
      }
    };
    rec(rec, 0);
  }
  out.prune();
  return out;
}

namespace {

// E[U_{a1 b1} conj(U)_{a2 b2} U_{a3 b3} conj(U)_{a4 b4}] over Haar applied
// to a vector on the four-copy space H^{(x)4}, where copies 1 and 3 carry
// U on one block of H and copies 2 and 4 carry conj(U). Everything
// outside the block is a bystander.
class FourCopyHaarMoment {
 public:
  FourCopyHaarMoment(long h_dim, const BlockSpec& bs, int anc_qubits)
      : d_(h_dim), blk_(bs.blk) {
    long tail = static_cast<long>(bs.lo) << anc_qubits;
    hi_ = bs.hi;
    tail_ = tail;
    if (static_cast<long>(bs.hi) * bs.blk * tail != h_dim)
      throw std::invalid_argument("FourCopyHaarMoment: block mismatch");
    double b = blk_;
    wg_same_ = 1.0 / (b * b - 1.0);
    wg_cross_ = -1.0 / (b * (b * b - 1.0));
  }

  CVector apply(const CVector& in) const {
    long d4 = d_ * d_ * d_ * d_;
    if (in.size() != d4)
      throw std::invalid_argument("FourCopyHaarMoment: vector dim mismatch");
    CVector out = CVector::Zero(d4);
    // Decompose each copy index as (hi, block, tail); the moment couples
    // only the block coordinates.
    long bys = hi_ * tail_;
    auto compose = [&](long by, long b) {
      long h = by / tail_;
      long t = by % tail_;
      return (h * blk_ + b) * tail_ + t;
    };
    std::vector<long> by(4), bb(4);
    // Iterate over all bystander combinations.
    long bys4 = bys * bys * bys * bys;
    for (long m = 0; m < bys4; ++m) {
      long rest = m;
      for (int c = 3; c >= 0; --c) {
        by[c] = rest % bys;
        rest /= bys;
      }
      // tau patterns on the column (input) side.
      Complex s_id = 0.0, s_sw = 0.0;
      for (long p = 0; p < blk_; ++p) {
        for (long q = 0; q < blk_; ++q) {
          long i_id = ((compose(by[0], p) * d_ + compose(by[1], p)) * d_ +
                       compose(by[2], q)) *
                          d_ +
                      compose(by[3], q);
          s_id += in(i_id);
          long i_sw = ((compose(by[0], p) * d_ + compose(by[1], q)) * d_ +
                       compose(by[2], q)) *
                          d_ +
                      compose(by[3], p);
          s_sw += in(i_sw);
        }
      }
      Complex c_id = wg_same_ * s_id + wg_cross_ * s_sw;   // sigma = id
      Complex c_sw = wg_cross_ * s_id + wg_same_ * s_sw;   // sigma = swap
      if (c_id == Complex(0.0) && c_sw == Complex(0.0)) continue;
      for (long a = 0; a < blk_; ++a) {
        for (long c = 0; c < blk_; ++c) {
          long o_id = ((compose(by[0], a) * d_ + compose(by[1], a)) * d_ +
                       compose(by[2], c)) *
                          d_ +
                      compose(by[3], c);
          out(o_id) += c_id;
          long o_sw = ((compose(by[0], a) * d_ + compose(by[1], c)) * d_ +
                       compose(by[2], c)) *
                          d_ +
                      compose(by[3], a);
          out(o_sw) += c_sw;
        }
      }
    }
    return out;
  }

 private:
  long d_;
  long blk_;
  long hi_;
  long tail_;
  double wg_same_, wg_cross_;
};

}  // namespace

DensityMatrix glued_haar_exact_rho(const AdversaryProgram& adv,
                                   const std::vector<BlockSpec>& layers) {
  require_forward_only(adv, "glued_haar_exact_rho");
  if (adv.queries() != 2)
    throw CapacityError("glued_haar_exact_rho: exact averaging implemented for t = 2");
  long d = adv.ab_dim();
  long d2 = d * d, d4 = d2 * d2;
  if (d4 > (1L << 21))
    throw CapacityError("glued_haar_exact_rho: four-copy space too large");

  // Doubled operators A_i (x) conj(A_i) and the doubled initial vector.
  CMatrix a1 = adv.gate(0), a2 = adv.gate(1);
  CMatrix m2 = kron(a2, a2.conjugate());
  CVector u = CVector::Zero(d2);
  u(0) = 1.0;
  u = kron(a1, a1.conjugate()) * u;

  std::vector<FourCopyHaarMoment> moments;
  for (const BlockSpec& bs : layers)
    moments.emplace_back(d, bs, adv.anc_qubits());

  // rho_vec(r) = sum_j [ G ((X e_j) (x) u) ]_{(r, j)} with
  // G = prod_layers E[W_layer (x) W_layer] on the four-copy space, where
  // the first two copies are the left oracle slot and the last two the
  // right slot of the t = 2 run.
  CVector rho_vec = CVector::Zero(d2);
  CVector work(d4);
  for (long j = 0; j < d2; ++j) {
    CVector xj = m2.col(j);
    if (xj.squaredNorm() == 0.0 && u(j) == Complex(0.0)) continue;
    for (long a = 0; a < d2; ++a)
      work.segment(a * d2, d2) = xj(a) * u;
    // Layers are applied right-to-left per query; on the four-copy space
    // the per-layer moments commute with each other only across distinct
    // unitaries, so apply them in the fixed layer order.
    for (const auto& m : moments) work = m.apply(work);
    for (long r = 0; r < d2; ++r) rho_vec(r) += work(r * d2 + j);
  }

  DensityMatrix rho(d, d);
  for (long i = 0; i < d; ++i)
    for (long k = 0; k < d; ++k) rho(i, k) = rho_vec(i * d + k);
  return rho;
}

GluedChain run_glued(const AdversaryProgram& adv, int a1, int a2, int a3,
                     int mc_samples, uint64_t seed) {
  require_forward_only(adv, "run_glued");
  int n = a1 + a2 + a3;
  if (adv.sys_dim() != (1 << n))
    throw std::invalid_argument("run_glued: block sizes do not match the system");
  int dim23 = 1 << (a2 + a3), dim12 = 1 << (a1 + a2), dim = 1 << n;
  uint32_t mask23 = ((1u << a2) - 1) << a3;  // A2 bits inside A2A3
  uint32_t mask12 = (1u << a2) - 1;          // A2 bits inside A1A2
  uint32_t mask_full = ((1u << a2) - 1) << a3;

  RestrictedSet set23 = RestrictedSet::y_mask_distinct(dim23, mask23);
  RestrictedSet set12 = RestrictedSet::y_mask_distinct(dim12, mask12);
  RestrictedSet set_full = RestrictedSet::y_mask_distinct(dim, mask_full);

  GluedLayer l23{a1, a2 + a3, true, std::nullopt};
  GluedLayer l12{0, a1 + a2, true, std::nullopt};
  GluedLayer l23r{a1, a2 + a3, false, set23};
  GluedLayer l12r{0, a1 + a2, false, set12};

  GluedChain out;
  RunResult r1 = run(adv, OracleSpec::glued_spec(n, {l23, l12}, mc_samples, seed));
  RunResult r2 = run(adv, OracleSpec::glued_spec(n, {l23r, l12}, mc_samples,
                                                 derive_seed(seed, 1)));
  RunResult r3 = run(adv, OracleSpec::glued_spec(n, {l23r, l12r}, 0, 0));
  RunResult r5 = run(adv, OracleSpec::haar_mc_spec(mc_samples, derive_seed(seed, 2)));
  out.se_rho1 = r1.se_trace;
  out.se_rho2 = r2.se_trace;
  out.se_rho5 = r5.se_trace;

  PurifiedState full_state = v_restricted_run_state(adv, set_full);
  DensityMatrix rho4 = full_state.reduce_to_adversary();

  // rho3 = rho4 through the Uncompress partial isometry: compare the
  // two-record purification against the uncompressed single record.
  PurifiedState pair_state = pair_vacuum(adv.sys_dim(), adv.anc_qubits(), dim23, dim12, 2);
  BlockSpec b23{1 << a1, dim23, 1};
  BlockSpec b12{1, dim12, 1 << a3};
  for (int i = 0; i < adv.queries(); ++i) {
    pair_state = pair_state.apply_system_unitary(adv.gate(i));
    pair_state = v_restricted_pair_query(pair_state, PairSide::left, set23, b23);
    pair_state = v_restricted_pair_query(pair_state, PairSide::right, set12, b12);
  }
  PurifiedState lifted = glue_uncompress(full_state, a1, a2, a3);
  out.uncompress_residual = state_diff_norm(lifted, pair_state);

  out.states.emplace_back("rho1:haar-pair", r1.rho);
  out.states.emplace_back("rho2:half-glued", r2.rho);
  out.states.emplace_back("rho3:double-record", r3.rho);
  out.states.emplace_back("rho4:single-record", std::move(rho4));
  out.states.emplace_back("rho5:haar-full", r5.rho);
  return out;
}

}  // namespace prulab
