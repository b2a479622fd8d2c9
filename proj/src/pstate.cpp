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

#include "pstate.hpp"

#include <json.hpp>
#include <sstream>

namespace prulab {

PurifiedState::PurifiedState(KeyKind kind, int sys_dim, int anc_qubits, int q)
    : kind_(kind), sys_dim_(sys_dim), anc_qubits_(anc_qubits), q_(q) {
  if (sys_dim < 1) throw std::invalid_argument("PurifiedState: sys_dim < 1");
  if (anc_qubits < 0 || anc_qubits > 8)
    throw CapacityError("PurifiedState: ancilla width out of range");
  if (q != 2 && q != 3) throw std::invalid_argument("PurifiedState: q must be 2 or 3");
}

void PurifiedState::check_key_kind(const StateKey& key) const {
  bool ok = false;
  switch (kind_) {
    case KeyKind::relation:
      ok = std::holds_alternative<RelKey>(key);
      break;
    case KeyKind::relation_pair:
      ok = std::holds_alternative<RelPairKey>(key);
      break;
    case KeyKind::perm_func:
      ok = std::holds_alternative<PermFuncKey>(key) &&
           std::get<PermFuncKey>(key).c < 0 && std::get<PermFuncKey>(key).d < 0;
      break;
    case KeyKind::perm_func_design:
      ok = std::holds_alternative<PermFuncKey>(key) &&
           std::get<PermFuncKey>(key).c >= 0;
      break;
  }
  if (!ok) throw std::invalid_argument("PurifiedState: key kind mismatch");
}

const CVector* PurifiedState::find(const StateKey& key) const {
  auto it = amps_.find(key);
  return it == amps_.end() ? nullptr : &it->second;
}

void PurifiedState::set(const StateKey& key, CVector v) {
  check_key_kind(key);
  if (v.size() != vec_dim())
    throw std::invalid_argument("PurifiedState::set: vector dim mismatch");
  amps_[key] = std::move(v);
}

void PurifiedState::add(const StateKey& key, const CVector& v) {
  check_key_kind(key);
  if (v.size() != vec_dim())
    throw std::invalid_argument("PurifiedState::add: vector dim mismatch");
  auto it = amps_.find(key);
  if (it == amps_.end())
    amps_.emplace(key, v);
  else
    it->second += v;
}

CVector& PurifiedState::at_or_zero(const StateKey& key) {
  auto it = amps_.find(key);
  if (it == amps_.end()) {
    check_key_kind(key);
    it = amps_.emplace(key, CVector::Zero(vec_dim())).first;
  }
  return it->second;
}

void PurifiedState::scale(Complex factor) {
  for (auto& [key, v] : amps_) v *= factor;
}

void PurifiedState::prune(double threshold) {
  for (auto it = amps_.begin(); it != amps_.end();) {
    if (it->second.squaredNorm() < threshold)
      it = amps_.erase(it);
    else
      ++it;
  }
}

double PurifiedState::norm2() const {
  double acc = 0.0;
  for (const auto& [key, v] : amps_) acc += v.squaredNorm();
  return acc;
}

PurifiedState PurifiedState::apply_system_unitary(const CMatrix& u) const {
  if (u.rows() != vec_dim() || u.cols() != vec_dim())
    throw std::invalid_argument("apply_system_unitary: dimension mismatch");
  PurifiedState out(kind_, sys_dim_, anc_qubits_, q_);
  for (const auto& [key, v] : amps_) out.amps_.emplace(key, u * v);
  return out;
}

DensityMatrix PurifiedState::reduce_to_adversary() const {
  DensityMatrix rho = DensityMatrix::Zero(vec_dim(), vec_dim());
  for (const auto& [key, v] : amps_) rho.noalias() += v * v.adjoint();
  return rho;
}

CVector PurifiedState::to_dense(const std::vector<StateKey>& basis) const {
  std::map<StateKey, size_t> index;
  for (size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], i);
  CVector out = CVector::Zero(static_cast<long>(basis.size()) * vec_dim());
  for (const auto& [key, v] : amps_) {
    auto it = index.find(key);
    if (it == index.end())
      throw std::invalid_argument("to_dense: live key missing from basis: " +
                                  key_to_string(key));
    out.segment(static_cast<long>(it->second) * vec_dim(), vec_dim()) = v;
  }
  return out;
}

PurifiedState PurifiedState::from_dense(KeyKind kind, int sys_dim, int anc_qubits,
                                        int q, const std::vector<StateKey>& basis,
                                        const CVector& dense) {
  PurifiedState out(kind, sys_dim, anc_qubits, q);
  long vd = out.vec_dim();
  if (dense.size() != static_cast<long>(basis.size()) * vd)
    throw std::invalid_argument("from_dense: dense vector dim mismatch");
  for (size_t i = 0; i < basis.size(); ++i) {
    CVector v = dense.segment(static_cast<long>(i) * vd, vd);
    if (v.squaredNorm() > 0) out.set(basis[i], std::move(v));
  }
  return out;
}

std::string key_to_string(const StateKey& key) {
  std::ostringstream os;
  if (const auto* rk = std::get_if<RelKey>(&key)) {
    os << "R{";
    for (auto [x, y] : rk->r.pairs()) os << "(" << x << "," << y << ")";
    os << "}";
  } else if (const auto* pk = std::get_if<RelPairKey>(&key)) {
    os << "L{";
    for (auto [x, y] : pk->left.pairs()) os << "(" << x << "," << y << ")";
    os << "}R{";
    for (auto [x, y] : pk->right.pairs()) os << "(" << x << "," << y << ")";
    os << "}";
  } else {
    const auto& fk = std::get<PermFuncKey>(key);
    os << "pi=" << fk.perm << ",f=" << fk.func;
    if (fk.c >= 0) os << ",c=" << fk.c;
    if (fk.d >= 0) os << ",d=" << fk.d;
  }
  return os.str();
}

std::string PurifiedState::dump_json() const {
  nlohmann::json j;
  j["sys_dim"] = sys_dim_;
  j["anc_qubits"] = anc_qubits_;
  j["q"] = q_;
  switch (kind_) {
    case KeyKind::relation: j["kind"] = "relation"; break;
    case KeyKind::relation_pair: j["kind"] = "relation-pair"; break;
    case KeyKind::perm_func: j["kind"] = "perm-func"; break;
    case KeyKind::perm_func_design: j["kind"] = "perm-func-design"; break;
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, v] : amps_) {
    nlohmann::json e;
    e["key"] = key_to_string(key);
    nlohmann::json amp = nlohmann::json::array();
    for (long i = 0; i < v.size(); ++i)
      amp.push_back({v(i).real(), v(i).imag()});
    e["amp"] = std::move(amp);
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  return j.dump();
}

Complex inner_product(const PurifiedState& s1, const PurifiedState& s2) {
  if (s1.kind() != s2.kind() || s1.sys_dim() != s2.sys_dim() ||
      s1.anc_qubits() != s2.anc_qubits() || s1.q() != s2.q())
    throw std::invalid_argument("inner_product: incompatible states");
  Complex acc = 0.0;
  for (const auto& [key, v] : s1.amplitudes()) {
    const CVector* w = s2.find(key);
    if (w) acc += v.dot(*w);
  }
  return acc;
}

double state_diff_norm(const PurifiedState& s1, const PurifiedState& s2) {
  if (s1.kind() != s2.kind() || s1.sys_dim() != s2.sys_dim() ||
      s1.anc_qubits() != s2.anc_qubits() || s1.q() != s2.q())
    throw std::invalid_argument("state_diff_norm: incompatible states");
  double acc = 0.0;
  auto it1 = s1.amplitudes().begin();
  auto it2 = s2.amplitudes().begin();
  while (it1 != s1.amplitudes().end() || it2 != s2.amplitudes().end()) {
    if (it2 == s2.amplitudes().end() ||
        (it1 != s1.amplitudes().end() && it1->first < it2->first)) {
      acc += it1->second.squaredNorm();
      ++it1;
    } else if (it1 == s1.amplitudes().end() || it2->first < it1->first) {
      acc += it2->second.squaredNorm();
      ++it2;
    } else {
      acc += (it1->second - it2->second).squaredNorm();
      ++it1;
      ++it2;
    }
  }
  return std::sqrt(acc);
}

}  // namespace prulab
