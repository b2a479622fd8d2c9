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

#include "relations.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace prulab {

Relation::Relation(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("Relation: dim must be positive");
}

Relation::Relation(int dim, std::vector<Pair> pairs) : dim_(dim), pairs_(std::move(pairs)) {
  if (dim < 1) throw std::invalid_argument("Relation: dim must be positive");
  for (auto [x, y] : pairs_)
    if (x >= dim || y >= dim)
      throw std::invalid_argument("Relation: pair out of range");
  std::sort(pairs_.begin(), pairs_.end());
}

std::set<int> Relation::dom() const {
  std::set<int> s;
  for (auto [x, y] : pairs_) s.insert(x);
  return s;
}

std::set<int> Relation::im() const {
  std::set<int> s;
  for (auto [x, y] : pairs_) s.insert(y);
  return s;
}

int Relation::num(Pair p) const {
  auto [lo, hi] = std::equal_range(pairs_.begin(), pairs_.end(), p);
  return static_cast<int>(hi - lo);
}

bool Relation::is_injective() const {
  return im().size() == pairs_.size();
}

bool Relation::is_bijective() const {
  return dom().size() == pairs_.size() && im().size() == pairs_.size();
}

Relation Relation::insert(Pair p) const {
  if (p.first >= dim_ || p.second >= dim_)
    throw std::invalid_argument("Relation::insert: pair out of range");
  Relation out(*this);
  out.pairs_.insert(std::upper_bound(out.pairs_.begin(), out.pairs_.end(), p), p);
  return out;
}

Relation Relation::remove_one(Pair p) const {
  Relation out(*this);
  auto it = std::lower_bound(out.pairs_.begin(), out.pairs_.end(), p);
  if (it == out.pairs_.end() || *it != p)
    throw std::invalid_argument("Relation::remove_one: pair not present");
  out.pairs_.erase(it);
  return out;
}

std::string Relation::key() const {
  std::string k;
  k.reserve(2 + pairs_.size() * 4);
  auto push16 = [&k](uint16_t v) {
    k.push_back(static_cast<char>(v >> 8));
    k.push_back(static_cast<char>(v & 0xff));
  };
  push16(static_cast<uint16_t>(dim_));
  for (auto [x, y] : pairs_) {
    push16(x);
    push16(y);
  }
  return k;
}

Relation Relation::from_key(const std::string& key) {
  if (key.size() < 2 || key.size() % 4 != 2)
    throw std::invalid_argument("Relation::from_key: malformed key");
  auto read16 = [&key](size_t at) {
    return static_cast<uint16_t>((static_cast<uint8_t>(key[at]) << 8) |
                                 static_cast<uint8_t>(key[at + 1]));
  };
  int dim = read16(0);
  std::vector<Pair> pairs;
  for (size_t at = 2; at < key.size(); at += 4)
    pairs.emplace_back(read16(at), read16(at + 2));
  return Relation(dim, std::move(pairs));
}

namespace {

void enumerate_rec(int dim, int t, RelationClass cls, Relation::Pair min_pair,
                   std::vector<Relation::Pair>& cur, uint32_t used_x,
                   uint32_t used_y, std::vector<Relation>& out) {
  if (static_cast<int>(cur.size()) == t) {
    out.emplace_back(dim, cur);
    return;
  }
  // Pairs are generated in nondecreasing order, so each multiset appears
  // exactly once.
  for (int x = min_pair.first; x < dim; ++x) {
    if (cls == RelationClass::bijective && (used_x >> x) & 1) continue;
    int y0 = (x == min_pair.first) ? min_pair.second : 0;
    for (int y = y0; y < dim; ++y) {
      if (cls != RelationClass::all && ((used_y >> y) & 1)) continue;
      cur.emplace_back(static_cast<uint16_t>(x), static_cast<uint16_t>(y));
      enumerate_rec(dim, t, cls, {static_cast<uint16_t>(x), static_cast<uint16_t>(y)},
                    cur, used_x | (1u << x), used_y | (1u << y), out);
      cur.pop_back();
    }
  }
}

}  // namespace

std::vector<Relation> enumerate_relations(int dim, int t, RelationClass cls) {
  if (dim > 32) throw CapacityError("enumerate_relations: dim too large");
  std::vector<Relation> out;
  std::vector<Relation::Pair> cur;
  enumerate_rec(dim, t, cls, {0, 0}, cur, 0, 0, out);
  return out;
}

CVector expand_relation_state(const Relation& r) {
  int t = static_cast<int>(r.size());
  if (t > 4) throw CapacityError("expand_relation_state: |R| must be <= 4");
  long dim_pair = static_cast<long>(r.dim()) * r.dim();
  long total = 1;
  for (int i = 0; i < t; ++i) total *= dim_pair;

  std::vector<int> order(t);
  for (int i = 0; i < t; ++i) order[i] = i;

  double norm2 = factorial(t);
  {
    // prod over distinct pairs of num(R, pair)!
    const auto& ps = r.pairs();
    for (size_t i = 0; i < ps.size();) {
      size_t j = i;
      while (j < ps.size() && ps[j] == ps[i]) ++j;
      norm2 *= factorial(static_cast<int>(j - i));
      i = j;
    }
  }

  CVector v = CVector::Zero(total);
  do {
    long idx = 0;
    for (int slot = 0; slot < t; ++slot) {
      auto [x, y] = r.pairs()[order[slot]];
      idx = idx * dim_pair + (static_cast<long>(x) * r.dim() + y);
    }
    v(idx) += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  return v / std::sqrt(norm2);
}

int kth_free_value(const std::set<int>& im, int dim, int k) {
  if (k < 1 || k > dim - static_cast<int>(im.size()))
    throw std::invalid_argument("kth_free_value: rank out of range");
  int seen = 0;
  for (int v = 0; v < dim; ++v) {
    if (im.count(v)) continue;
    if (++seen == k) return v;
  }
  throw std::logic_error("kth_free_value: unreachable");
}

int free_value_rank(const std::set<int>& im, int value) {
  if (im.count(value))
    throw std::invalid_argument("free_value_rank: value not free");
  int used_below = static_cast<int>(
      std::distance(im.begin(), im.lower_bound(value)));
  return value - used_below + 1;
}

RestrictedSet::RestrictedSet(int dim, Kind kind, uint32_t y_mask, int t_max)
    : dim_(dim), kind_(kind), y_mask_(y_mask), t_max_(t_max) {}

RestrictedSet RestrictedSet::all_injective(int dim) {
  return RestrictedSet(dim, Kind::all_injective, 0, dim);
}

RestrictedSet RestrictedSet::y_mask_distinct(int dim, uint32_t y_mask) {
  int masked_values = std::popcount(y_mask & static_cast<uint32_t>(dim - 1));
  return RestrictedSet(dim, Kind::y_mask_distinct, y_mask, 1 << masked_values);
}

RestrictedSet RestrictedSet::identity_pairs(int dim) {
  return RestrictedSet(dim, Kind::identity_pairs, 0, dim);
}

RestrictedSet RestrictedSet::full_size_only(int dim) {
  return RestrictedSet(dim, Kind::full_size_only, 0, dim);
}

std::string RestrictedSet::name() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::all_injective: os << "all-injective"; break;
    case Kind::y_mask_distinct: os << "y-mask-distinct(0x" << std::hex << y_mask_ << ")"; break;
    case Kind::identity_pairs: os << "identity-pairs"; break;
    case Kind::full_size_only: os << "full-size-only"; break;
  }
  os << std::dec << "[N=" << dim_ << "]";
  return os.str();
}

bool RestrictedSet::contains(const Relation& r) const {
  if (r.dim() != dim_ || static_cast<int>(r.size()) > t_max_) return false;
  switch (kind_) {
    case Kind::all_injective:
      return r.is_injective();
    case Kind::y_mask_distinct: {
      if (!r.is_injective()) return false;
      std::set<uint32_t> seen;
      for (auto [x, y] : r.pairs())
        if (!seen.insert(y & y_mask_).second) return false;
      return true;
    }
    case Kind::identity_pairs:
      // Multiset members are admitted: once an x repeats, the only
      // extension {(x, x)} repeats a pair, and the growth count stays 1.
      for (auto [x, y] : r.pairs())
        if (x != y) return false;
      return true;
    case Kind::full_size_only:
      return r.is_injective() && static_cast<int>(r.size()) == dim_;
  }
  return false;
}

int RestrictedSet::growth_count(const Relation& r, int x) const {
  return static_cast<int>(growth_values(r, x).size());
}

std::vector<int> RestrictedSet::growth_values(const Relation& r, int x) const {
  std::vector<int> ys;
  if (static_cast<int>(r.size()) >= t_max_) return ys;
  for (int y = 0; y < dim_; ++y) {
    Relation ext = r.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)});
    if (contains(ext)) ys.push_back(y);
  }
  return ys;
}

RestrictedSetReport restricted_set_check(const RestrictedSet& s, int depth_cap) {
  if (s.dim() > 16) throw CapacityError("restricted_set_check: N must be <= 16");
  int depth = std::min(s.t_max(), depth_cap);
  if (depth > 3) throw CapacityError("restricted_set_check: depth must be <= 3");

  RestrictedSetReport report;
  report.checked_depth = depth;
  report.consistent = true;
  report.uniform_growth = true;

  std::vector<std::vector<Relation>> members(depth + 1);
  for (int t = 0; t <= depth; ++t)
    for (const Relation& r : enumerate_relations(s.dim(), t, RelationClass::all))
      if (s.contains(r)) members[t].push_back(r);

  auto fail = [&report](bool& flag, const std::string& msg) {
    if (flag) report.detail = msg;
    flag = false;
  };

  if (members[0].empty())
    fail(report.consistent, "empty relation not a member");

  // Downward closure: removing any one pair stays in S.
  for (int t = 1; t <= depth && report.consistent; ++t) {
    for (const Relation& r : members[t]) {
      for (auto p : r.pairs()) {
        if (!s.contains(r.remove_one(p))) {
          std::ostringstream os;
          os << "member of size " << t << " has non-member sub-relation";
          fail(report.consistent, os.str());
          break;
        }
      }
      if (!report.consistent) break;
    }
  }

  // Every x extends every member below the cap, and the extension count is
  // independent of (x, R) for the uniform-growth verdict.
  for (int t = 0; t < depth; ++t) {
    long z_common = -1;
    for (const Relation& r : members[t]) {
      for (int x = 0; x < s.dim(); ++x) {
        long z = s.growth_count(r, x);
        if (z < 1) {
          std::ostringstream os;
          os << "no extension for some (x, R) at size " << t;
          fail(report.consistent, os.str());
        }
        if (z_common < 0) z_common = z;
        if (z != z_common) {
          std::ostringstream os;
          os << "growth count not uniform at size " << t;
          fail(report.uniform_growth, os.str());
        }
      }
    }
    if (members[t].empty()) {
      fail(report.consistent, "no members at some size below t_max");
      z_common = 0;
    }
    report.growth_table.push_back(z_common);
  }
  if (!report.consistent) report.uniform_growth = false;
  return report;
}

}  // namespace prulab
