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
// Relation multisets over [N]^2, their canonical encodings, and the
// expansion of relation states into flat tensor bases.

#ifndef PRULAB_RELATIONS_HPP
#define PRULAB_RELATIONS_HPP

#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cnum.hpp"

namespace prulab {

/// A multiset of (x, y) pairs over [N]^2, stored sorted in lexicographic
/// order; the sorted order is the canonical encoding. Values are immutable
/// after construction.
class Relation {
 public:
  using Pair = std::pair<uint16_t, uint16_t>;

  /// The empty relation over alphabet size `dim` (dim = N).
  explicit Relation(int dim);
  Relation(int dim, std::vector<Pair> pairs);

  int dim() const { return dim_; }
  size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<Pair>& pairs() const { return pairs_; }

  std::set<int> dom() const;
  std::set<int> im() const;
  /// Multiplicity of `p` in the multiset.
  int num(Pair p) const;

  bool is_injective() const;  // all y distinct
  bool is_bijective() const;  // all x distinct and all y distinct

  Relation insert(Pair p) const;
  /// Removes exactly one copy; throws std::invalid_argument if absent.
  Relation remove_one(Pair p) const;

  /// Canonical byte-string key: dim, then fixed-width big-endian (x, y)
  /// pairs in sorted order. This is the map key used by every
  /// purified-state container.
  std::string key() const;
  static Relation from_key(const std::string& key);

  auto operator<=>(const Relation&) const = default;
  bool operator==(const Relation&) const = default;

 private:
  int dim_;
  std::vector<Pair> pairs_;  // sorted
};

enum class RelationClass { all, injective, bijective };

/// All size-t relations of the given class over [dim]^2, in canonical
/// (sorted-key) order.
std::vector<Relation> enumerate_relations(int dim, int t, RelationClass cls);

/// The symmetrized unit vector |R> over (C^{N^2})^{(x) |R|}:
/// sum over permutations of the pair list, normalized by
/// sqrt(t! * prod num(R, (x,y))!). Requires |R| <= 4.
CVector expand_relation_state(const Relation& r);

/// Rank-to-free-image order statistics: the k-th smallest element of
/// [dim] \ im (k is 1-indexed, elements 0-indexed). Inverse is
/// free_value_rank. Used by the procedural oracle backends.
int kth_free_value(const std::set<int>& im, int dim, int k);
int free_value_rank(const std::set<int>& im, int value);

/// A restricted set S^inj of injective relations, defined by a membership
/// predicate plus the growth cap t_max.
class RestrictedSet {
 public:
  enum class Kind {
    all_injective,    // every injective relation; Z_t = N - t
    y_mask_distinct,  // masked bits of the y values pairwise distinct
    identity_pairs,   // R = {(x_i, x_i)}; Z_t = 1
    full_size_only,   // {R : |R| = N}; inconsistent example
  };

  static RestrictedSet all_injective(int dim);
  /// Relations whose images are distinct after masking y with `y_mask`
  /// (e.g. the block-distinct sets used for gluing). t_max = number of
  /// distinct masked values.
  static RestrictedSet y_mask_distinct(int dim, uint32_t y_mask);
  static RestrictedSet identity_pairs(int dim);
  static RestrictedSet full_size_only(int dim);

  int dim() const { return dim_; }
  int t_max() const { return t_max_; }
  Kind kind() const { return kind_; }
  std::string name() const;

  /// Membership test for S^inj (any size <= t_max).
  bool contains(const Relation& r) const;

  /// Z_{x,R} = #{y : R u {(x,y)} in S}.
  int growth_count(const Relation& r, int x) const;

  /// The y values that extend (r, x) inside S, ascending.
  std::vector<int> growth_values(const Relation& r, int x) const;

 private:
  RestrictedSet(int dim, Kind kind, uint32_t y_mask, int t_max);
  int dim_;
  Kind kind_;
  uint32_t y_mask_;
  int t_max_;
};

/// Verdicts from the exhaustive consistency / uniform-growth check.
struct RestrictedSetReport {
  bool consistent = false;
  bool uniform_growth = false;
  int checked_depth = 0;            // sizes 0..checked_depth examined
  std::vector<long> growth_table;   // Z_t for t = 0..checked_depth-1 when uniform
  std::string detail;               // first violation found, if any
};

/// Exhaustively checks consistency (downward closure + every x extends)
/// and uniform growth up to min(t_max, depth_cap). Requires dim <= 16 and
/// effective depth <= 3.
RestrictedSetReport restricted_set_check(const RestrictedSet& s, int depth_cap = 3);

}  // namespace prulab

#endif
