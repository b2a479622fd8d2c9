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

#include <doctest.h>

#include "relations.hpp"
#include "rng.hpp"

using namespace prulab;

TEST_CASE("dom, im, num") {
  Relation empty(4);
  CHECK(empty.dom().empty());
  CHECK(empty.im().empty());
  CHECK(empty.num({0, 0}) == 0);

  Relation r(4, {{0, 3}, {2, 1}, {2, 1}});
  CHECK(r.dom() == std::set<int>{0, 2});
  CHECK(r.im() == std::set<int>{1, 3});
  CHECK(r.num({2, 1}) == 2);
  CHECK(r.size() == 3);

  CHECK_FALSE(Relation(4, {{0, 1}, {2, 1}}).is_injective());
  CHECK(Relation(4, {{0, 1}, {0, 2}}).is_injective());
  CHECK_FALSE(Relation(4, {{0, 1}, {0, 2}}).is_bijective());
  CHECK(Relation(4, {{0, 1}, {2, 0}}).is_bijective());
}

TEST_CASE("insert and remove_one") {
  Relation empty(2);
  Relation r = empty.insert({1, 0});
  CHECK(r.size() == 1);
  CHECK(r.pairs()[0] == Relation::Pair{1, 0});

  // Multiset semantics.
  Relation triple = Relation(2, {{0, 1}, {0, 1}}).insert({0, 1});
  CHECK(triple.num({0, 1}) == 3);

  CHECK_THROWS_AS(empty.remove_one({0, 0}), std::invalid_argument);

  // insert then remove_one restores the original on seeded cases.
  Rng rng(77);
  for (int k = 0; k < 1000; ++k) {
    int dim = 2 + static_cast<int>(rng.uniform_int(14));
    std::vector<Relation::Pair> pairs;
    int t = static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < t; ++i)
      pairs.push_back({static_cast<uint16_t>(rng.uniform_int(dim)),
                       static_cast<uint16_t>(rng.uniform_int(dim))});
    Relation base(dim, pairs);
    Relation::Pair p{static_cast<uint16_t>(rng.uniform_int(dim)),
                     static_cast<uint16_t>(rng.uniform_int(dim))};
    CHECK(base.insert(p).remove_one(p) == base);
  }
}

TEST_CASE("canonical keys round-trip") {
  for (int dim : {2, 4, 16}) {
    int max_t = (dim == 16) ? 2 : 3;
    for (int t = 0; t <= max_t; ++t)
      for (const Relation& r : enumerate_relations(dim, t, RelationClass::injective))
        CHECK(Relation::from_key(r.key()) == r);
  }
}

TEST_CASE("relation enumeration counts") {
  // Multisets over [N]^2: C(N^2 + t - 1, t).
  CHECK(enumerate_relations(2, 2, RelationClass::all).size() == 10);
  CHECK(enumerate_relations(2, 3, RelationClass::all).size() == 20);
  // Injective size 2 at N=2: the y pair {0,1} with any (x1, x2).
  CHECK(enumerate_relations(2, 2, RelationClass::injective).size() == 4);
  CHECK(enumerate_relations(2, 2, RelationClass::bijective).size() == 2);
}

TEST_CASE("relation state expansion") {
  // N=2, R={(0,1),(1,0)}: two-term symmetrization.
  CVector v = expand_relation_state(Relation(2, {{0, 1}, {1, 0}}));
  CVector expect = CVector::Zero(16);
  expect(1 * 4 + 2) = M_SQRT1_2;  // |(0,1),(1,0)>
  expect(2 * 4 + 1) = M_SQRT1_2;  // |(1,0),(0,1)>
  CHECK((v - expect).norm() < 1e-15);

  // Repeated pair: the normalization cancels the identical permutations.
  CVector w = expand_relation_state(Relation(2, {{0, 1}, {0, 1}}));
  CVector ew = CVector::Zero(16);
  ew(1 * 4 + 1) = 1.0;
  CHECK((w - ew).norm() < 1e-15);

  // Unit norm for every multiset relation.
  for (const Relation& r : enumerate_relations(2, 3, RelationClass::all))
    CHECK(expand_relation_state(r).norm() == doctest::Approx(1.0).epsilon(1e-12));

  // Gram matrix of all |R| = 2 relation states at N=2 is the identity.
  auto rels = enumerate_relations(2, 2, RelationClass::all);
  for (size_t i = 0; i < rels.size(); ++i) {
    CVector a = expand_relation_state(rels[i]);
    for (size_t j = i; j < rels.size(); ++j) {
      Complex g = a.dot(expand_relation_state(rels[j]));
      CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-12);
    }
  }

  CHECK_THROWS_AS(
      expand_relation_state(Relation(2, {{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}})),
      CapacityError);
}

TEST_CASE("insertion inner products for injective relations") {
  // <R u {(x,y)} | R' u {(x',y)}> = delta_{xx'} delta_{RR'} when y is a
  // fresh image point of both sides.
  for (int N : {2, 4}) {
    for (int t = 0; t <= (N == 2 ? 1 : 2); ++t) {
      auto rels = enumerate_relations(N, t, RelationClass::injective);
      for (const Relation& r : rels) {
        for (const Relation& r2 : rels) {
          for (int x = 0; x < N; ++x) {
            for (int x2 = 0; x2 < N; ++x2) {
              for (int y = 0; y < N; ++y) {
                if (r.im().count(y) || r2.im().count(y)) continue;
                CVector a = expand_relation_state(
                    r.insert({static_cast<uint16_t>(x), static_cast<uint16_t>(y)}));
                CVector b = expand_relation_state(
                    r2.insert({static_cast<uint16_t>(x2), static_cast<uint16_t>(y)}));
                double expect = (x == x2 && r == r2) ? 1.0 : 0.0;
                CHECK(std::abs(a.dot(b) - expect) < 1e-12);
              }
            }
          }
        }
      }
    }
  }
}

TEST_CASE("order statistics bijection") {
  // Im = {1}, N = 4: ranks (1,2,3) -> (0,2,3).
  std::set<int> im{1};
  CHECK(kth_free_value(im, 4, 1) == 0);
  CHECK(kth_free_value(im, 4, 2) == 2);
  CHECK(kth_free_value(im, 4, 3) == 3);
  CHECK_THROWS_AS(kth_free_value(im, 4, 4), std::invalid_argument);

  // Round-trips on all (R, k) at N = 4.
  for (int t = 0; t <= 3; ++t) {
    for (const Relation& r : enumerate_relations(4, t, RelationClass::injective)) {
      std::set<int> image = r.im();
      for (int k = 1; k <= 4 - t; ++k)
        CHECK(free_value_rank(image, kth_free_value(image, 4, k)) == k);
    }
  }
}

TEST_CASE("restricted set checks") {
  // All injective relations: Z_t = N - t.
  RestrictedSetReport all = restricted_set_check(RestrictedSet::all_injective(4));
  CHECK(all.consistent);
  CHECK(all.uniform_growth);
  REQUIRE(all.growth_table.size() == 3);
  CHECK(all.growth_table[0] == 4);
  CHECK(all.growth_table[1] == 3);
  CHECK(all.growth_table[2] == 2);

  // S^inj(A2) with |A2| = |A3| = 1 at N = 4: Z_t = 4 - 2t.
  RestrictedSetReport a2 = restricted_set_check(RestrictedSet::y_mask_distinct(4, 0x2));
  CHECK(a2.consistent);
  CHECK(a2.uniform_growth);
  REQUIRE(a2.growth_table.size() == 2);
  CHECK(a2.growth_table[0] == 4);
  CHECK(a2.growth_table[1] == 2);

  // Identity relations: Z_t = 1.
  RestrictedSetReport ident = restricted_set_check(RestrictedSet::identity_pairs(4));
  CHECK(ident.consistent);
  CHECK(ident.uniform_growth);
  for (long z : ident.growth_table) CHECK(z == 1);

  // Full-size-only: inconsistent.
  RestrictedSetReport full = restricted_set_check(RestrictedSet::full_size_only(4));
  CHECK_FALSE(full.consistent);
  CHECK_FALSE(full.uniform_growth);

  CHECK_THROWS_AS(restricted_set_check(RestrictedSet::all_injective(32)),
                  CapacityError);
}
