#include <set>

#include "doctest.h"
#include "tomoprior/error.hpp"
#include "tomoprior/subsets.hpp"

using namespace tomoprior;

TEST_CASE("partition_subsets: 36 views into 12 subsets") {
  const auto p = partition_subsets(36, 12);
  REQUIRE(p.num_subsets() == 12);
  CHECK(p.subsets[0] == std::vector<std::size_t>{0, 12, 24});
  CHECK(p.subsets[1] == std::vector<std::size_t>{1, 13, 25});
}

TEST_CASE("partition_subsets: one subset holds every view") {
  const auto p = partition_subsets(6, 1);
  REQUIRE(p.num_subsets() == 1);
  CHECK(p.subsets[0] == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("partition_subsets: uneven split is disjoint and covering") {
  const auto p = partition_subsets(7, 3);
  CHECK(p.subsets[0].size() == 3);
  CHECK(p.subsets[1].size() == 2);
  CHECK(p.subsets[2].size() == 2);
  std::set<std::size_t> all;
  std::size_t total = 0;
  for (const auto& s : p.subsets) {
    all.insert(s.begin(), s.end());
    total += s.size();
  }
  CHECK(total == 7);
  CHECK(all.size() == 7);
  CHECK(*all.rbegin() == 6);
}

TEST_CASE("partition_subsets: sizes differ by at most one") {
  for (std::size_t views : {5u, 50u, 180u, 900u})
    for (std::size_t n : {1u, 2u, 3u, 5u}) {
      const auto p = partition_subsets(views, n);
      std::size_t lo = views, hi = 0;
      for (const auto& s : p.subsets) {
        lo = std::min(lo, s.size());
        hi = std::max(hi, s.size());
      }
      CHECK(hi - lo <= 1);
    }
}

TEST_CASE("partition_subsets: out-of-range subset counts are rejected") {
  CHECK_THROWS_AS(partition_subsets(6, 0), InvalidInput);
  CHECK_THROWS_AS(partition_subsets(6, 7), InvalidInput);
}
