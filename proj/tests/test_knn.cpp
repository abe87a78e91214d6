#include <doctest.h>

#include <numeric>

#include "predgame/mi/knn.hpp"
#include "predgame/rng.hpp"

using namespace predgame;
using namespace predgame::mi;

namespace {

PointMatrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  PointMatrix m;
  m.n = n;
  m.d = d;
  m.data.resize(n * d);
  for (auto& x : m.data) x = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("chebyshev distance with early exit") {
  const double a[3] = {0.0, 1.0, 5.0};
  const double b[3] = {0.5, -1.0, 5.1};
  CHECK(chebyshev(a, b, 3) == doctest::Approx(2.0));
  // Early exit still returns a value strictly above the bound when exceeded.
  CHECK(chebyshev(a, b, 3, 0.25) > 0.25);
}

TEST_CASE("kd-tree and brute force agree exactly on kth distances and range counts") {
  for (const std::size_t d : {1u, 2u, 3u}) {
    const auto points = random_points(2500, d, 4000 + d);  // above the tree threshold
    KdTree tree(points);
    std::vector<std::size_t> all(points.n);
    std::iota(all.begin(), all.end(), 0);

    Rng pick(4100);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t i = pick.uniform_int(points.n);
      for (const int k : {1, 3, 7}) {
        const double dist_tree = tree.knn_distance(i, k);
        const double dist_brute = knn_distance_brute(points, all, i, k);
        CHECK(dist_tree == dist_brute);  // exact, no tolerance

        for (const bool strict : {true, false}) {
          const auto count_tree = tree.count_within(points.point(i), dist_tree, strict, i);
          const auto count_brute =
              count_within_brute(points, all, points.point(i), dist_tree, strict, i);
          CHECK(count_tree == count_brute);
          if (strict)
            CHECK(count_tree < static_cast<std::size_t>(k) + 1);
          else
            CHECK(count_tree >= static_cast<std::size_t>(k));
        }
      }
    }
  }
}

TEST_CASE("kd-tree over an index subset excludes outside points") {
  const auto points = random_points(500, 2, 4200);
  std::vector<std::size_t> evens;
  for (std::size_t i = 0; i < points.n; i += 2) evens.push_back(i);
  KdTree tree(points, evens);
  CHECK(tree.size() == evens.size());
  for (const std::size_t i : {0u, 2u, 42u}) {
    const double dist_tree = tree.knn_distance(i, 3);
    const double dist_brute = knn_distance_brute(points, evens, i, 3);
    CHECK(dist_tree == dist_brute);
  }
}

TEST_CASE("knn_distances routes consistently across the n = 2000 threshold") {
  // Same generator either side of the threshold: the small set is a prefix of
  // the big one, checked point-by-point against brute force.
  const auto big = random_points(2100, 2, 4300);
  PointMatrix small = big;
  small.n = 1900;
  small.data.resize(small.n * small.d);

  const auto d_small = knn_distances(small, 3);  // brute path
  std::vector<std::size_t> idx(small.n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(d_small[i] == knn_distance_brute(small, idx, i, 3));

  const auto d_big = knn_distances(big, 3);  // kd-tree path
  std::vector<std::size_t> idx_big(big.n);
  std::iota(idx_big.begin(), idx_big.end(), 0);
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(d_big[i] == knn_distance_brute(big, idx_big, i, 3));
}

TEST_CASE("jitter is deterministic, tiny, and range-scaled") {
  auto a = random_points(200, 3, 4400);
  auto b = a;
  apply_jitter(a, 9);
  apply_jitter(b, 9);
  CHECK(a.data == b.data);

  auto c = random_points(200, 3, 4400);
  apply_jitter(c, 10);
  const auto original = random_points(200, 3, 4400);
  bool any_changed = false;
  for (std::size_t i = 0; i < c.data.size(); ++i) {
    const double delta = std::fabs(c.data[i] - original.data[i]);
    CHECK(delta <= 1e-9);  // 1e-10 * per-dimension range of a unit normal
    if (delta > 0.0) any_changed = true;
  }
  CHECK(any_changed);

  // Constant dimension: zero range means zero jitter.
  PointMatrix flat;
  flat.n = 10;
  flat.d = 1;
  flat.data.assign(10, 3.5);
  apply_jitter(flat, 11);
  for (double x : flat.data) CHECK(x == 3.5);
}
