#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace predgame::mi {

// Row-major point matrix [n, d].
struct PointMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;

  const double* point(std::size_t i) const { return data.data() + i * d; }
  double* point(std::size_t i) { return data.data() + i * d; }
};

// Chebyshev (max-norm) distance with early exit once `bound` is exceeded.
double chebyshev(const double* a, const double* b, std::size_t d,
                 double bound = 1e300);

// Exact brute-force reference: distance to the k-th nearest neighbour of
// points[i] among `candidates` (indices into points), excluding i itself.
double knn_distance_brute(const PointMatrix& points, const std::vector<std::size_t>& candidates,
                          std::size_t i, int k);

// Exact brute-force count of candidates within `radius` of the query point
// (strict: dist < radius, otherwise dist <= radius), excluding exclude_index
// (pass points.n for no exclusion).
std::size_t count_within_brute(const PointMatrix& points,
                               const std::vector<std::size_t>& candidates, const double* query,
                               double radius, bool strict, std::size_t exclude_index);

// Exact kd-tree over a subset of points under the Chebyshev metric.
class KdTree {
 public:
  KdTree(const PointMatrix& points, std::vector<std::size_t> indices);
  explicit KdTree(const PointMatrix& points);

  // Distance to the k-th nearest neighbour of points[query_index], excluding
  // the query point itself. k must be <= size()-1 when the query point is in
  // the tree.
  double knn_distance(std::size_t query_index, int k) const;

  std::size_t count_within(const double* query, double radius, bool strict,
                           std::size_t exclude_index) const;

  std::size_t size() const { return indices_.size(); }

 private:
  struct Node {
    int left = -1;
    int right = -1;
    std::size_t begin = 0;
    std::size_t end = 0;  // leaf range in indices_ when left == -1
    std::size_t split_dim = 0;
    double split_value = 0.0;
    std::vector<double> box_min;
    std::vector<double> box_max;
  };

  int build(std::size_t begin, std::size_t end);
  void knn_search(int node, const double* query, std::size_t exclude_index, int k,
                  std::vector<double>& heap) const;
  void count_search(int node, const double* query, double radius, bool strict,
                    std::size_t exclude_index, std::size_t& count) const;

  const PointMatrix& points_;
  std::vector<std::size_t> indices_;
  std::vector<Node> nodes_;
  int root_ = -1;
  static constexpr std::size_t kLeafSize = 16;
};

// Exact k-th neighbour distances for every point, excluding self. Routes to
// the kd-tree for low dimension and large n, brute force otherwise; both
// paths agree exactly.
std::vector<double> knn_distances(const PointMatrix& points, int k);

// Deterministic tie-breaking jitter: adds U[0,1) * 1e-10 * per-dimension
// range to every coordinate. Applied once before neighbour searches.
void apply_jitter(PointMatrix& points, std::uint64_t seed);

}  // namespace predgame::mi
