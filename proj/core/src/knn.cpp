#include "predgame/mi/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "predgame/errors.hpp"
#include "predgame/rng.hpp"

namespace predgame::mi {

double chebyshev(const double* a, const double* b, std::size_t d, double bound) {
  double dist = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = std::fabs(a[j] - b[j]);
    if (diff > dist) {
      dist = diff;
      if (dist > bound) return dist;
    }
  }
  return dist;
}

namespace {

// Keeps the k smallest distances seen so far; heap[0] is the largest of them.
void heap_push(std::vector<double>& heap, int k, double dist) {
  if (static_cast<int>(heap.size()) < k) {
    heap.push_back(dist);
    std::push_heap(heap.begin(), heap.end());
  } else if (dist < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = dist;
    std::push_heap(heap.begin(), heap.end());
  }
}

}  // namespace

double knn_distance_brute(const PointMatrix& points, const std::vector<std::size_t>& candidates,
                          std::size_t i, int k) {
  std::vector<double> heap;
  heap.reserve(k + 1);
  const double* q = points.point(i);
  for (std::size_t idx : candidates) {
    if (idx == i) continue;
    const double bound = static_cast<int>(heap.size()) < k ? 1e300 : heap.front();
    const double dist = chebyshev(q, points.point(idx), points.d, bound);
    heap_push(heap, k, dist);
  }
  if (static_cast<int>(heap.size()) < k)
    throw InsufficientDataError("knn: fewer than k neighbours available");
  return heap.front();
}

std::size_t count_within_brute(const PointMatrix& points,
                               const std::vector<std::size_t>& candidates, const double* query,
                               double radius, bool strict, std::size_t exclude_index) {
  std::size_t count = 0;
  for (std::size_t idx : candidates) {
    if (idx == exclude_index) continue;
    const double dist = chebyshev(query, points.point(idx), points.d, radius);
    if (strict ? dist < radius : dist <= radius) ++count;
  }
  return count;
}

KdTree::KdTree(const PointMatrix& points, std::vector<std::size_t> indices)
    : points_(points), indices_(std::move(indices)) {
  if (!indices_.empty()) root_ = build(0, indices_.size());
}

KdTree::KdTree(const PointMatrix& points) : points_(points) {
  indices_.resize(points.n);
  std::iota(indices_.begin(), indices_.end(), 0);
  if (!indices_.empty()) root_ = build(0, indices_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  const std::size_t d = points_.d;
  node.box_min.assign(d, 1e300);
  node.box_max.assign(d, -1e300);
  for (std::size_t i = begin; i < end; ++i) {
    const double* p = points_.point(indices_[i]);
    for (std::size_t j = 0; j < d; ++j) {
      node.box_min[j] = std::min(node.box_min[j], p[j]);
      node.box_max[j] = std::max(node.box_max[j], p[j]);
    }
  }

  const int node_id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));

  if (end - begin > kLeafSize) {
    // Split on the widest dimension at the median.
    std::size_t split_dim = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double w = nodes_[node_id].box_max[j] - nodes_[node_id].box_min[j];
      if (w > widest) {
        widest = w;
        split_dim = j;
      }
    }
    if (widest > 0.0) {
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(indices_.begin() + begin, indices_.begin() + mid, indices_.begin() + end,
                       [&](std::size_t a, std::size_t b) {
                         return points_.point(a)[split_dim] < points_.point(b)[split_dim];
                       });
      const int left = build(begin, mid);
      const int right = build(mid, end);
      nodes_[node_id].left = left;
      nodes_[node_id].right = right;
      nodes_[node_id].split_dim = split_dim;
      nodes_[node_id].split_value = points_.point(indices_[mid])[split_dim];
    }
  }
  return node_id;
}

namespace {

// Chebyshev distance from a query to an axis-aligned box (0 inside).
double box_min_distance(const double* query, const std::vector<double>& lo,
                        const std::vector<double>& hi) {
  double dist = 0.0;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    double dj = 0.0;
    if (query[j] < lo[j])
      dj = lo[j] - query[j];
    else if (query[j] > hi[j])
      dj = query[j] - hi[j];
    dist = std::max(dist, dj);
  }
  return dist;
}

// Largest Chebyshev distance from the query to any corner of the box.
double box_max_distance(const double* query, const std::vector<double>& lo,
                        const std::vector<double>& hi) {
  double dist = 0.0;
  for (std::size_t j = 0; j < lo.size(); ++j)
    dist = std::max(dist, std::max(std::fabs(query[j] - lo[j]), std::fabs(query[j] - hi[j])));
  return dist;
}

}  // namespace

void KdTree::knn_search(int node_id, const double* query, std::size_t exclude_index, int k,
                        std::vector<double>& heap) const {
  const Node& node = nodes_[node_id];
  const double best = static_cast<int>(heap.size()) < k ? 1e300 : heap.front();
  if (box_min_distance(query, node.box_min, node.box_max) > best) return;

  if (node.left < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = indices_[i];
      if (idx == exclude_index) continue;
      const double bound = static_cast<int>(heap.size()) < k ? 1e300 : heap.front();
      const double dist = chebyshev(query, points_.point(idx), points_.d, bound);
      heap_push(heap, k, dist);
    }
    return;
  }

  // Descend toward the query side first.
  const bool left_first = query[node.split_dim] < node.split_value;
  knn_search(left_first ? node.left : node.right, query, exclude_index, k, heap);
  knn_search(left_first ? node.right : node.left, query, exclude_index, k, heap);
}

double KdTree::knn_distance(std::size_t query_index, int k) const {
  std::vector<double> heap;
  heap.reserve(k + 1);
  knn_search(root_, points_.point(query_index), query_index, k, heap);
  if (static_cast<int>(heap.size()) < k)
    throw InsufficientDataError("kd-tree: fewer than k neighbours available");
  return heap.front();
}

void KdTree::count_search(int node_id, const double* query, double radius, bool strict,
                          std::size_t exclude_index, std::size_t& count) const {
  const Node& node = nodes_[node_id];
  const double lo = box_min_distance(query, node.box_min, node.box_max);
  if (strict ? lo >= radius : lo > radius) return;
  const double hi = box_max_distance(query, node.box_min, node.box_max);
  const bool fully_inside = strict ? hi < radius : hi <= radius;
  if (fully_inside) {
    count += node.end - node.begin;
    if (exclude_index != points_.n) {
      for (std::size_t i = node.begin; i < node.end; ++i)
        if (indices_[i] == exclude_index) {
          --count;
          break;
        }
    }
    return;
  }
  if (node.left < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = indices_[i];
      if (idx == exclude_index) continue;
      const double dist = chebyshev(query, points_.point(idx), points_.d, radius);
      if (strict ? dist < radius : dist <= radius) ++count;
    }
    return;
  }
  count_search(node.left, query, radius, strict, exclude_index, count);
  count_search(node.right, query, radius, strict, exclude_index, count);
}

std::size_t KdTree::count_within(const double* query, double radius, bool strict,
                                 std::size_t exclude_index) const {
  std::size_t count = 0;
  if (root_ >= 0) count_search(root_, query, radius, strict, exclude_index, count);
  return count;
}

std::vector<double> knn_distances(const PointMatrix& points, int k) {
  std::vector<double> out(points.n);
  const bool use_tree = points.n > 2000 && points.d <= 16;
  if (use_tree) {
    KdTree tree(points);
    for (std::size_t i = 0; i < points.n; ++i) out[i] = tree.knn_distance(i, k);
  } else {
    std::vector<std::size_t> all(points.n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < points.n; ++i) out[i] = knn_distance_brute(points, all, i, k);
  }
  return out;
}

void apply_jitter(PointMatrix& points, std::uint64_t seed) {
  if (points.n == 0) return;
  Rng rng(seed);
  std::vector<double> range(points.d, 0.0);
  for (std::size_t j = 0; j < points.d; ++j) {
    double lo = points.point(0)[j];
    double hi = lo;
    for (std::size_t i = 1; i < points.n; ++i) {
      lo = std::min(lo, points.point(i)[j]);
      hi = std::max(hi, points.point(i)[j]);
    }
    range[j] = hi - lo;
  }
  for (std::size_t i = 0; i < points.n; ++i)
    for (std::size_t j = 0; j < points.d; ++j)
      points.point(i)[j] += rng.uniform() * 1e-10 * range[j];
}

}  // namespace predgame::mi
