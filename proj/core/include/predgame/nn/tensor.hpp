#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace predgame::nn {

// Dense 64-bit float buffer with a shape. Rank 1 and 2 are what the policies
// use; rank-2 data is stored column-major so Eigen maps are zero-copy.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape_) {
    Tensor t;
    t.shape = std::move(shape_);
    std::size_t n = 1;
    for (std::size_t d : t.shape) n *= d;
    t.data.assign(n, 0.0);
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  Eigen::Map<Eigen::MatrixXd> mat() {
    return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
  }
  Eigen::Map<const Eigen::MatrixXd> mat() const {
    return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
  }
  Eigen::Map<Eigen::VectorXd> vec() {
    return {data.data(), static_cast<Eigen::Index>(size())};
  }
  Eigen::Map<const Eigen::VectorXd> vec() const {
    return {data.data(), static_cast<Eigen::Index>(size())};
  }

  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor* tensor;
};

}  // namespace predgame::nn
