#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "ddpseg/errors.hpp"

namespace ddpseg {

// Dense row-major 2D array, indexed (row, col).
template <typename T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[index(r, c)]; }
  const T& operator()(int r, int c) const { return data_[index(r, c)]; }

  std::span<T> row(int r) { return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const T> row(int r) const {
    return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool same_shape(const Grid2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool operator==(const Grid2&) const = default;

 private:
  static std::size_t checked_size(int a, int b) {
    if (a < 0 || b < 0) throw DimensionError("negative grid dimension");
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(b);
  }
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

// Dense N x X x Z volume; the innermost (contiguous) axis is z, so each
// (surface, column) pair owns one contiguous A-scan.
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  Grid3(int n, int x, int z, T fill = T{})
      : n_(n), x_(x), z_(z), data_(checked_size(n, x, z), fill) {}

  int surfaces() const { return n_; }
  int width() const { return x_; }
  int height() const { return z_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int i, int x, int z) { return data_[index(i, x, z)]; }
  const T& operator()(int i, int x, int z) const { return data_[index(i, x, z)]; }

  std::span<T> column(int i, int x) {
    return {data_.data() + index(i, x, 0), static_cast<std::size_t>(z_)};
  }
  std::span<const T> column(int i, int x) const {
    return {data_.data() + index(i, x, 0), static_cast<std::size_t>(z_)};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <typename U>
  bool same_shape(const Grid3<U>& o) const {
    return n_ == o.surfaces() && x_ == o.width() && z_ == o.height();
  }
  bool operator==(const Grid3&) const = default;

 private:
  static std::size_t checked_size(int n, int x, int z) {
    if (n < 0 || x < 0 || z < 0) throw DimensionError("negative volume dimension");
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(x) * static_cast<std::size_t>(z);
  }
  std::size_t index(int i, int x, int z) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(x_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(z_) +
           static_cast<std::size_t>(z);
  }

  int n_ = 0;
  int x_ = 0;
  int z_ = 0;
  std::vector<T> data_;
};

// Distinct volume types that share storage but must not be mixed up
// (logits vs. probabilities vs. costs).
template <typename Tag>
class TaggedVolume : public Grid3<double> {
 public:
  using Grid3<double>::Grid3;
  TaggedVolume() = default;
  explicit TaggedVolume(Grid3<double> g) : Grid3<double>(std::move(g)) {}
};

}  // namespace ddpseg
