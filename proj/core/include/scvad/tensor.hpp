#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace scvad {

// Dense row-major matrix. Storage and accumulation are 64-bit.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);
  Tensor2(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor2 row_vector(std::span<const double> values);
  static Tensor2 row_vector(std::span<const float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Tensor2& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void fill(double value);
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws DimensionError naming `op` unless a and b have identical shapes.
void require_same_shape(const Tensor2& a, const Tensor2& b, std::string_view op);

// Dense kernels. Each output row is reduced in a fixed order, so results do
// not depend on how rows are split across threads.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);     // a * b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);  // a^T * b
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);  // a * b^T
Tensor2 transpose(const Tensor2& a);

}  // namespace scvad
