#include "scvad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scvad/error.hpp"
#include "scvad/parallel.hpp"

namespace scvad {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Tensor2: " + std::to_string(data_.size()) + " values for shape " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Tensor2::Tensor2(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Tensor2: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
  return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor2 Tensor2::row_vector(std::span<const float> values) {
  return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Tensor2::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor2::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_shape(const Tensor2& a, const Tensor2& b, std::string_view op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

namespace {

[[noreturn]] void mismatch(std::string_view op, const Tensor2& a, const Tensor2& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()));
}

}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  Tensor2 out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  parallel_for(a.rows(), inner * n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double* dst = out.row(i).data();
      const double* arow = a.row(i).data();
      for (std::size_t k = 0; k < inner; ++k) {
        const double aik = arow[k];
        const double* brow = b.row(k).data();
        for (std::size_t j = 0; j < n; ++j) dst[j] += aik * brow[j];
      }
    }
  });
  return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) mismatch("matmul_tn", a, b);
  Tensor2 out(a.cols(), b.cols());
  const std::size_t inner = a.rows();
  const std::size_t n = b.cols();
  parallel_for(a.cols(), inner * n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double* dst = out.row(i).data();
      for (std::size_t k = 0; k < inner; ++k) {
        const double aki = a(k, i);
        const double* brow = b.row(k).data();
        for (std::size_t j = 0; j < n; ++j) dst[j] += aki * brow[j];
      }
    }
  });
  return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) mismatch("matmul_nt", a, b);
  Tensor2 out(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  const std::size_t n = b.rows();
  parallel_for(a.rows(), inner * n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* arow = a.row(i).data();
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b.row(j).data();
        double acc = 0.0;
        for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
        out(i, j) = acc;
      }
    }
  });
  return out;
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

}  // namespace scvad
