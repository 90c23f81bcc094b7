#include "scvad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scvad/error.hpp"

namespace scvad {

std::string_view op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kSub: return "sub";
    case OpKind::kScale: return "scale";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kLayerNormRows: return "layer_norm_rows";
    case OpKind::kRelu: return "relu";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSelectRow: return "select_row";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kSum: return "sum";
    case OpKind::kMeanSquare: return "mean_square";
  }
  return "unknown";
}

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id >= nodes_.size()) throw ConfigError("graph: unknown node id " + std::to_string(id));
  return nodes_[id];
}

const Tensor2& Graph::value(NodeId id) const {
  const auto& n = node(id);
  return n.external ? *n.external : n.value;
}

OpKind Graph::kind(NodeId id) const { return node(id).kind; }

NodeId Graph::constant(Tensor2 value) {
  Node n{OpKind::kConstant, {}, std::move(value)};
  return push(std::move(n));
}

NodeId Graph::parameter(const Tensor2& value) {
  Node n{OpKind::kParameter, {}, {}};
  n.external = &value;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  Tensor2 out = scvad::matmul(value(a), value(b));
  return push(Node{OpKind::kMatMul, {a, b}, std::move(out)});
}

NodeId Graph::add(NodeId a, NodeId b) {
  const auto& x = value(a);
  const auto& y = value(b);
  require_same_shape(x, y, "add");
  Tensor2 out = x;
  auto o = out.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += yd[i];
  return push(Node{OpKind::kAdd, {a, b}, std::move(out)});
}

NodeId Graph::add_row(NodeId x, NodeId row) {
  const auto& xv = value(x);
  const auto& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw DimensionError("add_row: row " + std::to_string(rv.rows()) + "x" + std::to_string(rv.cols()) +
                         " does not broadcast over " + std::to_string(xv.rows()) + "x" +
                         std::to_string(xv.cols()));
  }
  Tensor2 out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += rv(0, c);
  }
  return push(Node{OpKind::kAddRow, {x, row}, std::move(out)});
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const auto& x = value(a);
  const auto& y = value(b);
  require_same_shape(x, y, "sub");
  Tensor2 out = x;
  auto o = out.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= yd[i];
  return push(Node{OpKind::kSub, {a, b}, std::move(out)});
}

NodeId Graph::scale(NodeId x, double factor) {
  Tensor2 out = value(x);
  for (auto& v : out.data()) v *= factor;
  Node n{OpKind::kScale, {x}, std::move(out)};
  n.factor = factor;
  return push(std::move(n));
}

NodeId Graph::softmax_rows(NodeId x) {
  Tensor2 out = value(x);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (auto& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (auto& v : row) v /= total;
  }
  return push(Node{OpKind::kSoftmaxRows, {x}, std::move(out)});
}

NodeId Graph::layer_norm_rows(NodeId x, NodeId gain, NodeId bias) {
  const auto& xv = value(x);
  const auto& g = value(gain);
  const auto& b = value(bias);
  if (g.rows() != 1 || g.cols() != xv.cols() || !g.same_shape(b)) {
    throw DimensionError("layer_norm_rows: gain/bias must be 1x" + std::to_string(xv.cols()));
  }
  const std::size_t cols = xv.cols();
  Tensor2 normalized(xv.rows(), cols);
  Tensor2 inv_std(xv.rows(), 1);
  Tensor2 out(xv.rows(), cols);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    inv_std(r, 0) = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      const double xhat = (in[c] - mean) * inv;
      normalized(r, c) = xhat;
      out(r, c) = xhat * g(0, c) + b(0, c);
    }
  }
  Node n{OpKind::kLayerNormRows, {x, gain, bias}, std::move(out)};
  n.cache = std::move(normalized);
  n.aux = std::move(inv_std);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  Tensor2 out = value(x);
  std::uint64_t h = relu_pattern_;
  for (auto& v : out.data()) {
    const bool active = v > 0.0;
    if (!active) v = 0.0;
    h = (h ^ static_cast<std::uint64_t>(active)) * 0x100000001b3ULL;
  }
  relu_pattern_ = h;
  return push(Node{OpKind::kRelu, {x}, std::move(out)});
}

NodeId Graph::transpose(NodeId x) {
  return push(Node{OpKind::kTranspose, {x}, scvad::transpose(value(x))});
}

NodeId Graph::slice_cols(NodeId x, std::size_t begin, std::size_t count) {
  const auto& xv = value(x);
  if (count == 0 || begin + count > xv.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside width " + std::to_string(xv.cols()));
  }
  Tensor2 out(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto src = xv.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  Node n{OpKind::kSliceCols, {x}, std::move(out)};
  n.offset = begin;
  return push(std::move(n));
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = value(parts.front()).rows();
  std::size_t cols = 0;
  for (auto id : parts) {
    if (value(id).rows() != rows) throw DimensionError("concat_cols: row counts differ");
    cols += value(id).cols();
  }
  Tensor2 out(rows, cols);
  std::size_t offset = 0;
  for (auto id : parts) {
    const auto& v = value(id);
    for (std::size_t r = 0; r < rows; ++r) {
      auto src = v.row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += v.cols();
  }
  return push(Node{OpKind::kConcatCols, parts, std::move(out)});
}

NodeId Graph::select_row(NodeId x, std::size_t row) {
  const auto& xv = value(x);
  if (row >= xv.rows()) {
    throw DimensionError("select_row: row " + std::to_string(row) + " outside " + std::to_string(xv.rows()));
  }
  Node n{OpKind::kSelectRow, {x}, Tensor2::row_vector(xv.row(row))};
  n.offset = row;
  return push(std::move(n));
}

NodeId Graph::mean_rows(NodeId x) {
  const auto& xv = value(x);
  if (xv.rows() == 0) throw DimensionError("mean_rows: empty input");
  Tensor2 out(1, xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto src = xv.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) out(0, c) += src[c];
  }
  for (auto& v : out.data()) v /= static_cast<double>(xv.rows());
  return push(Node{OpKind::kMeanRows, {x}, std::move(out)});
}

NodeId Graph::sum(NodeId x) {
  double total = 0.0;
  for (double v : value(x).data()) total += v;
  return push(Node{OpKind::kSum, {x}, Tensor2(1, 1, total)});
}

NodeId Graph::mean_square(NodeId a, NodeId b) {
  const auto& x = value(a);
  const auto& y = value(b);
  require_same_shape(x, y, "mean_square");
  if (x.size() == 0) throw DimensionError("mean_square: empty input");
  Tensor2 diff = x;
  double total = 0.0;
  auto d = diff.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] -= yd[i];
    total += d[i] * d[i];
  }
  Node n{OpKind::kMeanSquare, {a, b}, Tensor2(1, 1, total / static_cast<double>(d.size()))};
  n.cache = std::move(diff);
  return push(std::move(n));
}

namespace {

void accumulate(Tensor2& dst, const Tensor2& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void accumulate_scaled(Tensor2& dst, const Tensor2& src, double factor) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
}

}  // namespace

Gradients Graph::backward(NodeId loss) const {
  const auto& loss_value = value(loss);
  if (loss_value.rows() != 1 || loss_value.cols() != 1) {
    throw ConfigError("backward: loss must be 1x1, got " + std::to_string(loss_value.rows()) + "x" +
                      std::to_string(loss_value.cols()));
  }
  std::vector<Tensor2> grads;
  grads.reserve(nodes_.size());
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const auto& v = value(i);
    grads.emplace_back(v.rows(), v.cols());
  }
  grads[loss](0, 0) = 1.0;

  for (NodeId id = loss + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    const Tensor2& g = grads[id];
    switch (n.kind) {
      case OpKind::kConstant:
      case OpKind::kParameter:
        break;
      case OpKind::kMatMul: {
        const auto& a = value(n.inputs[0]);
        const auto& b = value(n.inputs[1]);
        accumulate(grads[n.inputs[0]], matmul_nt(g, b));
        accumulate(grads[n.inputs[1]], matmul_tn(a, g));
        break;
      }
      case OpKind::kAdd:
        accumulate(grads[n.inputs[0]], g);
        accumulate(grads[n.inputs[1]], g);
        break;
      case OpKind::kAddRow: {
        accumulate(grads[n.inputs[0]], g);
        auto& row = grads[n.inputs[1]];
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto src = g.row(r);
          for (std::size_t c = 0; c < src.size(); ++c) row(0, c) += src[c];
        }
        break;
      }
      case OpKind::kSub:
        accumulate(grads[n.inputs[0]], g);
        accumulate_scaled(grads[n.inputs[1]], g, -1.0);
        break;
      case OpKind::kScale:
        accumulate_scaled(grads[n.inputs[0]], g, n.factor);
        break;
      case OpKind::kSoftmaxRows: {
        auto& dx = grads[n.inputs[0]];
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto y = n.value.row(r);
          auto dy = g.row(r);
          double dot = 0.0;
          for (std::size_t c = 0; c < y.size(); ++c) dot += dy[c] * y[c];
          auto out = dx.row(r);
          for (std::size_t c = 0; c < y.size(); ++c) out[c] += y[c] * (dy[c] - dot);
        }
        break;
      }
      case OpKind::kLayerNormRows: {
        const auto& gain = value(n.inputs[1]);
        auto& dx = grads[n.inputs[0]];
        auto& dgain = grads[n.inputs[1]];
        auto& dbias = grads[n.inputs[2]];
        const std::size_t cols = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto dy = g.row(r);
          auto xhat = n.cache.row(r);
          double mean_dxhat = 0.0;
          double mean_dxhat_xhat = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double dxhat = dy[c] * gain(0, c);
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat[c];
            dgain(0, c) += dy[c] * xhat[c];
            dbias(0, c) += dy[c];
          }
          mean_dxhat /= static_cast<double>(cols);
          mean_dxhat_xhat /= static_cast<double>(cols);
          const double inv = n.aux(r, 0);
          auto out = dx.row(r);
          for (std::size_t c = 0; c < cols; ++c) {
            const double dxhat = dy[c] * gain(0, c);
            out[c] += inv * (dxhat - mean_dxhat - xhat[c] * mean_dxhat_xhat);
          }
        }
        break;
      }
      case OpKind::kRelu: {
        auto& dx = grads[n.inputs[0]];
        auto in = value(n.inputs[0]).data();
        auto d = dx.data();
        auto gd = g.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (in[i] > 0.0) d[i] += gd[i];
        }
        break;
      }
      case OpKind::kTranspose:
        accumulate(grads[n.inputs[0]], scvad::transpose(g));
        break;
      case OpKind::kSliceCols: {
        auto& dx = grads[n.inputs[0]];
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto src = g.row(r);
          auto dst = dx.row(r).subspan(n.offset, src.size());
          for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
        break;
      }
      case OpKind::kConcatCols: {
        std::size_t offset = 0;
        for (auto input : n.inputs) {
          auto& dx = grads[input];
          for (std::size_t r = 0; r < g.rows(); ++r) {
            auto src = g.row(r).subspan(offset, dx.cols());
            auto dst = dx.row(r);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
          }
          offset += dx.cols();
        }
        break;
      }
      case OpKind::kSelectRow: {
        auto dst = grads[n.inputs[0]].row(n.offset);
        auto src = g.row(0);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        break;
      }
      case OpKind::kMeanRows: {
        auto& dx = grads[n.inputs[0]];
        const double w = 1.0 / static_cast<double>(dx.rows());
        for (std::size_t r = 0; r < dx.rows(); ++r) {
          auto dst = dx.row(r);
          for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * g(0, c);
        }
        break;
      }
      case OpKind::kSum: {
        const double s = g(0, 0);
        for (auto& v : grads[n.inputs[0]].data()) v += s;
        break;
      }
      case OpKind::kMeanSquare: {
        const double w = 2.0 * g(0, 0) / static_cast<double>(n.cache.size());
        accumulate_scaled(grads[n.inputs[0]], n.cache, w);
        accumulate_scaled(grads[n.inputs[1]], n.cache, -w);
        break;
      }
    }
  }
  return Gradients(std::move(grads));
}

}  // namespace scvad
