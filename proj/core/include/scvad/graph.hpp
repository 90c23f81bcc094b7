#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "scvad/tensor.hpp"

namespace scvad {

using NodeId = std::size_t;

enum class OpKind : std::uint8_t {
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kAddRow,
  kSub,
  kScale,
  kSoftmaxRows,
  kLayerNormRows,
  kRelu,
  kTranspose,
  kSliceCols,
  kConcatCols,
  kSelectRow,
  kMeanRows,
  kSum,
  kMeanSquare,
};

std::string_view op_name(OpKind kind) noexcept;

class Gradients;

// Reverse-mode tape over Tensor2 values. Nodes are appended in evaluation
// order, which is a topological order, so backward is a single reverse scan.
//
// Parameter nodes refer to caller-owned tensors; those must outlive the graph.
class Graph {
 public:
  inline static constexpr double kLayerNormEpsilon = 1e-5;

  Graph() { nodes_.reserve(128); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeId constant(Tensor2 value);
  NodeId parameter(const Tensor2& value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  // x (r x c) plus a 1 x c row broadcast over every row.
  NodeId add_row(NodeId x, NodeId row);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId softmax_rows(NodeId x);
  // Normalises each row to mean 0 / variance 1, then applies 1 x c gain and bias.
  NodeId layer_norm_rows(NodeId x, NodeId gain, NodeId bias);
  NodeId relu(NodeId x);
  NodeId transpose(NodeId x);
  NodeId slice_cols(NodeId x, std::size_t begin, std::size_t count);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  NodeId select_row(NodeId x, std::size_t row);
  NodeId mean_rows(NodeId x);
  NodeId sum(NodeId x);
  // mean((a - b)^2) as a 1 x 1 node.
  NodeId mean_square(NodeId a, NodeId b);

  const Tensor2& value(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Hash of which ReLU inputs were positive. Two evaluations of the same
  // structure with equal hashes took the same linear piece of every ReLU.
  std::uint64_t activation_pattern() const noexcept { return relu_pattern_; }

  // Throws ConfigError unless `loss` is 1 x 1.
  Gradients backward(NodeId loss) const;

 private:
  struct Node {
    Node(OpKind k, std::vector<NodeId> in, Tensor2 v)
        : kind(k), inputs(std::move(in)), value(std::move(v)) {}

    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor2 value;
    const Tensor2* external = nullptr;  // parameter storage
    Tensor2 cache;                      // per-op saved state for backward
    Tensor2 aux;
    double factor = 0.0;
    std::size_t offset = 0;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
  std::uint64_t relu_pattern_ = 0xcbf29ce484222325ULL;
};

// Gradients of a scalar loss with respect to every node of a graph.
class Gradients {
 public:
  // Zero tensor of the node's shape when the loss does not depend on it.
  const Tensor2& of(NodeId id) const { return grads_.at(id); }
  // Moves the gradient out; `of(id)` is empty afterwards.
  Tensor2 take(NodeId id) { return std::move(grads_.at(id)); }

 private:
  friend class Graph;
  explicit Gradients(std::vector<Tensor2> grads) : grads_(std::move(grads)) {}
  std::vector<Tensor2> grads_;
};

}  // namespace scvad
