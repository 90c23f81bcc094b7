#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "scvad/graph.hpp"
#include "scvad/tensor.hpp"

namespace scvad {

// Whether the decoder re-reads the embedded input sequence and cross-attends
// to the encoder latent (On), or the encoder output feeds the output head
// directly (Off, the single-pipeline ablation).
enum class SelfContext : std::uint8_t { kOff = 0, kOn = 1 };

// Which decoder positions the output head reads.
enum class Readout : std::uint8_t { kLastPosition = 0, kMeanPool = 1 };

std::string_view to_string(SelfContext value) noexcept;
std::string_view to_string(Readout value) noexcept;

struct ModelConfig {
  std::size_t feature_dim = 0;
  std::size_t model_dim = 512;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t mlp_hidden = 0;  // 0 selects 2 * model_dim
  std::size_t window = 10;
  Readout readout = Readout::kLastPosition;
  std::uint64_t seed = 0;

  // Throws ConfigError on zero sizes or model_dim not divisible by heads.
  void validate() const;
  std::size_t hidden() const noexcept { return mlp_hidden == 0 ? 2 * model_dim : mlp_hidden; }
  std::size_t head_dim() const noexcept { return model_dim / heads; }

  // Equality on the architectural fields (seed excluded).
  bool same_architecture(const ModelConfig& other) const noexcept;
};

// y = x W + b with W stored (in x out) and b (1 x out).
struct Linear {
  Tensor2 weight;
  Tensor2 bias;
};

struct Norm {
  Tensor2 gain;
  Tensor2 bias;
};

struct Attention {
  Tensor2 wq, wk, wv, wo;
};

struct EncoderLayer {
  Attention self_attention;
  Norm norm1;
  Linear mlp_in, mlp_out;
  Norm norm2;
};

struct DecoderLayer {
  Attention self_attention;
  Norm norm1;
  Attention cross_attention;
  Norm norm2;
  Linear mlp_in, mlp_out;
  Norm norm3;
};

struct ModelParams {
  ModelConfig config;
  Linear omega;
  std::vector<EncoderLayer> encoder;
  std::vector<DecoderLayer> decoder;
  Linear phi;

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)) from config.seed;
  // biases zero, norm gains one.
  static ModelParams initialize(const ModelConfig& config);

  // Every tensor in checkpoint order: omega, encoder layers, decoder layers,
  // phi; within a layer in declaration order, weight before bias.
  std::vector<Tensor2*> tensors();
  std::vector<const Tensor2*> tensors() const;
  std::size_t parameter_count() const;

  // Rounds every entry to the nearest f32, so a checkpoint round-trip is exact.
  void round_to_float();
};

// Count of scalars for a config without allocating.
std::size_t parameter_count(const ModelConfig& config);

// Sinusoidal code for 1-based position t:
// [2i] = sin(t / 10000^(2i/d)), [2i+1] = cos(t / 10000^(2i/d)).
std::vector<double> positional_code(std::size_t t, std::size_t model_dim);

// Inspection hooks, used by tests and diagnostics.
struct ForwardOptions {
  bool positional = true;
  // Called with every attention-weight matrix (rows sum to 1).
  std::function<void(const Tensor2&)> on_attention;
};

// Binds ModelParams into a Graph and builds the forward pass on it. The
// parameter node ids follow ModelParams::tensors() order.
class TransformerGraph {
 public:
  TransformerGraph(Graph& graph, const ModelParams& params, ForwardOptions options = {});

  // features: T x feature_dim -> Z: T x model_dim.
  NodeId embed(NodeId features);
  NodeId encode(NodeId z);
  NodeId decode(NodeId z, NodeId latent, SelfContext self_context);
  // 1 x feature_dim prediction of the frame after the window.
  NodeId predict_next(NodeId features, SelfContext self_context);

  std::span<const NodeId> parameter_nodes() const noexcept { return param_nodes_; }
  Graph& graph() noexcept { return graph_; }

 private:
  struct LinearNodes {
    NodeId weight, bias;
  };
  struct NormNodes {
    NodeId gain, bias;
  };
  struct AttentionNodes {
    NodeId wq, wk, wv, wo;
  };
  struct EncoderNodes {
    AttentionNodes self_attention;
    NormNodes norm1;
    LinearNodes mlp_in, mlp_out;
    NormNodes norm2;
  };
  struct DecoderNodes {
    AttentionNodes self_attention;
    NormNodes norm1;
    AttentionNodes cross_attention;
    NormNodes norm2;
    LinearNodes mlp_in, mlp_out;
    NormNodes norm3;
  };

  NodeId linear(NodeId x, const LinearNodes& layer);
  NodeId attention(NodeId query_source, NodeId memory, const AttentionNodes& layer);
  NodeId mlp(NodeId x, const LinearNodes& in, const LinearNodes& out);
  NodeId norm(NodeId x, const NormNodes& layer);
  void require_sequence(NodeId x, std::size_t width, const char* op) const;

  Graph& graph_;
  const ModelParams& params_;
  ForwardOptions options_;
  std::vector<NodeId> param_nodes_;
  LinearNodes omega_{};
  std::vector<EncoderNodes> encoder_;
  std::vector<DecoderNodes> decoder_;
  LinearNodes phi_{};
};

// Value-level conveniences; each builds and discards a graph.
Tensor2 embed(const Tensor2& features, const ModelParams& params, const ForwardOptions& options = {});
Tensor2 encode(const Tensor2& z, const ModelParams& params, const ForwardOptions& options = {});
Tensor2 decode(const Tensor2& z, const Tensor2& latent, const ModelParams& params,
               SelfContext self_context, const ForwardOptions& options = {});
std::vector<double> predict_next(const Tensor2& features, const ModelParams& params,
                                 SelfContext self_context, const ForwardOptions& options = {});

}  // namespace scvad
