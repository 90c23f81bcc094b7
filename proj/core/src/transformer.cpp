#include "scvad/transformer.hpp"

#include <cmath>
#include <string>

#include "scvad/error.hpp"
#include "scvad/random.hpp"

namespace scvad {

std::string_view to_string(SelfContext value) noexcept {
  return value == SelfContext::kOn ? "on" : "off";
}

std::string_view to_string(Readout value) noexcept {
  return value == Readout::kLastPosition ? "last" : "mean";
}

void ModelConfig::validate() const {
  if (feature_dim == 0) throw ConfigError("model: feature_dim must be positive");
  if (model_dim == 0) throw ConfigError("model: model_dim must be positive");
  if (heads == 0) throw ConfigError("model: heads must be positive");
  if (layers == 0) throw ConfigError("model: layers must be positive");
  if (window == 0) throw ConfigError("model: window must be at least 1");
  if (model_dim % heads != 0) {
    throw ConfigError("model: model_dim " + std::to_string(model_dim) + " not divisible by heads " +
                      std::to_string(heads));
  }
}

bool ModelConfig::same_architecture(const ModelConfig& other) const noexcept {
  return feature_dim == other.feature_dim && model_dim == other.model_dim && heads == other.heads &&
         layers == other.layers && hidden() == other.hidden() && window == other.window &&
         readout == other.readout;
}

namespace {

// Visits tensors in checkpoint order; Params is ModelParams or const ModelParams.
template <typename Params, typename F>
void for_each_tensor(Params& p, F&& f) {
  auto linear = [&](auto& l) {
    f(l.weight);
    f(l.bias);
  };
  auto norm = [&](auto& n) {
    f(n.gain);
    f(n.bias);
  };
  auto attention = [&](auto& a) {
    f(a.wq);
    f(a.wk);
    f(a.wv);
    f(a.wo);
  };
  linear(p.omega);
  for (auto& layer : p.encoder) {
    attention(layer.self_attention);
    norm(layer.norm1);
    linear(layer.mlp_in);
    linear(layer.mlp_out);
    norm(layer.norm2);
  }
  for (auto& layer : p.decoder) {
    attention(layer.self_attention);
    norm(layer.norm1);
    attention(layer.cross_attention);
    norm(layer.norm2);
    linear(layer.mlp_in);
    linear(layer.mlp_out);
    norm(layer.norm3);
  }
  linear(p.phi);
}

Tensor2 glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor2 w(fan_in, fan_out);
  for (auto& v : w.data()) v = rng.uniform(-limit, limit);
  return w;
}

Linear make_linear(Rng& rng, std::size_t in, std::size_t out) {
  Linear l;
  l.weight = glorot(rng, in, out);
  l.bias = Tensor2(1, out);
  return l;
}

Norm make_norm(std::size_t width) { return Norm{Tensor2(1, width, 1.0), Tensor2(1, width)}; }

Attention make_attention(Rng& rng, std::size_t d) {
  Attention a;
  a.wq = glorot(rng, d, d);
  a.wk = glorot(rng, d, d);
  a.wv = glorot(rng, d, d);
  a.wo = glorot(rng, d, d);
  return a;
}

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t d = config.model_dim;
  const std::size_t h = config.hidden();
  ModelParams p;
  p.config = config;
  p.omega = make_linear(rng, config.feature_dim, d);
  for (std::size_t i = 0; i < config.layers; ++i) {
    EncoderLayer layer;
    layer.self_attention = make_attention(rng, d);
    layer.norm1 = make_norm(d);
    layer.mlp_in = make_linear(rng, d, h);
    layer.mlp_out = make_linear(rng, h, d);
    layer.norm2 = make_norm(d);
    p.encoder.push_back(std::move(layer));
  }
  for (std::size_t i = 0; i < config.layers; ++i) {
    DecoderLayer layer;
    layer.self_attention = make_attention(rng, d);
    layer.norm1 = make_norm(d);
    layer.cross_attention = make_attention(rng, d);
    layer.norm2 = make_norm(d);
    layer.mlp_in = make_linear(rng, d, h);
    layer.mlp_out = make_linear(rng, h, d);
    layer.norm3 = make_norm(d);
    p.decoder.push_back(std::move(layer));
  }
  p.phi = make_linear(rng, d, config.feature_dim);
  return p;
}

std::vector<Tensor2*> ModelParams::tensors() {
  std::vector<Tensor2*> out;
  for_each_tensor(*this, [&](Tensor2& t) { out.push_back(&t); });
  return out;
}

std::vector<const Tensor2*> ModelParams::tensors() const {
  std::vector<const Tensor2*> out;
  for_each_tensor(*this, [&](const Tensor2& t) { out.push_back(&t); });
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](const Tensor2& t) { n += t.size(); });
  return n;
}

void ModelParams::round_to_float() {
  for_each_tensor(*this, [](Tensor2& t) {
    for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  });
}

std::size_t parameter_count(const ModelConfig& config) {
  const std::size_t d = config.model_dim;
  const std::size_t h = config.hidden();
  const std::size_t mlp = d * h + h + h * d + d;
  const std::size_t attention = 4 * d * d;
  const std::size_t norm = 2 * d;
  const std::size_t encoder = attention + 2 * norm + mlp;
  const std::size_t decoder = 2 * attention + 3 * norm + mlp;
  return config.feature_dim * d + d + config.layers * (encoder + decoder) + d * config.feature_dim +
         config.feature_dim;
}

std::vector<double> positional_code(std::size_t t, std::size_t model_dim) {
  if (t == 0) throw ConfigError("positional_code: positions are 1-based");
  std::vector<double> code(model_dim);
  for (std::size_t i = 0; 2 * i < model_dim; ++i) {
    const double exponent = static_cast<double>(2 * i) / static_cast<double>(model_dim);
    const double angle = static_cast<double>(t) / std::pow(10000.0, exponent);
    code[2 * i] = std::sin(angle);
    if (2 * i + 1 < model_dim) code[2 * i + 1] = std::cos(angle);
  }
  return code;
}

TransformerGraph::TransformerGraph(Graph& graph, const ModelParams& params, ForwardOptions options)
    : graph_(graph), params_(params), options_(std::move(options)) {
  params_.config.validate();
  for (const Tensor2* t : params_.tensors()) param_nodes_.push_back(graph_.parameter(*t));

  std::size_t cursor = 0;
  auto next = [&] { return param_nodes_.at(cursor++); };
  auto linear = [&] {
    LinearNodes l{};
    l.weight = next();
    l.bias = next();
    return l;
  };
  auto norm = [&] {
    NormNodes n{};
    n.gain = next();
    n.bias = next();
    return n;
  };
  auto attention = [&] {
    AttentionNodes a{};
    a.wq = next();
    a.wk = next();
    a.wv = next();
    a.wo = next();
    return a;
  };
  omega_ = linear();
  for (std::size_t i = 0; i < params_.encoder.size(); ++i) {
    EncoderNodes e{};
    e.self_attention = attention();
    e.norm1 = norm();
    e.mlp_in = linear();
    e.mlp_out = linear();
    e.norm2 = norm();
    encoder_.push_back(e);
  }
  for (std::size_t i = 0; i < params_.decoder.size(); ++i) {
    DecoderNodes dn{};
    dn.self_attention = attention();
    dn.norm1 = norm();
    dn.cross_attention = attention();
    dn.norm2 = norm();
    dn.mlp_in = linear();
    dn.mlp_out = linear();
    dn.norm3 = norm();
    decoder_.push_back(dn);
  }
  phi_ = linear();
}

void TransformerGraph::require_sequence(NodeId x, std::size_t width, const char* op) const {
  const auto& v = graph_.value(x);
  const auto& cfg = params_.config;
  if (v.rows() != cfg.window || v.cols() != width) {
    throw DimensionError(std::string(op) + ": expected " + std::to_string(cfg.window) + "x" +
                         std::to_string(width) + " input, got " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()));
  }
}

NodeId TransformerGraph::linear(NodeId x, const LinearNodes& layer) {
  return graph_.add_row(graph_.matmul(x, layer.weight), layer.bias);
}

NodeId TransformerGraph::norm(NodeId x, const NormNodes& layer) {
  return graph_.layer_norm_rows(x, layer.gain, layer.bias);
}

NodeId TransformerGraph::mlp(NodeId x, const LinearNodes& in, const LinearNodes& out) {
  return linear(graph_.relu(linear(x, in)), out);
}

NodeId TransformerGraph::attention(NodeId query_source, NodeId memory, const AttentionNodes& layer) {
  const std::size_t heads = params_.config.heads;
  const std::size_t head_dim = params_.config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const NodeId q = graph_.matmul(query_source, layer.wq);
  const NodeId k = graph_.matmul(memory, layer.wk);
  const NodeId v = graph_.matmul(memory, layer.wv);
  std::vector<NodeId> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t begin = h * head_dim;
    const NodeId qh = graph_.slice_cols(q, begin, head_dim);
    const NodeId kh = graph_.slice_cols(k, begin, head_dim);
    const NodeId vh = graph_.slice_cols(v, begin, head_dim);
    const NodeId logits = graph_.scale(graph_.matmul(qh, graph_.transpose(kh)), scale);
    const NodeId weights = graph_.softmax_rows(logits);
    if (options_.on_attention) options_.on_attention(graph_.value(weights));
    outputs.push_back(graph_.matmul(weights, vh));
  }
  const NodeId merged = heads == 1 ? outputs.front() : graph_.concat_cols(outputs);
  return graph_.matmul(merged, layer.wo);
}

NodeId TransformerGraph::embed(NodeId features) {
  const auto& cfg = params_.config;
  require_sequence(features, cfg.feature_dim, "embed");
  NodeId z = linear(features, omega_);
  if (options_.positional) {
    Tensor2 codes(cfg.window, cfg.model_dim);
    for (std::size_t t = 1; t <= cfg.window; ++t) {
      const auto code = positional_code(t, cfg.model_dim);
      std::copy(code.begin(), code.end(), codes.row(t - 1).begin());
    }
    z = graph_.add(z, graph_.constant(std::move(codes)));
  }
  return z;
}

NodeId TransformerGraph::encode(NodeId z) {
  require_sequence(z, params_.config.model_dim, "encode");
  NodeId x = z;
  for (const auto& layer : encoder_) {
    x = norm(graph_.add(x, attention(x, x, layer.self_attention)), layer.norm1);
    x = norm(graph_.add(x, mlp(x, layer.mlp_in, layer.mlp_out)), layer.norm2);
  }
  return x;
}

NodeId TransformerGraph::decode(NodeId z, NodeId latent, SelfContext self_context) {
  require_sequence(z, params_.config.model_dim, "decode");
  require_sequence(latent, params_.config.model_dim, "decode");
  if (self_context == SelfContext::kOff) return latent;
  NodeId y = z;
  for (const auto& layer : decoder_) {
    y = norm(graph_.add(y, attention(y, y, layer.self_attention)), layer.norm1);
    y = norm(graph_.add(y, attention(y, latent, layer.cross_attention)), layer.norm2);
    y = norm(graph_.add(y, mlp(y, layer.mlp_in, layer.mlp_out)), layer.norm3);
  }
  return y;
}

NodeId TransformerGraph::predict_next(NodeId features, SelfContext self_context) {
  const NodeId z = embed(features);
  const NodeId u = encode(z);
  const NodeId decoded = decode(z, u, self_context);
  const NodeId summary = params_.config.readout == Readout::kLastPosition
                             ? graph_.select_row(decoded, params_.config.window - 1)
                             : graph_.mean_rows(decoded);
  return linear(summary, phi_);
}

Tensor2 embed(const Tensor2& features, const ModelParams& params, const ForwardOptions& options) {
  Graph g;
  TransformerGraph tg(g, params, options);
  return g.value(tg.embed(g.constant(features)));
}

Tensor2 encode(const Tensor2& z, const ModelParams& params, const ForwardOptions& options) {
  Graph g;
  TransformerGraph tg(g, params, options);
  return g.value(tg.encode(g.constant(z)));
}

Tensor2 decode(const Tensor2& z, const Tensor2& latent, const ModelParams& params, SelfContext self_context,
               const ForwardOptions& options) {
  Graph g;
  TransformerGraph tg(g, params, options);
  return g.value(tg.decode(g.constant(z), g.constant(latent), self_context));
}

std::vector<double> predict_next(const Tensor2& features, const ModelParams& params, SelfContext self_context,
                                 const ForwardOptions& options) {
  Graph g;
  TransformerGraph tg(g, params, options);
  const auto& out = g.value(tg.predict_next(g.constant(features), self_context));
  return {out.data().begin(), out.data().end()};
}

}  // namespace scvad
