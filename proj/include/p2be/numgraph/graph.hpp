// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0
//
// A small static computation graph over a closed operator set with
// hand-written backward rules. Nodes are appended in topological order;
// evaluation walks them forward and gradients walk them in reverse.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "p2be/error.hpp"
#include "p2be/numgraph/tensor.hpp"

namespace p2be::numgraph {

using NodeId = std::size_t;

enum class OpKind {
  input,
  conv2d,
  dense,
  relu,
  global_avg_pool,
  add,
  scale,
  softmax,
};

const char* op_name(OpKind kind);

/// Ordered, named parameter tensors. Order is insertion order and defines
/// serialization and reduction order.
template <class T>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    BasicTensor<T> value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  BasicTensor<T>& add(std::string name, BasicTensor<T> value) {
    if (find(name)) throw ShapeError("duplicate parameter '" + name + "'");
    entries_.push_back({std::move(name), std::move(value)});
    return entries_.back().value;
  }

  BasicTensor<T>* find(const std::string& name) {
    for (auto& e : entries_)
      if (e.name == name) return &e.value;
    return nullptr;
  }
  const BasicTensor<T>* find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e.value;
    return nullptr;
  }

  BasicTensor<T>& at(const std::string& name) {
    if (auto* t = find(name)) return *t;
    throw ShapeError("unknown parameter '" + name + "'");
  }
  const BasicTensor<T>& at(const std::string& name) const {
    if (const auto* t = find(name)) return *t;
    throw ShapeError("unknown parameter '" + name + "'");
  }

  std::size_t size() const noexcept { return entries_.size(); }
  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  ParameterSet zeros_like() const {
    ParameterSet out;
    for (const auto& e : entries_) out.add(e.name, BasicTensor<T>(e.value.shape()));
    return out;
  }

  /// Element-wise `this += other`; names and shapes must match.
  void accumulate(const ParameterSet& other) {
    if (other.size() != size()) throw ShapeError("parameter set size mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto& dst = entries_[i].value;
      const auto& src = other.entries_[i].value;
      if (entries_[i].name != other.entries_[i].name || dst.shape() != src.shape()) {
        throw ShapeError("parameter '" + entries_[i].name + "' mismatch");
      }
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }

  template <class U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<Entry> entries_;
};

struct Node {
  OpKind kind = OpKind::input;
  std::string name;
  std::vector<NodeId> inputs;
  Shape shape;  // per-sample output shape (no batch axis)
  std::size_t kernel = 0;
  std::size_t padding = 0;
  double factor = 1.0;
  std::string weight;
  std::string bias;
};

/// Retained node outputs of one forward evaluation.
template <class T>
struct Trace {
  std::vector<BasicTensor<T>> values;
  std::size_t batch = 0;
};

template <class T>
struct Gradients {
  ParameterSet<T> parameters;
  BasicTensor<T> input;
};

template <class T>
class BasicGraph {
 public:
  /// `sample_shape` excludes the batch axis, e.g. {C, H, W}.
  explicit BasicGraph(Shape sample_shape) {
    if (sample_shape.empty()) throw ShapeError("graph input shape is empty");
    for (auto d : sample_shape)
      if (d == 0) throw ShapeError("graph input shape has a zero dimension");
    Node n;
    n.kind = OpKind::input;
    n.name = "input";
    n.shape = std::move(sample_shape);
    nodes_.push_back(std::move(n));
  }

  NodeId input() const noexcept { return 0; }
  const Shape& input_shape() const noexcept { return nodes_.front().shape; }
  const Shape& output_shape() const { return nodes_.at(output_).shape; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  NodeId output() const noexcept { return output_; }

  void set_output(NodeId id) {
    check_id(id, "set_output");
    output_ = id;
  }

  NodeId conv2d(NodeId x, std::size_t out_channels, std::size_t kernel,
                std::size_t padding, std::string name = {}) {
    const Node& in = node(x, "conv2d");
    name = auto_name(std::move(name), "conv");
    if (in.shape.size() != 3) {
      throw ShapeError("node '" + name + "': conv2d expects [C,H,W] input, got " +
                       shape_string(in.shape));
    }
    if (out_channels == 0 || kernel == 0) {
      throw ShapeError("node '" + name + "': conv2d needs positive channels and kernel");
    }
    const std::size_t h = in.shape[1] + 2 * padding;
    const std::size_t w = in.shape[2] + 2 * padding;
    if (h < kernel || w < kernel) {
      throw ShapeError("node '" + name + "': kernel " + std::to_string(kernel) +
                       " larger than padded input " + shape_string(in.shape));
    }
    Node n;
    n.kind = OpKind::conv2d;
    n.name = name;
    n.inputs = {x};
    n.kernel = kernel;
    n.padding = padding;
    n.shape = {out_channels, h - kernel + 1, w - kernel + 1};
    n.weight = name + ".weight";
    n.bias = name + ".bias";
    params_.add(n.weight, BasicTensor<T>({out_channels, in.shape[0], kernel, kernel}));
    params_.add(n.bias, BasicTensor<T>({out_channels}));
    return append(std::move(n));
  }

  /// Affine map over the flattened per-sample input.
  NodeId dense(NodeId x, std::size_t out_features, std::string name = {}) {
    const Node& in = node(x, "dense");
    name = auto_name(std::move(name), "dense");
    if (out_features == 0) throw ShapeError("node '" + name + "': zero output features");
    Node n;
    n.kind = OpKind::dense;
    n.name = name;
    n.inputs = {x};
    n.shape = {out_features};
    n.weight = name + ".weight";
    n.bias = name + ".bias";
    params_.add(n.weight, BasicTensor<T>({out_features, shape_size(in.shape)}));
    params_.add(n.bias, BasicTensor<T>({out_features}));
    return append(std::move(n));
  }

  NodeId relu(NodeId x, std::string name = {}) {
    return unary(OpKind::relu, x, auto_name(std::move(name), "relu"), node(x, "relu").shape);
  }

  NodeId global_avg_pool(NodeId x, std::string name = {}) {
    const Node& in = node(x, "global_avg_pool");
    name = auto_name(std::move(name), "gap");
    if (in.shape.size() != 3) {
      throw ShapeError("node '" + name + "': global_avg_pool expects [C,H,W], got " +
                       shape_string(in.shape));
    }
    return unary(OpKind::global_avg_pool, x, std::move(name), {in.shape[0]});
  }

  NodeId add(NodeId a, NodeId b, std::string name = {}) {
    const Node& na = node(a, "add");
    const Node& nb = node(b, "add");
    name = auto_name(std::move(name), "add");
    if (na.shape != nb.shape) {
      throw ShapeError("node '" + name + "': add operands " + shape_string(na.shape) +
                       " and " + shape_string(nb.shape) + " differ");
    }
    Node n;
    n.kind = OpKind::add;
    n.name = std::move(name);
    n.inputs = {a, b};
    n.shape = na.shape;
    return append(std::move(n));
  }

  NodeId scale(NodeId x, double factor, std::string name = {}) {
    NodeId id = unary(OpKind::scale, x, auto_name(std::move(name), "scale"), node(x, "scale").shape);
    nodes_[id].factor = factor;
    return id;
  }

  NodeId softmax(NodeId x, std::string name = {}) {
    const Node& in = node(x, "softmax");
    name = auto_name(std::move(name), "softmax");
    if (in.shape.size() != 1) {
      throw ShapeError("node '" + name + "': softmax expects a vector per sample, got " +
                       shape_string(in.shape));
    }
    return unary(OpKind::softmax, x, std::move(name), in.shape);
  }

  ParameterSet<T>& parameters() noexcept { return params_; }
  const ParameterSet<T>& parameters() const noexcept { return params_; }

  /// He-normal weights, zero biases.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const Node& n : nodes_) {
      if (n.weight.empty()) continue;
      auto& w = params_.at(n.weight);
      const std::size_t fan_in = w.size() / w.dim(0);
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
      for (auto& v : w.data()) v = T(dist(rng));
      params_.at(n.bias).fill(T{0});
    }
  }

  Trace<T> evaluate(const BasicTensor<T>& input) const;
  Gradients<T> gradients(const Trace<T>& trace, const BasicTensor<T>& upstream) const;

  /// Evaluates and retains intermediates for a later backward().
  BasicTensor<T> forward(const BasicTensor<T>& input) {
    last_ = evaluate(input);
    return last_->values[output_];
  }

  Gradients<T> backward(const BasicTensor<T>& upstream) const {
    if (!last_) throw StateError("backward called before forward");
    return gradients(*last_, upstream);
  }

  const std::optional<Trace<T>>& last_trace() const noexcept { return last_; }

  /// Sign (-1, 0, +1) of every relu input in the trace, in node order.
  std::vector<signed char> relu_input_signs(const Trace<T>& trace) const {
    std::vector<signed char> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].kind != OpKind::relu) continue;
      for (T v : trace.values[nodes_[i].inputs[0]].data())
        out.push_back(v > T{0} ? 1 : (v < T{0} ? -1 : 0));
    }
    return out;
  }

  template <class U>
  BasicGraph<U> cast() const {
    BasicGraph<U> out(input_shape());
    out.adopt(nodes_, params_.template cast<U>(), output_);
    return out;
  }

  // Used by cast(); replaces the whole structure.
  void adopt(std::vector<Node> nodes, ParameterSet<T> params, NodeId output) {
    nodes_ = std::move(nodes);
    params_ = std::move(params);
    output_ = output;
    last_.reset();
  }

 private:
  const Node& node(NodeId id, const char* what) const {
    check_id(id, what);
    return nodes_[id];
  }

  void check_id(NodeId id, const char* what) const {
    if (id >= nodes_.size()) {
      throw ShapeError(std::string(what) + ": unknown node id " + std::to_string(id));
    }
  }

  std::string auto_name(std::string name, const char* prefix) const {
    if (!name.empty()) {
      for (const Node& n : nodes_)
        if (n.name == name) throw ShapeError("duplicate node name '" + name + "'");
      return name;
    }
    return std::string(prefix) + std::to_string(nodes_.size());
  }

  NodeId unary(OpKind kind, NodeId x, std::string name, Shape shape) {
    Node n;
    n.kind = kind;
    n.name = std::move(name);
    n.inputs = {x};
    n.shape = std::move(shape);
    return append(std::move(n));
  }

  NodeId append(Node n) {
    nodes_.push_back(std::move(n));
    output_ = nodes_.size() - 1;
    return output_;
  }

  std::vector<Node> nodes_;
  ParameterSet<T> params_;
  NodeId output_ = 0;
  std::optional<Trace<T>> last_;
};

using Graph = BasicGraph<float>;

// ---------------------------------------------------------------------------
// Kernels

namespace detail {

template <class T>
void conv2d_forward(const T* in, std::size_t channels, std::size_t height,
                    std::size_t width, const T* weight, const T* bias,
                    std::size_t out_channels, std::size_t kernel,
                    std::size_t pad, std::size_t out_h, std::size_t out_w,
                    T* out) {
  const auto ipad = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t o = 0; o < out_channels; ++o) {
    T* plane = out + o * out_h * out_w;
    std::fill(plane, plane + out_h * out_w, bias[o]);
    for (std::size_t c = 0; c < channels; ++c) {
      const T* src = in + c * height * width;
      const T* wk = weight + (o * channels + c) * kernel * kernel;
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const T wv = wk[ky * kernel + kx];
          const std::ptrdiff_t dx = std::ptrdiff_t(kx) - ipad;
          const std::size_t x0 = dx < 0 ? std::size_t(-dx) : 0;
          const auto x1 = std::size_t(std::max<std::ptrdiff_t>(
              0, std::min<std::ptrdiff_t>(std::ptrdiff_t(out_w), std::ptrdiff_t(width) - dx)));
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::ptrdiff_t iy = std::ptrdiff_t(oy + ky) - ipad;
            if (iy < 0 || iy >= std::ptrdiff_t(height)) continue;
            const T* row = src + std::size_t(iy) * width;
            T* dst = plane + oy * out_w;
            for (std::size_t ox = x0; ox < x1; ++ox) dst[ox] += wv * row[ox + dx];
          }
        }
      }
    }
  }
}

template <class T>
void conv2d_backward(const T* in, std::size_t channels, std::size_t height,
                     std::size_t width, const T* weight,
                     std::size_t out_channels, std::size_t kernel,
                     std::size_t pad, std::size_t out_h, std::size_t out_w,
                     const T* grad_out, T* grad_in, T* grad_weight,
                     T* grad_bias) {
  const auto ipad = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t o = 0; o < out_channels; ++o) {
    const T* g = grad_out + o * out_h * out_w;
    T bsum{0};
    for (std::size_t i = 0; i < out_h * out_w; ++i) bsum += g[i];
    grad_bias[o] += bsum;
    for (std::size_t c = 0; c < channels; ++c) {
      const T* src = in + c * height * width;
      T* gsrc = grad_in ? grad_in + c * height * width : nullptr;
      const T* wk = weight + (o * channels + c) * kernel * kernel;
      T* gwk = grad_weight + (o * channels + c) * kernel * kernel;
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const T wv = wk[ky * kernel + kx];
          const std::ptrdiff_t dx = std::ptrdiff_t(kx) - ipad;
          const std::size_t x0 = dx < 0 ? std::size_t(-dx) : 0;
          const auto x1 = std::size_t(std::max<std::ptrdiff_t>(
              0, std::min<std::ptrdiff_t>(std::ptrdiff_t(out_w), std::ptrdiff_t(width) - dx)));
          T acc{0};
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::ptrdiff_t iy = std::ptrdiff_t(oy + ky) - ipad;
            if (iy < 0 || iy >= std::ptrdiff_t(height)) continue;
            const T* row = src + std::size_t(iy) * width;
            const T* grow = g + oy * out_w;
            for (std::size_t ox = x0; ox < x1; ++ox) acc += grow[ox] * row[ox + dx];
            if (gsrc) {
              T* gi = gsrc + std::size_t(iy) * width;
              for (std::size_t ox = x0; ox < x1; ++ox) gi[ox + dx] += wv * grow[ox];
            }
          }
          gwk[ky * kernel + kx] += acc;
        }
      }
    }
  }
}

}  // namespace detail

inline const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::input: return "input";
    case OpKind::conv2d: return "conv2d";
    case OpKind::dense: return "dense";
    case OpKind::relu: return "relu";
    case OpKind::global_avg_pool: return "global_avg_pool";
    case OpKind::add: return "add";
    case OpKind::scale: return "scale";
    case OpKind::softmax: return "softmax";
  }
  return "?";
}

template <class T>
Trace<T> BasicGraph<T>::evaluate(const BasicTensor<T>& input) const {
  const Shape& sample = input_shape();
  if (input.rank() != sample.size() + 1 ||
      !std::equal(sample.begin(), sample.end(), input.shape().begin() + 1)) {
    throw ShapeError("node 'input': expected [batch] + " + shape_string(sample) +
                     ", got " + shape_string(input.shape()));
  }
  Trace<T> trace;
  trace.batch = input.dim(0);
  const std::size_t batch = trace.batch;
  trace.values.reserve(nodes_.size());
  trace.values.push_back(input);

  for (std::size_t id = 1; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    Shape out_shape = n.shape;
    out_shape.insert(out_shape.begin(), batch);
    BasicTensor<T> out(out_shape);
    const BasicTensor<T>& x = trace.values[n.inputs[0]];
    const std::size_t in_len = x.size() / batch;
    const std::size_t out_len = out.size() / batch;

    switch (n.kind) {
      case OpKind::conv2d: {
        const Shape& is = nodes_[n.inputs[0]].shape;
        const auto& w = params_.at(n.weight);
        const auto& b = params_.at(n.bias);
        for (std::size_t s = 0; s < batch; ++s) {
          detail::conv2d_forward(x.data().data() + s * in_len, is[0], is[1], is[2],
                                 w.data().data(), b.data().data(), n.shape[0],
                                 n.kernel, n.padding, n.shape[1], n.shape[2],
                                 out.data().data() + s * out_len);
        }
        break;
      }
      case OpKind::dense: {
        const auto& w = params_.at(n.weight);
        const auto& b = params_.at(n.bias);
        for (std::size_t s = 0; s < batch; ++s) {
          const T* xs = x.data().data() + s * in_len;
          for (std::size_t o = 0; o < out_len; ++o) {
            const T* row = w.data().data() + o * in_len;
            T acc = b[o];
            for (std::size_t f = 0; f < in_len; ++f) acc += row[f] * xs[f];
            out[s * out_len + o] = acc;
          }
        }
        break;
      }
      case OpKind::relu:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > T{0} ? x[i] : T{0};
        break;
      case OpKind::global_avg_pool: {
        const Shape& is = nodes_[n.inputs[0]].shape;
        const std::size_t plane = is[1] * is[2];
        for (std::size_t s = 0; s < batch; ++s)
          for (std::size_t c = 0; c < is[0]; ++c) {
            const T* p = x.data().data() + s * in_len + c * plane;
            T acc{0};
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            out[s * out_len + c] = acc / T(plane);
          }
        break;
      }
      case OpKind::add: {
        const auto& y = trace.values[n.inputs[1]];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
        break;
      }
      case OpKind::scale:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(n.factor) * x[i];
        break;
      case OpKind::softmax:
        for (std::size_t s = 0; s < batch; ++s) {
          const T* xs = x.data().data() + s * in_len;
          T* ys = out.data().data() + s * out_len;
          const T mx = *std::max_element(xs, xs + in_len);
          double total = 0.0;
          for (std::size_t k = 0; k < in_len; ++k) {
            ys[k] = T(std::exp(double(xs[k] - mx)));
            total += double(ys[k]);
          }
          for (std::size_t k = 0; k < in_len; ++k) ys[k] = T(double(ys[k]) / total);
        }
        break;
      case OpKind::input:
        break;
    }
    trace.values.push_back(std::move(out));
  }
  if (!trace.values[output_].all_finite()) {
    throw NumericError("node '" + nodes_[output_].name + "': non-finite output");
  }
  return trace;
}

template <class T>
Gradients<T> BasicGraph<T>::gradients(const Trace<T>& trace,
                                      const BasicTensor<T>& upstream) const {
  if (trace.values.size() != nodes_.size()) {
    throw StateError("trace does not belong to this graph");
  }
  const std::size_t batch = trace.batch;
  if (upstream.shape() != trace.values[output_].shape()) {
    throw ShapeError("node '" + nodes_[output_].name + "': upstream shape " +
                     shape_string(upstream.shape()) + " does not match output " +
                     shape_string(trace.values[output_].shape()));
  }

  Gradients<T> result{params_.zeros_like(), BasicTensor<T>(trace.values[0].shape())};
  std::vector<std::optional<BasicTensor<T>>> grads(nodes_.size());
  grads[output_] = upstream;

  auto grad_of = [&](NodeId id) -> BasicTensor<T>& {
    if (!grads[id]) grads[id].emplace(trace.values[id].shape());
    return *grads[id];
  };

  for (std::size_t id = nodes_.size(); id-- > 1;) {
    if (!grads[id]) continue;
    const Node& n = nodes_[id];
    const BasicTensor<T>& g = *grads[id];
    const BasicTensor<T>& x = trace.values[n.inputs[0]];
    const std::size_t in_len = x.size() / batch;
    const std::size_t out_len = g.size() / batch;

    switch (n.kind) {
      case OpKind::conv2d: {
        const Shape& is = nodes_[n.inputs[0]].shape;
        const auto& w = params_.at(n.weight);
        auto& gw = result.parameters.at(n.weight);
        auto& gb = result.parameters.at(n.bias);
        auto& gx = grad_of(n.inputs[0]);
        for (std::size_t s = 0; s < batch; ++s) {
          detail::conv2d_backward(x.data().data() + s * in_len, is[0], is[1], is[2],
                                  w.data().data(), n.shape[0], n.kernel, n.padding,
                                  n.shape[1], n.shape[2], g.data().data() + s * out_len,
                                  gx.data().data() + s * in_len, gw.data().data(),
                                  gb.data().data());
        }
        break;
      }
      case OpKind::dense: {
        const auto& w = params_.at(n.weight);
        auto& gw = result.parameters.at(n.weight);
        auto& gb = result.parameters.at(n.bias);
        auto& gx = grad_of(n.inputs[0]);
        for (std::size_t s = 0; s < batch; ++s) {
          const T* xs = x.data().data() + s * in_len;
          T* gxs = gx.data().data() + s * in_len;
          for (std::size_t o = 0; o < out_len; ++o) {
            const T go = g[s * out_len + o];
            gb[o] += go;
            T* gwr = gw.data().data() + o * in_len;
            const T* wr = w.data().data() + o * in_len;
            for (std::size_t f = 0; f < in_len; ++f) {
              gwr[f] += go * xs[f];
              gxs[f] += go * wr[f];
            }
          }
        }
        break;
      }
      case OpKind::relu: {
        auto& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > T{0}) gx[i] += g[i];
        break;
      }
      case OpKind::global_avg_pool: {
        const Shape& is = nodes_[n.inputs[0]].shape;
        const std::size_t plane = is[1] * is[2];
        auto& gx = grad_of(n.inputs[0]);
        for (std::size_t s = 0; s < batch; ++s)
          for (std::size_t c = 0; c < is[0]; ++c) {
            const T share = g[s * out_len + c] / T(plane);
            T* p = gx.data().data() + s * in_len + c * plane;
            for (std::size_t i = 0; i < plane; ++i) p[i] += share;
          }
        break;
      }
      case OpKind::add: {
        // Fan-in accumulates left operand first.
        auto& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        break;
      }
      case OpKind::scale: {
        auto& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += T(n.factor) * g[i];
        break;
      }
      case OpKind::softmax: {
        const BasicTensor<T>& y = trace.values[id];
        auto& gx = grad_of(n.inputs[0]);
        for (std::size_t s = 0; s < batch; ++s) {
          const T* ys = y.data().data() + s * out_len;
          const T* gs = g.data().data() + s * out_len;
          double dot = 0.0;
          for (std::size_t k = 0; k < out_len; ++k) dot += double(ys[k]) * double(gs[k]);
          for (std::size_t k = 0; k < out_len; ++k)
            gx[s * in_len + k] += ys[k] * (gs[k] - T(dot));
        }
        break;
      }
      case OpKind::input:
        break;
    }
  }
  if (grads[0]) result.input = std::move(*grads[0]);
  return result;
}

}  // namespace p2be::numgraph
