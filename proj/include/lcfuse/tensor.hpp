#pragma once

// Dense BEV feature grids plus a minimal define-by-run reverse-mode engine:
// channel-wise affine maps (kernel-1 conv), elementwise ops, channel
// concat/slice, reductions and the losses used in training. Grids are
// (h*w) x c Eigen matrices templated on scalar; training runs in float,
// gradient checks in double.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcfuse/error.hpp"

namespace lcfuse {

struct ShapeMismatch : DataError {
  using DataError::DataError;
};
struct GraphCycle : Error {
  using Error::Error;
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct GridShape {
  int h = 0, w = 0, c = 0;

  bool operator==(const GridShape&) const = default;
  int cells() const { return h * w; }
  long size() const { return static_cast<long>(h) * w * c; }
  std::string str() const {
    return "(" + std::to_string(h) + "," + std::to_string(w) + "," + std::to_string(c) + ")";
  }
};

template <typename S>
struct Grid {
  GridShape shape{};
  Mat<S> data;  // row = cell (i*w + j), col = channel

  Grid() = default;
  Grid(GridShape s, Mat<S> d) : shape(s), data(std::move(d)) {}

  static Grid zeros(int h, int w, int c) { return {{h, w, c}, Mat<S>::Zero(h * w, c)}; }
  static Grid constant(int h, int w, int c, S v) { return {{h, w, c}, Mat<S>::Constant(h * w, c, v)}; }
  static Grid scalar(S v) { return constant(1, 1, 1, v); }

  S& at(int i, int j, int ch) { return data(i * shape.w + j, ch); }
  S at(int i, int j, int ch) const { return data(i * shape.w + j, ch); }
  S scalar_value() const { return data(0, 0); }
  bool all_finite() const { return data.allFinite(); }

  template <typename T>
  Grid<T> cast() const {
    return Grid<T>{shape, data.template cast<T>()};
  }
};

template <typename S>
Grid<S> random_grid(int h, int w, int c, std::mt19937_64& rng, S lo = S(-1), S hi = S(1)) {
  std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
  Grid<S> g = Grid<S>::zeros(h, w, c);
  for (long k = 0; k < g.data.size(); ++k) g.data.data()[k] = static_cast<S>(dist(rng));
  return g;
}

// Named leaf with a gradient accumulator. Weights are rows x cols matrices;
// a grid-valued parameter uses rows = h*w, cols = c.
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  Param(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat<S>::Zero(rows, cols)), grad(Mat<S>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

template <typename S>
void zero_grads(const std::vector<Param<S>*>& params) {
  for (auto* p : params) p->zero_grad();
}

namespace detail {

template <typename S>
struct Node {
  Grid<S> value;
  Grid<S> grad;  // allocated during backward
  std::vector<std::shared_ptr<Node>> parents;
  // Distributes this node's grad into parents and params. Null for leaves.
  std::function<void(Node&)> pull;
  int mark = 0;

  void add_grad(const Mat<S>& g) {
    if (grad.data.size() == 0) grad = Grid<S>{value.shape, g};
    else grad.data += g;
  }
};

}  // namespace detail

// Lightweight handle to a graph node.
template <typename S>
class Value {
 public:
  Value() = default;
  explicit Value(std::shared_ptr<detail::Node<S>> n) : node_(std::move(n)) {}

  const Grid<S>& val() const { return node_->value; }
  const GridShape& shape() const { return node_->value.shape; }
  S scalar_value() const { return node_->value.scalar_value(); }
  std::shared_ptr<detail::Node<S>> node() const { return node_; }

 private:
  std::shared_ptr<detail::Node<S>> node_;
};

namespace detail {

template <typename S>
Value<S> make_node(Grid<S> value, std::vector<std::shared_ptr<Node<S>>> parents,
                   std::function<void(Node<S>&)> pull) {
  auto n = std::make_shared<Node<S>>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->pull = std::move(pull);
  return Value<S>(std::move(n));
}

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw ShapeMismatch(msg);
}

}  // namespace detail

// Constant input; no gradient flows into it.
template <typename S>
Value<S> make_input(Grid<S> g) {
  return detail::make_node<S>(std::move(g), {}, nullptr);
}

// Trainable leaf: the param matrix viewed as an (h,w,c) grid with
// rows == h*w and cols == c.
template <typename S>
Value<S> from_param(Param<S>* p, GridShape shape) {
  detail::check(p->value.rows() == shape.cells() && p->value.cols() == shape.c,
                "from_param: param " + p->name + " does not match " + shape.str());
  auto pull = [p](detail::Node<S>& self) { p->grad += self.grad.data; };
  return detail::make_node<S>(Grid<S>{shape, p->value}, {}, pull);
}

// Per-cell affine map over channels: out = x * W + b with W: cin x cout.
template <typename S>
Value<S> conv1x1(const Value<S>& x, Param<S>* w, Param<S>* b) {
  const GridShape in = x.shape();
  detail::check(w->value.rows() == in.c, "conv1x1 " + w->name + ": weight rows != input channels");
  detail::check(b->value.rows() == 1 && b->value.cols() == w->value.cols(),
                "conv1x1 " + w->name + ": bias shape");
  const int cout = static_cast<int>(w->value.cols());
  Grid<S> out{{in.h, in.w, cout}, (x.val().data * w->value).rowwise() + b->value.row(0)};
  auto xn = x.node();
  auto pull = [w, b](detail::Node<S>& self) {
    const Mat<S>& g = self.grad.data;
    w->grad.noalias() += self.parents[0]->value.data.transpose() * g;
    b->grad.row(0) += g.colwise().sum();
    self.parents[0]->add_grad(g * w->value.transpose());
  };
  return detail::make_node<S>(std::move(out), {xn}, pull);
}

template <typename S>
Value<S> relu(const Value<S>& x) {
  Grid<S> out{x.shape(), x.val().data.cwiseMax(S(0))};
  auto pull = [](detail::Node<S>& self) {
    const Mat<S> m = (self.parents[0]->value.data.array() > S(0)).template cast<S>().matrix();
    self.parents[0]->add_grad(self.grad.data.cwiseProduct(m));
  };
  return detail::make_node<S>(std::move(out), {x.node()}, pull);
}

template <typename S>
Value<S> sigmoid(const Value<S>& x) {
  Mat<S> y = ((-x.val().data.array()).exp() + S(1)).inverse().matrix();
  Grid<S> out{x.shape(), std::move(y)};
  auto pull = [](detail::Node<S>& self) {
    const auto& y = self.value.data.array();
    self.parents[0]->add_grad((self.grad.data.array() * y * (S(1) - y)).matrix());
  };
  return detail::make_node<S>(std::move(out), {x.node()}, pull);
}

template <typename S>
Value<S> add(const Value<S>& a, const Value<S>& b) {
  detail::check(a.shape() == b.shape(), "add: " + a.shape().str() + " vs " + b.shape().str());
  Grid<S> out{a.shape(), a.val().data + b.val().data};
  auto pull = [](detail::Node<S>& self) {
    self.parents[0]->add_grad(self.grad.data);
    self.parents[1]->add_grad(self.grad.data);
  };
  return detail::make_node<S>(std::move(out), {a.node(), b.node()}, pull);
}

template <typename S>
Value<S> mul(const Value<S>& a, const Value<S>& b) {
  detail::check(a.shape() == b.shape(), "mul: " + a.shape().str() + " vs " + b.shape().str());
  Grid<S> out{a.shape(), a.val().data.cwiseProduct(b.val().data)};
  auto pull = [](detail::Node<S>& self) {
    self.parents[0]->add_grad(self.grad.data.cwiseProduct(self.parents[1]->value.data));
    self.parents[1]->add_grad(self.grad.data.cwiseProduct(self.parents[0]->value.data));
  };
  return detail::make_node<S>(std::move(out), {a.node(), b.node()}, pull);
}

template <typename S>
Value<S> scale(const Value<S>& x, S k) {
  Grid<S> out{x.shape(), x.val().data * k};
  auto pull = [k](detail::Node<S>& self) { self.parents[0]->add_grad(self.grad.data * k); };
  return detail::make_node<S>(std::move(out), {x.node()}, pull);
}

template <typename S>
Value<S> concat_channels(const Value<S>& a, const Value<S>& b) {
  detail::check(a.shape().h == b.shape().h && a.shape().w == b.shape().w,
                "concat_channels: grids differ in h/w");
  const int ca = a.shape().c, cb = b.shape().c;
  Mat<S> d(a.shape().cells(), ca + cb);
  d.leftCols(ca) = a.val().data;
  d.rightCols(cb) = b.val().data;
  Grid<S> out{{a.shape().h, a.shape().w, ca + cb}, std::move(d)};
  auto pull = [ca, cb](detail::Node<S>& self) {
    self.parents[0]->add_grad(self.grad.data.leftCols(ca));
    self.parents[1]->add_grad(self.grad.data.rightCols(cb));
  };
  return detail::make_node<S>(std::move(out), {a.node(), b.node()}, pull);
}

template <typename S>
Value<S> slice_channels(const Value<S>& x, int first, int count) {
  detail::check(first >= 0 && count >= 1 && first + count <= x.shape().c, "slice_channels: range");
  Grid<S> out{{x.shape().h, x.shape().w, count}, x.val().data.middleCols(first, count)};
  auto pull = [first, count](detail::Node<S>& self) {
    Mat<S> g = Mat<S>::Zero(self.parents[0]->value.data.rows(), self.parents[0]->value.data.cols());
    g.middleCols(first, count) = self.grad.data;
    self.parents[0]->add_grad(g);
  };
  return detail::make_node<S>(std::move(out), {x.node()}, pull);
}

template <typename S>
Value<S> sum(const Value<S>& x) {
  Grid<S> out = Grid<S>::scalar(x.val().data.sum());
  auto pull = [](detail::Node<S>& self) {
    const S g = self.grad.data(0, 0);
    self.parents[0]->add_grad(
        Mat<S>::Constant(self.parents[0]->value.data.rows(), self.parents[0]->value.data.cols(), g));
  };
  return detail::make_node<S>(std::move(out), {x.node()}, pull);
}

enum class Reduction { Mean, Sum };

// Squared deviation; Mean divides by h*w*c.
template <typename S>
Value<S> mse(const Value<S>& a, const Value<S>& b, Reduction red = Reduction::Mean) {
  detail::check(a.shape() == b.shape(), "mse: " + a.shape().str() + " vs " + b.shape().str());
  const S norm = red == Reduction::Mean ? S(1) / static_cast<S>(a.shape().size()) : S(1);
  const Mat<S> diff = a.val().data - b.val().data;
  Grid<S> out = Grid<S>::scalar(diff.squaredNorm() * norm);
  auto pull = [norm](detail::Node<S>& self) {
    const S g = self.grad.data(0, 0);
    const Mat<S> d = self.parents[0]->value.data - self.parents[1]->value.data;
    self.parents[0]->add_grad(d * (S(2) * norm * g));
    self.parents[1]->add_grad(d * (S(-2) * norm * g));
  };
  return detail::make_node<S>(std::move(out), {a.node(), b.node()}, pull);
}

// Absolute deviation; subgradient 0 at exact zeros.
template <typename S>
Value<S> l1(const Value<S>& a, const Value<S>& b, Reduction red = Reduction::Mean) {
  detail::check(a.shape() == b.shape(), "l1: " + a.shape().str() + " vs " + b.shape().str());
  const S norm = red == Reduction::Mean ? S(1) / static_cast<S>(a.shape().size()) : S(1);
  const Mat<S> diff = a.val().data - b.val().data;
  Grid<S> out = Grid<S>::scalar(diff.cwiseAbs().sum() * norm);
  auto pull = [norm](detail::Node<S>& self) {
    const S g = self.grad.data(0, 0);
    const Mat<S> d = self.parents[0]->value.data - self.parents[1]->value.data;
    const Mat<S> sgn = d.array().sign().matrix();
    self.parents[0]->add_grad(sgn * (norm * g));
    self.parents[1]->add_grad(sgn * (-norm * g));
  };
  return detail::make_node<S>(std::move(out), {a.node(), b.node()}, pull);
}

// Binary cross-entropy on logits against a constant 0/1 target, mean over all
// elements; positives weighted by pos_weight. Stable softplus form.
template <typename S>
Value<S> bce_logits(const Value<S>& x, const Grid<S>& target, S pos_weight = S(1)) {
  detail::check(x.shape() == target.shape, "bce_logits: " + x.shape().str() + " vs " + target.shape.str());
  const auto softplus = [](S v) { return std::log1p(std::exp(-std::abs(v))) + std::max(v, S(0)); };
  const auto& xs = x.val().data;
  const auto& ts = target.data;
  const S norm = S(1) / static_cast<S>(target.shape.size());
  S total = S(0);
  for (long k = 0; k < xs.size(); ++k) {
    const S xv = xs.data()[k], tv = ts.data()[k];
    total += pos_weight * tv * softplus(-xv) + (S(1) - tv) * softplus(xv);
  }
  Grid<S> out = Grid<S>::scalar(total * norm);
  Mat<S> tcopy = ts;
  auto pull = [tcopy, pos_weight, norm](detail::Node<S>& self) {
    const S g = self.grad.data(0, 0);
    const auto xv = self.parents[0]->value.data.array();
    const Mat<S> sig = ((S(1) + (-xv).exp()).inverse()).matrix();
    // d/dx = (1-t)*sigma(x) - pos_weight*t*sigma(-x)
    Mat<S> dx = ((S(1) - tcopy.array()) * sig.array() -
                 pos_weight * tcopy.array() * (S(1) - sig.array()))
                    .matrix();
    self.parents[0]->add_grad(dx * (g * norm));
  };
  return detail::make_node<S>(std::move(out), {x.node()}, pull);
}

// Sum of |pred - target| over the cells where mask (h,w,1) is nonzero,
// divided by max(1, #masked cells). Applies the cell mask to every channel.
template <typename S>
Value<S> masked_l1(const Value<S>& pred, const Grid<S>& target, const Grid<S>& mask) {
  detail::check(pred.shape() == target.shape, "masked_l1: pred vs target shape");
  detail::check(mask.shape.h == pred.shape().h && mask.shape.w == pred.shape().w && mask.shape.c == 1,
                "masked_l1: mask must be (h,w,1)");
  const S npos = std::max(S(1), mask.data.sum());
  const S norm = S(1) / npos;
  const Mat<S> diff = pred.val().data - target.data;
  S total = S(0);
  for (int r = 0; r < diff.rows(); ++r) {
    if (mask.data(r, 0) != S(0)) total += diff.row(r).cwiseAbs().sum();
  }
  Grid<S> out = Grid<S>::scalar(total * norm);
  Mat<S> tcopy = target.data;
  Mat<S> mcopy = mask.data;
  auto pull = [tcopy, mcopy, norm](detail::Node<S>& self) {
    const S g = self.grad.data(0, 0);
    Mat<S> dx = (self.parents[0]->value.data - tcopy).array().sign().matrix() * (norm * g);
    for (int r = 0; r < dx.rows(); ++r) {
      if (mcopy(r, 0) == S(0)) dx.row(r).setZero();
    }
    self.parents[0]->add_grad(dx);
  };
  return detail::make_node<S>(std::move(out), {pred.node()}, pull);
}

// Reverse sweep from a scalar loss. Gradients accumulate (+=) into params;
// call zero_grads between steps.
template <typename S>
void backward(const Value<S>& loss) {
  detail::check(loss.shape() == GridShape{1, 1, 1}, "backward: loss must be scalar (1,1,1)");
  // Iterative DFS topo order; mark: 0 unseen, 1 on stack, 2 done.
  std::vector<detail::Node<S>*> order;
  std::vector<std::pair<detail::Node<S>*, std::size_t>> stack;
  stack.push_back({loss.node().get(), 0});
  loss.node()->mark = 1;
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node<S>* p = n->parents[next++].get();
      if (p->mark == 1) throw GraphCycle("backward: cycle detected");
      if (p->mark == 0) {
        p->mark = 1;
        stack.push_back({p, 0});
      }
    } else {
      n->mark = 2;
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (auto* n : order) {
    n->grad = Grid<S>::zeros(n->value.shape.h, n->value.shape.w, n->value.shape.c);
    n->mark = 0;
  }
  loss.node()->grad.data(0, 0) = S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->pull) (*it)->pull(**it);
  }
}

// Classical momentum: v = momentum*v + grad; p -= lr*v.
template <typename S>
class SgdOptimizer {
 public:
  SgdOptimizer(S lr, S momentum) : lr_(lr), momentum_(momentum) {}

  void step(const std::vector<Param<S>*>& params) {
    for (auto* p : params) {
      auto [it, fresh] = velocity_.try_emplace(p, Mat<S>::Zero(p->value.rows(), p->value.cols()));
      Mat<S>& v = it->second;
      v = momentum_ * v + p->grad;
      p->value -= lr_ * v;
    }
  }

 private:
  S lr_, momentum_;
  std::unordered_map<const Param<S>*, Mat<S>> velocity_;
};

template <typename S>
void sgd_step(const std::vector<Param<S>*>& params, S lr, S momentum,
              std::unordered_map<const Param<S>*, Mat<S>>& velocity) {
  for (auto* p : params) {
    auto [it, fresh] = velocity.try_emplace(p, Mat<S>::Zero(p->value.rows(), p->value.cols()));
    Mat<S>& v = it->second;
    v = momentum * v + p->grad;
    p->value -= lr * v;
  }
}

}  // namespace lcfuse
