/*
 * Copyright 2026 The causalrx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Minimal reverse-mode differentiation over dense vectors.
//
// A Tape records every intermediate vector together with a closure that pushes its
// gradient to its inputs. Trainable tensors live outside the tape as Param objects;
// ops that read a Param accumulate directly into Param::grad during backward().

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "causalrx/core/error.hpp"

namespace causalrx::model {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() { nodes_.reserve(512); }

  const Vec& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  double scalar(Var v) const { return value(v)(0); }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Vec v) { return push(std::move(v), {}); }

  /// Whole parameter viewed as a column vector.
  Var param(Param& p) {
    Vec v = Eigen::Map<const Vec>(p.value.data(), p.value.size());
    return push(std::move(v), [&p](Tape&, const Vec& g) { Eigen::Map<Vec>(p.grad.data(), p.grad.size()) += g; });
  }

  /// Row `r` of an embedding table.
  Var row(Param& table, Eigen::Index r) {
    if (r < 0 || r >= table.value.rows()) throw UsageError("embedding lookup out of range in '" + table.name + "'");
    Vec v = table.value.row(r).transpose();
    return push(std::move(v), [&table, r](Tape&, const Vec& g) { table.grad.row(r) += g.transpose(); });
  }

  /// W x
  Var matvec(Param& w, Var x) {
    Vec v = w.value * value(x);
    return push(std::move(v), [&w, x](Tape& t, const Vec& g) {
      w.grad.noalias() += g * t.value(x).transpose();
      t.grad(x).noalias() += w.value.transpose() * g;
    });
  }

  /// (I + Theta) x
  Var residual_matvec(Param& theta, Var x) {
    Vec v = value(x) + theta.value * value(x);
    return push(std::move(v), [&theta, x](Tape& t, const Vec& g) {
      theta.grad.noalias() += g * t.value(x).transpose();
      t.grad(x) += g;
      t.grad(x).noalias() += theta.value.transpose() * g;
    });
  }

  /// x + b for a bias Param of matching length.
  Var add_bias(Var x, Param& b) {
    Vec v = value(x) + Eigen::Map<const Vec>(b.value.data(), b.value.size());
    return push(std::move(v), [&b, x](Tape& t, const Vec& g) {
      t.grad(x) += g;
      Eigen::Map<Vec>(b.grad.data(), b.grad.size()) += g;
    });
  }

  Var add(Var a, Var b) {
    Vec v = value(a) + value(b);
    return push(std::move(v), [a, b](Tape& t, const Vec& g) {
      t.grad(a) += g;
      t.grad(b) += g;
    });
  }

  Var sum(std::span<const Var> xs) {
    if (xs.empty()) throw UsageError("sum of no terms");
    Vec v = value(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) v += value(xs[i]);
    std::vector<Var> ids(xs.begin(), xs.end());
    return push(std::move(v), [ids = std::move(ids)](Tape& t, const Vec& g) {
      for (Var x : ids) t.grad(x) += g;
    });
  }

  /// Mean of equally sized vectors.
  Var mean(std::span<const Var> xs) {
    if (xs.empty()) throw UsageError("mean of no terms");
    Vec v = value(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) v += value(xs[i]);
    const double inv = 1.0 / static_cast<double>(xs.size());
    v *= inv;
    std::vector<Var> ids(xs.begin(), xs.end());
    return push(std::move(v), [ids = std::move(ids), inv](Tape& t, const Vec& g) {
      for (Var x : ids) t.grad(x) += inv * g;
    });
  }

  Var scale(Var a, double s) {
    Vec v = s * value(a);
    return push(std::move(v), [a, s](Tape& t, const Vec& g) { t.grad(a) += s * g; });
  }

  /// Vector `a` scaled by the single entry of `s`.
  Var scale(Var a, Var s) {
    Vec v = scalar(s) * value(a);
    return push(std::move(v), [a, s](Tape& t, const Vec& g) {
      t.grad(a) += t.scalar(s) * g;
      t.grad(s)(0) += g.dot(t.value(a));
    });
  }

  /// Element-wise product.
  Var mul(Var a, Var b) {
    Vec v = value(a).cwiseProduct(value(b));
    return push(std::move(v), [a, b](Tape& t, const Vec& g) {
      t.grad(a) += g.cwiseProduct(t.value(b));
      t.grad(b) += g.cwiseProduct(t.value(a));
    });
  }

  /// 1 - x
  Var one_minus(Var a) {
    Vec v = Vec::Ones(value(a).size()) - value(a);
    return push(std::move(v), [a](Tape& t, const Vec& g) { t.grad(a) -= g; });
  }

  Var relu(Var a) {
    Vec v = value(a).cwiseMax(0.0);
    return push(std::move(v), [a](Tape& t, const Vec& g) {
      const Vec& x = t.value(a);
      Vec& ga = t.grad(a);
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i) > 0.0) ga(i) += g(i);
    });
  }

  Var sigmoid(Var a) {
    Vec v = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(v), [a, id](Tape& t, const Vec& g) {
      const Vec& y = t.nodes_[static_cast<std::size_t>(id)].value;
      t.grad(a).array() += g.array() * y.array() * (1.0 - y.array());
    });
  }

  Var tanh(Var a) {
    Vec v = value(a).array().tanh().matrix();
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(v), [a, id](Tape& t, const Vec& g) {
      const Vec& y = t.nodes_[static_cast<std::size_t>(id)].value;
      t.grad(a).array() += g.array() * (1.0 - y.array().square());
    });
  }

  Var concat(std::span<const Var> xs) {
    Eigen::Index n = 0;
    for (Var x : xs) n += value(x).size();
    Vec v(n);
    Eigen::Index off = 0;
    for (Var x : xs) {
      v.segment(off, value(x).size()) = value(x);
      off += value(x).size();
    }
    std::vector<Var> ids(xs.begin(), xs.end());
    return push(std::move(v), [ids = std::move(ids)](Tape& t, const Vec& g) {
      Eigen::Index o = 0;
      for (Var x : ids) {
        const Eigen::Index len = t.value(x).size();
        t.grad(x) += g.segment(o, len);
        o += len;
      }
    });
  }

  /// Scalar w . x + b (w is a column Param, b a 1x1 Param).
  Var affine_scalar(Param& w, Param& b, Var x) {
    Vec v(1);
    v(0) = Eigen::Map<const Vec>(w.value.data(), w.value.size()).dot(value(x)) + b.value(0, 0);
    return push(std::move(v), [&w, &b, x](Tape& t, const Vec& g) {
      Eigen::Map<Vec>(w.grad.data(), w.grad.size()) += g(0) * t.value(x);
      t.grad(x) += g(0) * Eigen::Map<const Vec>(w.value.data(), w.value.size());
      b.grad(0, 0) += g(0);
    });
  }

  /// Softmax over scalar vars; returns one scalar var per input.
  std::vector<Var> softmax(std::span<const Var> logits) {
    if (logits.empty()) throw UsageError("softmax over no logits");
    Vec z(static_cast<Eigen::Index>(logits.size()));
    for (std::size_t i = 0; i < logits.size(); ++i) z(static_cast<Eigen::Index>(i)) = scalar(logits[i]);
    Vec p = (z.array() - z.maxCoeff()).exp().matrix();
    p /= p.sum();
    std::vector<Var> ids(logits.begin(), logits.end());
    const int id = static_cast<int>(nodes_.size());
    // dL/dz_i = p_i (g_i - sum_j g_j p_j)
    Var joint = push(std::move(p), [ids = std::move(ids), id](Tape& t, const Vec& g) {
      const Vec& pv = t.nodes_[static_cast<std::size_t>(id)].value;
      const double gp = g.dot(pv);
      for (std::size_t i = 0; i < ids.size(); ++i)
        t.grad(ids[i])(0) += pv(static_cast<Eigen::Index>(i)) * (g(static_cast<Eigen::Index>(i)) - gp);
    });
    std::vector<Var> out;
    for (std::size_t i = 0; i < logits.size(); ++i) out.push_back(element(joint, static_cast<Eigen::Index>(i)));
    return out;
  }

  Var element(Var a, Eigen::Index i) {
    Vec v(1);
    v(0) = value(a)(i);
    return push(std::move(v), [a, i](Tape& t, const Vec& g) { t.grad(a)(i) += g(0); });
  }

  /// Element-wise product with a fixed mask (dropout).
  Var mask(Var a, const Vec& m) {
    Vec v = value(a).cwiseProduct(m);
    return push(std::move(v), [a, m](Tape& t, const Vec& g) { t.grad(a) += g.cwiseProduct(m); });
  }

  /// Scalar a*x + b*y.
  Var linear_combination(Var x, double a, Var y, double b) {
    Vec v = a * value(x) + b * value(y);
    return push(std::move(v), [x, y, a, b](Tape& t, const Vec& g) {
      t.grad(x) += a * g;
      t.grad(y) += b * g;
    });
  }

  /// Custom node with caller-supplied backward.
  Var custom(Vec v, std::function<void(Tape&, const Vec&)> backward) { return push(std::move(v), std::move(backward)); }

  /// Gradient buffer of a node (valid only during backward()).
  Vec& grad(Var v) { return grads_[static_cast<std::size_t>(v.id)]; }

  /// Seeds d(root)/d(root) = 1 for a scalar root and runs every recorded closure in reverse.
  void backward(Var root) {
    if (value(root).size() != 1) throw UsageError("backward() needs a scalar root");
    grads_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) grads_[i] = Vec::Zero(nodes_[i].value.size());
    grads_[static_cast<std::size_t>(root.id)](0) = 1.0;
    for (int i = root.id; i >= 0; --i) {
      auto& node = nodes_[static_cast<std::size_t>(i)];
      if (!node.backward) continue;
      const Vec& g = grads_[static_cast<std::size_t>(i)];
      if (g.isZero(0.0)) continue;
      node.backward(*this, g);
    }
  }

 private:
  struct Node {
    Vec value;
    std::function<void(Tape&, const Vec&)> backward;
  };

  Var push(Vec v, std::function<void(Tape&, const Vec&)> backward) {
    nodes_.push_back({std::move(v), std::move(backward)});
    return {static_cast<int>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::vector<Vec> grads_;
};

}  // namespace causalrx::model
