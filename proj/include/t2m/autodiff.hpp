#pragma once

// Reverse-mode automatic differentiation over dense double vectors.
//
// A Tape records every operation of one forward pass. Parameters live in a
// ParamStore and receive gradients directly; intermediate gradients live on
// the tape and are allocated only for nodes reached during backward().

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace t2m {

struct Param {
  std::string name;
  std::string group;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
};

/// Named parameter tensors with stable addresses, grouped by sub-network.
class ParamStore {
 public:
  Param& add(const std::string& name, const std::string& group, std::size_t rows, std::size_t cols);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::deque<Param>& all() { return params_; }
  const std::deque<Param>& all() const { return params_; }
  std::size_t total_size() const;
  std::size_t group_size(const std::string& group) const;

  void zero_grad();

 private:
  std::deque<Param> params_;
  std::map<std::string, std::size_t> index_;
};

/// Affine layer y = W x + b; `b` may be null.
struct Linear {
  Param* w = nullptr;
  Param* b = nullptr;
  std::size_t in() const { return w->cols; }
  std::size_t out() const { return w->rows; }
};

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  /// With record == false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}

  Var constant(std::vector<double> value);
  Var push(std::vector<double> value, Backward backward);

  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value.at(0); }
  std::size_t width(Var v) const { return nodes_[v.id].value.size(); }

  /// Gradient buffer of a node, zero-allocated on first access.
  std::vector<double>& grad(std::size_t id);
  std::vector<double>& grad(Var v) { return grad(v.id); }
  bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

  /// Seeds d(root)/d(root) = 1 and propagates to every parameter.
  void backward(Var root);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool record_;
};

namespace ad {

Var linear(Tape& t, const Linear& layer, Var x);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var one_minus(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var concat(Tape& t, std::span<const Var> parts);
Var slice(Tape& t, Var a, std::size_t offset, std::size_t length);
Var gather(Tape& t, Var a, const std::vector<std::size_t>& indices);
/// Builds a width-`width` vector with part k written at indices[k]; untouched entries are 0.
Var scatter(Tape& t, std::size_t width, std::span<const Var> parts,
            std::span<const std::vector<std::size_t>> indices);
/// Elementwise mean of equally sized vectors.
Var mean(Tape& t, std::span<const Var> parts);

/// Smooth-L1 (transition at 1) averaged over every element of every pair.
Var smooth_l1(Tape& t, std::span<const Var> a, std::span<const Var> b);
/// Binary cross-entropy of sigmoid(logit) against `target`, from the logit.
Var bce_with_logits(Tape& t, Var logit, double target);
/// sum_k coef_k * scalar_k
Var weighted_sum(Tape& t, std::span<const std::pair<double, Var>> terms);

}  // namespace ad

double sigmoid(double x);
double smooth_l1_element(double d);

}  // namespace t2m
