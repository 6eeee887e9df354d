#include "t2m/autodiff.hpp"

#include <cmath>
#include <numeric>

#include "t2m/error.hpp"
#include "t2m/kernels.hpp"

namespace t2m {

Param& ParamStore::add(const std::string& name, const std::string& group, std::size_t rows,
                       std::size_t cols) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  auto& p = params_.emplace_back();
  p.name = name;
  p.group = group;
  p.rows = rows;
  p.cols = cols;
  p.value.assign(rows * cols, 0.0);
  p.grad.assign(rows * cols, 0.0);
  return p;
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return params_[it->second];
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::size_t ParamStore::group_size(const std::string& group) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.group == group) n += p.size();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

Var Tape::constant(std::vector<double> value) {
  nodes_.push_back(Node{std::move(value), {}, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::push(std::vector<double> value, Backward backward) {
  nodes_.push_back(Node{std::move(value), {}, record_ ? std::move(backward) : Backward{}});
  return Var{nodes_.size() - 1};
}

std::vector<double>& Tape::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var root) {
  if (!record_) throw Error("backward() on a tape created without recording");
  if (nodes_[root.id].value.size() != 1) throw ShapeError("backward() root must be a scalar");
  grad(root.id)[0] += 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double smooth_l1_element(double d) {
  const double a = std::abs(d);
  return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

namespace ad {

namespace {

void require_same_width(const Tape& t, Var a, Var b, const char* op) {
  if (t.width(a) != t.width(b)) {
    throw ShapeError(std::string(op) + ": width " + std::to_string(t.width(a)) + " vs " +
                     std::to_string(t.width(b)));
  }
}

}  // namespace

Var linear(Tape& t, const Linear& layer, Var x) {
  const Param& w = *layer.w;
  if (t.width(x) != w.cols) {
    throw ShapeError("linear '" + w.name + "': input width " + std::to_string(t.width(x)) +
                     ", expected " + std::to_string(w.cols));
  }
  std::vector<double> y(w.rows);
  std::span<const double> bias;
  if (layer.b != nullptr) bias = layer.b->value;
  kernels::matvec<double, double>(w.value, w.rows, w.cols, t.value(x), bias, y);
  Param* wp = layer.w;
  Param* bp = layer.b;
  return t.push(std::move(y), [wp, bp, x](Tape& tape, std::size_t self) {
    const auto& dy = tape.grad(self);
    kernels::outer_acc<double>(dy, tape.value(x), wp->grad);
    if (bp != nullptr) {
      for (std::size_t i = 0; i < dy.size(); ++i) bp->grad[i] += dy[i];
    }
    kernels::matvec_t_acc<double>(wp->value, wp->rows, wp->cols, dy, tape.grad(x));
  });
}

Var add(Tape& t, Var a, Var b) {
  require_same_width(t, a, b, "add");
  const auto& va = t.value(a);
  const auto& vb = t.value(b);
  std::vector<double> y(va.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = va[i] + vb[i];
  return t.push(std::move(y), [a, b](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy[i];
    auto& gb = tape.grad(b);
    for (std::size_t i = 0; i < dy.size(); ++i) gb[i] += dy[i];
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_width(t, a, b, "sub");
  const auto& va = t.value(a);
  const auto& vb = t.value(b);
  std::vector<double> y(va.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = va[i] - vb[i];
  return t.push(std::move(y), [a, b](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy[i];
    auto& gb = tape.grad(b);
    for (std::size_t i = 0; i < dy.size(); ++i) gb[i] -= dy[i];
  });
}

Var mul(Tape& t, Var a, Var b) {
  require_same_width(t, a, b, "mul");
  const auto& va = t.value(a);
  const auto& vb = t.value(b);
  std::vector<double> y(va.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = va[i] * vb[i];
  return t.push(std::move(y), [a, b](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    const auto va = tape.value(a);
    const auto vb = tape.value(b);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy[i] * vb[i];
    auto& gb = tape.grad(b);
    for (std::size_t i = 0; i < dy.size(); ++i) gb[i] += dy[i] * va[i];
  });
}

Var scale(Tape& t, Var a, double c) {
  std::vector<double> y = t.value(a);
  for (auto& v : y) v *= c;
  return t.push(std::move(y), [a, c](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += c * dy[i];
  });
}

Var one_minus(Tape& t, Var a) {
  std::vector<double> y = t.value(a);
  for (auto& v : y) v = 1.0 - v;
  return t.push(std::move(y), [a](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] -= dy[i];
  });
}

Var tanh(Tape& t, Var a) {
  std::vector<double> y = t.value(a);
  for (auto& v : y) v = std::tanh(v);
  return t.push(std::move(y), [a](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    const auto& y = tape.value(Var{self});
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Tape& t, Var a) {
  std::vector<double> y = t.value(a);
  for (auto& v : y) v = t2m::sigmoid(v);
  return t.push(std::move(y), [a](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    const auto& y = tape.value(Var{self});
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Var concat(Tape& t, std::span<const Var> parts) {
  std::vector<double> y;
  for (Var p : parts) {
    const auto& v = t.value(p);
    y.insert(y.end(), v.begin(), v.end());
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return t.push(std::move(y), [ids](Tape& tape, std::size_t self) {
    std::size_t off = 0;
    for (Var p : ids) {
      const std::size_t n = tape.width(p);
      auto& gp = tape.grad(p);
      const auto& dy = tape.grad(self);
      for (std::size_t i = 0; i < n; ++i) gp[i] += dy[off + i];
      off += n;
    }
  });
}

Var slice(Tape& t, Var a, std::size_t offset, std::size_t length) {
  const auto& va = t.value(a);
  if (offset + length > va.size()) throw ShapeError("slice out of range");
  std::vector<double> y(va.begin() + static_cast<std::ptrdiff_t>(offset),
                        va.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return t.push(std::move(y), [a, offset](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[offset + i] += dy[i];
  });
}

Var gather(Tape& t, Var a, const std::vector<std::size_t>& indices) {
  const auto& va = t.value(a);
  std::vector<double> y(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) y[i] = va.at(indices[i]);
  return t.push(std::move(y), [a, indices](Tape& tape, std::size_t self) {
    const auto dy = tape.grad(self);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[indices[i]] += dy[i];
  });
}

Var scatter(Tape& t, std::size_t width, std::span<const Var> parts,
            std::span<const std::vector<std::size_t>> indices) {
  if (parts.size() != indices.size()) throw ShapeError("scatter: parts/indices count mismatch");
  std::vector<double> y(width, 0.0);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = t.value(parts[k]);
    if (v.size() != indices[k].size()) throw ShapeError("scatter: part width mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) y.at(indices[k][i]) = v[i];
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  std::vector<std::vector<std::size_t>> idx(indices.begin(), indices.end());
  return t.push(std::move(y), [ids, idx](Tape& tape, std::size_t self) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto& gp = tape.grad(ids[k]);
      const auto& dy = tape.grad(self);
      for (std::size_t i = 0; i < idx[k].size(); ++i) gp[i] += dy[idx[k][i]];
    }
  });
}

Var mean(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("mean of zero vectors");
  const std::size_t n = t.width(parts[0]);
  std::vector<double> y(n, 0.0);
  for (Var p : parts) {
    const auto& v = t.value(p);
    if (v.size() != n) throw ShapeError("mean: width mismatch");
    for (std::size_t i = 0; i < n; ++i) y[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (auto& v : y) v *= inv;
  std::vector<Var> ids(parts.begin(), parts.end());
  return t.push(std::move(y), [ids, inv](Tape& tape, std::size_t self) {
    for (Var p : ids) {
      auto& gp = tape.grad(p);
      const auto& dy = tape.grad(self);
      for (std::size_t i = 0; i < dy.size(); ++i) gp[i] += inv * dy[i];
    }
  });
}

Var smooth_l1(Tape& t, std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw ShapeError("smooth_l1: sequence length mismatch");
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    require_same_width(t, a[k], b[k], "smooth_l1");
    const auto& va = t.value(a[k]);
    const auto& vb = t.value(b[k]);
    for (std::size_t i = 0; i < va.size(); ++i) total += smooth_l1_element(va[i] - vb[i]);
    count += va.size();
  }
  if (count == 0) return t.constant({0.0});
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<Var> av(a.begin(), a.end());
  std::vector<Var> bv(b.begin(), b.end());
  return t.push({total * inv}, [av, bv, inv](Tape& tape, std::size_t self) {
    const double g = tape.grad(self)[0] * inv;
    for (std::size_t k = 0; k < av.size(); ++k) {
      const auto va = tape.value(av[k]);
      const auto vb = tape.value(bv[k]);
      std::vector<double> d(va.size());
      for (std::size_t i = 0; i < va.size(); ++i) {
        const double diff = va[i] - vb[i];
        d[i] = g * (std::abs(diff) < 1.0 ? diff : (diff > 0 ? 1.0 : -1.0));
      }
      auto& ga = tape.grad(av[k]);
      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
      auto& gb = tape.grad(bv[k]);
      for (std::size_t i = 0; i < d.size(); ++i) gb[i] -= d[i];
    }
  });
}

Var bce_with_logits(Tape& t, Var logit, double target) {
  if (t.width(logit) != 1) throw ShapeError("bce_with_logits expects a scalar logit");
  const double x = t.scalar(logit);
  const double loss = std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
  return t.push({loss}, [logit, target](Tape& tape, std::size_t self) {
    const double g = tape.grad(self)[0];
    tape.grad(logit)[0] += g * (t2m::sigmoid(tape.scalar(logit)) - target);
  });
}

Var weighted_sum(Tape& t, std::span<const std::pair<double, Var>> terms) {
  double total = 0.0;
  for (const auto& [c, v] : terms) total += c * t.scalar(v);
  std::vector<std::pair<double, Var>> copy(terms.begin(), terms.end());
  return t.push({total}, [copy](Tape& tape, std::size_t self) {
    const double g = tape.grad(self)[0];
    for (const auto& [c, v] : copy) tape.grad(v)[0] += c * g;
  });
}

}  // namespace ad
}  // namespace t2m
