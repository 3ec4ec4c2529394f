#include "stdsh/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stdsh {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()));
}

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, const std::string& why) {
  throw std::invalid_argument(std::string(op) + ": shape " + shape_to_string(a.shape()) + " " + why);
}

void require_matrix(std::string_view op, const Tensor& a) {
  if (!a.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
  if (a.rank() > 2) shape_error(op, a, "is not rank 1 or 2");
}

void require_same(std::string_view op, const Tensor& a, const Tensor& b) {
  require_matrix(op, a);
  require_matrix(op, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

void require_mask(std::string_view op, const Tensor& a, const Mask& m) {
  require_matrix(op, a);
  if (m.rows() != a.rows() || m.cols() != a.cols()) {
    throw std::invalid_argument(std::string(op) + ": mask " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + " does not match scores " +
                                shape_to_string(a.shape()));
  }
}

}  // namespace

std::vector<std::string_view> Tape::op_names() const {
  std::vector<std::string_view> names;
  names.reserve(records_.size());
  for (const auto& r : records_) names.push_back(r.op);
  return names;
}

bool Tape::needs_grad(std::initializer_list<const Tensor*> inputs) const {
  if (!recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

Tensor Tape::result(Shape shape, std::vector<double> data, bool grad) {
  return Tensor(std::move(shape), std::move(data), grad);
}

void Tape::push(std::string_view op, const Tensor& out, std::function<void()> fn) {
  records_.push_back(Record{op, out, std::move(fn)});
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  // Row at a time so a row's result is bitwise independent of the batch it sits in.
  const ConstMap bm(b.data().data(), k, n);
  for (std::size_t i = 0; i < m; ++i) {
    MutMap(out.data() + i * n, 1, n).noalias() = ConstMap(a.data().data() + i * k, 1, k) * bm;
  }
  const bool g = needs_grad({&a, &b});
  Tensor y = result({m, n}, std::move(out), g);
  if (g) {
    push("matmul", y, [a, b, y, m, k, n]() mutable {
      ConstMap gy(y.grad().data(), m, n);
      if (a.requires_grad()) {
        MutMap(a.mutable_grad().data(), m, k).noalias() +=
            gy * ConstMap(b.data().data(), k, n).transpose();
      }
      if (b.requires_grad()) {
        MutMap(b.mutable_grad().data(), k, n).noalias() +=
            ConstMap(a.data().data(), m, k).transpose() * gy;
      }
    });
  }
  return y;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_matrix("add", a);
  require_matrix("add", b);
  const std::size_t r = a.rows(), c = a.cols();
  enum { kSame, kRow, kScalar } kind;
  if (b.rows() == r && b.cols() == c) {
    kind = kSame;
  } else if (b.rows() == 1 && b.cols() == c) {
    kind = kRow;
  } else if (b.numel() == 1) {
    kind = kScalar;
  } else {
    shape_error("add", a, b);
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] += kind == kSame ? bd[i * c + j] : kind == kRow ? bd[j] : bd[0];
  const bool g = needs_grad({&a, &b});
  Tensor y = result({r, c}, std::move(out), g);
  if (g) {
    push("add", y, [a, b, y, r, c, kind]() mutable {
      auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < r * c; ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            gb[kind == kSame ? i * c + j : kind == kRow ? j : 0] += gy[i * c + j];
      }
    });
  }
  return y;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] - b.data()[i];
  const bool g = needs_grad({&a, &b});
  Tensor y = result({a.rows(), a.cols()}, std::move(out), g);
  if (g) {
    push("sub", y, [a, b, y, n]() mutable {
      auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < n; ++i) gb[i] -= gy[i];
      }
    });
  }
  return y;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] * b.data()[i];
  const bool g = needs_grad({&a, &b});
  Tensor y = result({a.rows(), a.cols()}, std::move(out), g);
  if (g) {
    push("mul", y, [a, b, y, n]() mutable {
      auto gy = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < n; ++i) gb[i] += gy[i] * a.data()[i];
      }
    });
  }
  return y;
}

Tensor Tape::scale(const Tensor& a, double factor) {
  require_matrix("scale", a);
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] * factor;
  const bool g = needs_grad({&a});
  Tensor y = result({a.rows(), a.cols()}, std::move(out), g);
  if (g) {
    push("scale", y, [a, y, n, factor]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * factor;
    });
  }
  return y;
}

Tensor Tape::add_scalar(const Tensor& a, double value) {
  require_matrix("add_scalar", a);
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] + value;
  const bool g = needs_grad({&a});
  Tensor y = result({a.rows(), a.cols()}, std::move(out), g);
  if (g) {
    push("add_scalar", y, [a, y, n]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
    });
  }
  return y;
}

Tensor Tape::transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
  const bool g = needs_grad({&a});
  Tensor y = result({c, r}, std::move(out), g);
  if (g) {
    push("transpose", y, [a, y, r, c]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gy[j * r + i];
    });
  }
  return y;
}

template <typename F, typename D>
Tensor Tape::pointwise(std::string_view op, const Tensor& a, F f, D df) {
  require_matrix(op, a);
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(a.data()[i]);
  const bool g = needs_grad({&a});
  Tensor y = result({a.rows(), a.cols()}, std::move(out), g);
  if (g) {
    push(op, y, [a, y, n, df]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * df(a.data()[i], y.data()[i]);
    });
  }
  return y;
}

Tensor Tape::exp(const Tensor& a) {
  return pointwise("exp", a, [](double x) { return std::exp(x); },
                   [](double, double y) { return y; });
}

Tensor Tape::log(const Tensor& a) {
  return pointwise("log", a, [](double x) { return std::log(x); },
                   [](double x, double) { return 1.0 / x; });
}

Tensor Tape::tanh(const Tensor& a) {
  return pointwise("tanh", a, [](double x) { return std::tanh(x); },
                   [](double, double y) { return 1.0 - y * y; });
}

Tensor Tape::relu(const Tensor& a) {
  return pointwise("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                   [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor Tape::square(const Tensor& a) {
  return pointwise("square", a, [](double x) { return x * x; },
                   [](double x, double) { return 2.0 * x; });
}

Tensor Tape::clip(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clip: lo > hi");
  return pointwise(
      "clip", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor Tape::minimum(const Tensor& a, const Tensor& b) {
  require_same("minimum", a, b);
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::min(a.data()[i], b.data()[i]);
  const bool g = needs_grad({&a, &b});
  Tensor y = result({a.rows(), a.cols()}, std::move(out), g);
  if (g) {
    push("minimum", y, [a, b, y, n]() mutable {
      auto gy = y.grad();
      for (std::size_t i = 0; i < n; ++i) {
        const bool pick_a = a.data()[i] <= b.data()[i];
        if (pick_a && a.requires_grad()) a.mutable_grad()[i] += gy[i];
        if (!pick_a && b.requires_grad()) b.mutable_grad()[i] += gy[i];
      }
    });
  }
  return y;
}

Tensor Tape::max_subtract(const Tensor& scores, const Mask& mask) {
  require_mask("max_subtract", scores, mask);
  const std::size_t r = scores.rows(), c = scores.cols();
  std::vector<double> out(r * c, 0.0);
  std::vector<std::size_t> argmax(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (mask(i, j) && scores.data()[i * c + j] > m) {
        m = scores.data()[i * c + j];
        argmax[i] = j;
      }
    }
    if (argmax[i] == c) throw std::invalid_argument("max_subtract: row " + std::to_string(i) + " has no allowed entry");
    for (std::size_t j = 0; j < c; ++j)
      if (mask(i, j)) out[i * c + j] = scores.data()[i * c + j] - m;
  }
  const bool g = needs_grad({&scores});
  Tensor y = result({r, c}, std::move(out), g);
  if (g) {
    push("max_subtract", y, [s = scores, y, mask, argmax, r, c]() mutable {
      auto gy = y.grad();
      auto gs = s.mutable_grad();
      for (std::size_t i = 0; i < r; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          if (!mask(i, j)) continue;
          gs[i * c + j] += gy[i * c + j];
          total += gy[i * c + j];
        }
        gs[i * c + argmax[i]] -= total;
      }
    });
  }
  return y;
}

Tensor Tape::masked_softmax(const Tensor& scores, const Mask& mask, double tau) {
  require_mask("masked_softmax", scores, mask);
  if (!(tau > 0.0)) throw std::invalid_argument("masked_softmax: temperature must be > 0");
  const std::size_t r = scores.rows(), c = scores.cols();
  std::vector<double> out(r * c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (mask(i, j)) {
        m = std::max(m, scores.data()[i * c + j]);
        any = true;
      }
    }
    if (!any) throw std::invalid_argument("masked_softmax: row " + std::to_string(i) + " has no allowed entry");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!mask(i, j)) continue;
      out[i * c + j] = std::exp((scores.data()[i * c + j] - m) / tau);
      z += out[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  const bool g = needs_grad({&scores});
  Tensor y = result({r, c}, std::move(out), g);
  if (g) {
    push("masked_softmax", y, [s = scores, y, mask, r, c, tau]() mutable {
      auto gy = y.grad();
      auto p = y.data();
      auto gs = s.mutable_grad();
      for (std::size_t i = 0; i < r; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += p[i * c + j] * gy[i * c + j];
        for (std::size_t j = 0; j < c; ++j) {
          if (mask(i, j)) gs[i * c + j] += p[i * c + j] * (gy[i * c + j] - dot) / tau;
        }
      }
    });
  }
  return y;
}

Tensor Tape::masked_log_softmax(const Tensor& scores, const Mask& mask) {
  require_mask("masked_log_softmax", scores, mask);
  const std::size_t r = scores.rows(), c = scores.cols();
  std::vector<double> out(r * c, 0.0);
  std::vector<double> prob(r * c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (mask(i, j)) {
        m = std::max(m, scores.data()[i * c + j]);
        any = true;
      }
    }
    if (!any) throw std::invalid_argument("masked_log_softmax: row " + std::to_string(i) + " has no allowed entry");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (mask(i, j)) z += std::exp(scores.data()[i * c + j] - m);
    const double lse = m + std::log(z);
    for (std::size_t j = 0; j < c; ++j) {
      if (!mask(i, j)) continue;
      out[i * c + j] = scores.data()[i * c + j] - lse;
      prob[i * c + j] = std::exp(out[i * c + j]);
    }
  }
  const bool g = needs_grad({&scores});
  Tensor y = result({r, c}, std::move(out), g);
  if (g) {
    push("masked_log_softmax", y, [s = scores, y, mask, prob = std::move(prob), r, c]() mutable {
      auto gy = y.grad();
      auto gs = s.mutable_grad();
      for (std::size_t i = 0; i < r; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j)
          if (mask(i, j)) total += gy[i * c + j];
        for (std::size_t j = 0; j < c; ++j) {
          if (mask(i, j)) gs[i * c + j] += gy[i * c + j] - prob[i * c + j] * total;
        }
      }
    });
  }
  return y;
}

Tensor Tape::reduce_max(const Tensor& a) {
  require_matrix("reduce_max", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(c);
  std::vector<std::size_t> arg(c, 0);
  for (std::size_t j = 0; j < c; ++j) {
    out[j] = a.data()[j];
    for (std::size_t i = 1; i < r; ++i) {
      if (a.data()[i * c + j] > out[j]) {
        out[j] = a.data()[i * c + j];
        arg[j] = i;
      }
    }
  }
  const bool g = needs_grad({&a});
  Tensor y = result({1, c}, std::move(out), g);
  if (g) {
    push("reduce_max", y, [a, y, arg, c]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t j = 0; j < c; ++j) ga[arg[j] * c + j] += gy[j];
    });
  }
  return y;
}

Tensor Tape::reduce_sum(const Tensor& a) {
  require_matrix("reduce_sum", a);
  double total = 0.0;
  for (double v : a.data()) total += v;
  const bool g = needs_grad({&a});
  Tensor y = result({1, 1}, {total}, g);
  if (g) {
    push("reduce_sum", y, [a, y]() mutable {
      const double gy = y.grad()[0];
      for (double& v : a.mutable_grad()) v += gy;
    });
  }
  return y;
}

Tensor Tape::row_sum(const Tensor& a) {
  require_matrix("row_sum", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += a.data()[i * c + j];
  const bool g = needs_grad({&a});
  Tensor y = result({r, 1}, std::move(out), g);
  if (g) {
    push("row_sum", y, [a, y, r, c]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gy[i];
    });
  }
  return y;
}

Tensor Tape::mean(const Tensor& a) {
  require_matrix("mean", a);
  const double n = static_cast<double>(a.numel());
  double total = 0.0;
  for (double v : a.data()) total += v;
  const bool g = needs_grad({&a});
  Tensor y = result({1, 1}, {total / n}, g);
  if (g) {
    push("mean", y, [a, y, n]() mutable {
      const double gy = y.grad()[0] / n;
      for (double& v : a.mutable_grad()) v += gy;
    });
  }
  return y;
}

Tensor Tape::concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  bool g = false;
  for (const Tensor& p : parts) {
    require_matrix("concat_cols", p);
    if (p.rows() != r) shape_error("concat_cols", parts[0], p);
    c += p.cols();
    g = g || (recording() && p.requires_grad());
  }
  std::vector<double> out(r * c);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    const std::size_t pc = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(p.data().begin() + i * pc, pc, out.begin() + i * c + off);
    off += pc;
  }
  Tensor y = result({r, c}, std::move(out), g);
  if (g) {
    push("concat", y, [ps = std::vector<Tensor>(parts.begin(), parts.end()), y, r, c]() mutable {
      auto gy = y.grad();
      std::size_t off = 0;
      for (Tensor& p : ps) {
        const std::size_t pc = p.cols();
        if (p.requires_grad()) {
          auto gp = p.mutable_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < pc; ++j) gp[i * pc + j] += gy[i * c + off + j];
        }
        off += pc;
      }
    });
  }
  return y;
}

Tensor Tape::concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  bool g = false;
  for (const Tensor& p : parts) {
    require_matrix("concat_rows", p);
    if (p.cols() != c) shape_error("concat_rows", parts[0], p);
    r += p.rows();
    g = g || (recording() && p.requires_grad());
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor y = result({r, c}, std::move(out), g);
  if (g) {
    push("concat", y, [ps = std::vector<Tensor>(parts.begin(), parts.end()), y]() mutable {
      auto gy = y.grad();
      std::size_t off = 0;
      for (Tensor& p : ps) {
        const std::size_t n = p.numel();
        if (p.requires_grad()) {
          auto gp = p.mutable_grad();
          for (std::size_t i = 0; i < n; ++i) gp[i] += gy[off + i];
        }
        off += n;
      }
    });
  }
  return y;
}

Tensor Tape::gather(const Tensor& a, std::span<const std::size_t> index) {
  require_matrix("gather", a);
  const std::size_t r = a.rows(), c = a.cols();
  if (index.size() != r) {
    throw std::invalid_argument("gather: " + std::to_string(index.size()) + " indices for " +
                                shape_to_string(a.shape()));
  }
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) {
    if (index[i] >= c) throw std::out_of_range("gather: index " + std::to_string(index[i]) + " >= " + std::to_string(c));
    out[i] = a.data()[i * c + index[i]];
  }
  const bool g = needs_grad({&a});
  Tensor y = result({r, 1}, std::move(out), g);
  if (g) {
    push("gather", y, [a, y, idx = std::vector<std::size_t>(index.begin(), index.end()), c]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < idx.size(); ++i) ga[i * c + idx[i]] += gy[i];
    });
  }
  return y;
}

Tensor Tape::take_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_matrix("take_rows", a);
  if (rows.empty()) throw std::invalid_argument("take_rows: empty row set");
  const std::size_t c = a.cols();
  std::vector<double> out(rows.size() * c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw std::out_of_range("take_rows: row out of range");
    std::copy_n(a.data().begin() + rows[i] * c, c, out.begin() + i * c);
  }
  const bool g = needs_grad({&a});
  Tensor y = result({rows.size(), c}, std::move(out), g);
  if (g) {
    push("gather", y, [a, y, idx = std::vector<std::size_t>(rows.begin(), rows.end()), c]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) ga[idx[i] * c + j] += gy[i * c + j];
    });
  }
  return y;
}

Tensor Tape::expand(const Tensor& a, std::size_t rows, std::size_t cols) {
  require_matrix("expand", a);
  const std::size_t ar = a.rows(), ac = a.cols();
  const bool ok = (ar == 1 || ar == rows) && (ac == 1 || ac == cols);
  if (!ok) shape_error("expand", a, "cannot broadcast to " + std::to_string(rows) + "x" + std::to_string(cols));
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = a.data()[(ar == 1 ? 0 : i) * ac + (ac == 1 ? 0 : j)];
  const bool g = needs_grad({&a});
  Tensor y = result({rows, cols}, std::move(out), g);
  if (g) {
    push("expand", y, [a, y, rows, cols, ar, ac]() mutable {
      auto gy = y.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          ga[(ar == 1 ? 0 : i) * ac + (ac == 1 ? 0 : j)] += gy[i * cols + j];
    });
  }
  return y;
}

Tensor Tape::pad_cols(const Tensor& a, std::size_t cols) {
  require_matrix("pad_cols", a);
  if (cols < a.cols()) shape_error("pad_cols", a, "is wider than " + std::to_string(cols));
  if (cols == a.cols()) return a;
  const Tensor zeros = Tensor::zeros({a.rows(), cols - a.cols()});
  const Tensor parts[] = {a, zeros};
  return concat_cols(parts);
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got " +
                                (loss.defined() ? shape_to_string(loss.shape()) : std::string("undefined")));
  }
  if (records_.empty()) throw std::logic_error("backward: empty graph");
  if (consumed_) throw std::logic_error("backward: tape already consumed");
  consumed_ = true;
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output.has_grad()) it->backward();
  }
}

}  // namespace stdsh
