#include "stdsh/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stdsh {
namespace {

double evaluate(const ScalarFn& f) {
  Tape tape(Tape::Mode::kInference);
  const Tensor loss = f(tape);
  if (loss.numel() != 1) throw std::invalid_argument("finite_diff_check: f must return a scalar");
  const double v = loss.item();
  if (!std::isfinite(v)) throw std::domain_error("finite_diff_check: f(x) is not finite");
  return v;
}

}  // namespace

double finite_diff_check(const ScalarFn& f, std::span<Tensor> inputs, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_check: eps must be > 0");
  for (Tensor& x : inputs) {
    if (!x.requires_grad()) throw std::invalid_argument("finite_diff_check: input without requires_grad");
    x.zero_grad();
  }
  evaluate(f);

  {
    Tape tape;
    const Tensor loss = f(tape);
    if (tape.size() > 0) tape.backward(loss);
  }

  double worst = 0.0;
  for (Tensor& x : inputs) {
    auto data = x.data();
    const bool has = x.has_grad();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double analytic = has ? x.grad()[k] : 0.0;
      const double saved = data[k];
      data[k] = saved + eps;
      const double up = evaluate(f);
      data[k] = saved - eps;
      const double down = evaluate(f);
      data[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)));
    }
  }
  return worst;
}

double finite_diff_check(const ScalarFn& f, Tensor input, double eps) {
  Tensor one[] = {input};
  return finite_diff_check(f, one, eps);
}

}  // namespace stdsh
