#include "temp/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace temp::nn {

Adam::Adam(const ParameterSet& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(params.zero_gradients()), v_(params.zero_gradients()) {}

void Adam::step(ParameterSet& params, const Gradients& grads) {
  if (grads.size() != params.size()) throw ShapeError("adam: gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = params[p].value;
    const Tensor& g = grads[p];
    if (g.size() != w.size()) throw ShapeError("adam: shape mismatch for " + params[p].name);
    Tensor& m = m_[p];
    Tensor& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

double LrSchedule::step(double val_loss) {
  if (lr_ < 0) lr_ = initial_lr;
  if (val_loss < best_ * (1.0 - min_improvement) || !std::isfinite(best_)) {
    best_ = val_loss;
    bad_ = 0;
  } else if (++bad_ >= patience_epochs) {
    lr_ = std::max(lr_ * factor, floor);
    bad_ = 0;
  }
  return lr_;
}

double schedule_step(const LrSchedule& sched, std::span<const double> val_loss_history) {
  if (val_loss_history.empty()) throw std::invalid_argument("schedule_step: empty history");
  LrSchedule fresh;
  fresh.initial_lr = sched.initial_lr;
  fresh.factor = sched.factor;
  fresh.patience_epochs = sched.patience_epochs;
  fresh.min_improvement = sched.min_improvement;
  fresh.floor = sched.floor;
  double lr = fresh.lr();
  for (double loss : val_loss_history) lr = fresh.step(loss);
  return lr;
}

}  // namespace temp::nn
