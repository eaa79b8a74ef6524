#pragma once

#include "temp/nn/autodiff.hpp"

#include <limits>
#include <span>

namespace temp::nn {

/// Bias-corrected Adam.
class Adam {
 public:
  explicit Adam(const ParameterSet& params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step(ParameterSet& params, const Gradients& grads);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long steps() const { return t_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Gradients m_, v_;
};

/// Reduce-on-plateau: multiply the rate by `factor` once `patience` epochs
/// in a row fail to beat the best validation loss by `min_improvement`
/// (relative), never going below `floor`.
class LrSchedule {
 public:
  double initial_lr = 1e-3;
  double factor = 0.1;
  int patience_epochs = 10;
  double min_improvement = 0.10;
  double floor = 1e-6;

  /// Feeds one epoch's validation loss; returns the rate for the next epoch.
  double step(double val_loss);

  double lr() const { return lr_ < 0 ? initial_lr : lr_; }
  double best() const { return best_; }
  int bad_epochs() const { return bad_; }

 private:
  double lr_ = -1.0;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

/// Rate after replaying a whole validation history through a fresh schedule.
double schedule_step(const LrSchedule& sched, std::span<const double> val_loss_history);

}  // namespace temp::nn
