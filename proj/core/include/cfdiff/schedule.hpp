#pragma once

#include <vector>

namespace cfdiff {

// sigma_t = 0 everywhere makes the reverse process deterministic (DDIM);
// the ancestral DDPM value is sqrt((1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t).
enum class SigmaMode { ddpm, ddim };

// Forward-noise schedule beta_{1..T} and every coefficient derived from it.
// Convention: alpha_bar(0) = 1, which makes sigma(1) = 0 and the t = 1
// reverse step exact. Immutable after construction; safe to share across
// concurrent samplers.
class NoiseSchedule {
 public:
  int steps() const { return static_cast<int>(beta_.size()); }
  SigmaMode sigma_mode() const { return mode_; }

  double beta(int t) const;       // t in [1, T]
  double alpha(int t) const;      // 1 - beta(t)
  double alpha_bar(int t) const;  // t in [0, T], cumulative product
  double sigma(int t) const;      // t in [1, T], mode-dependent

  // Bypasses the linear-schedule validation; betas must be in (0, 1].
  // Intended for tests and experiments with hand-picked schedules.
  static NoiseSchedule from_betas(std::vector<double> betas, SigmaMode mode);

 private:
  friend NoiseSchedule build_schedule(int, double, double, SigmaMode);
  NoiseSchedule() = default;

  std::vector<double> beta_;       // beta_[t-1] is beta_t
  std::vector<double> alpha_bar_;  // alpha_bar_[t] is alpha_bar_t, size T+1
  std::vector<double> sigma_;      // sigma_[t-1] is sigma_t
  SigmaMode mode_ = SigmaMode::ddpm;
};

// Linear schedule from beta_start to beta_end inclusive (T = 1 uses
// beta_start alone). Requires T >= 1 and 0 < beta_start <= beta_end < 1;
// violations raise ConfigError naming the offending bound.
NoiseSchedule build_schedule(int steps, double beta_start, double beta_end,
                             SigmaMode mode = SigmaMode::ddpm);

double sigma(const NoiseSchedule& schedule, int t);

}  // namespace cfdiff
