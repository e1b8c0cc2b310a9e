#include "cfdiff/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "cfdiff/errors.hpp"

namespace cfdiff {

namespace {

void check_t(int t, int lo, int hi, const char* what) {
  if (t < lo || t > hi) {
    throw std::out_of_range(std::string(what) + ": t = " + std::to_string(t) +
                            " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

double NoiseSchedule::beta(int t) const {
  check_t(t, 1, steps(), "beta");
  return beta_[t - 1];
}

double NoiseSchedule::alpha(int t) const {
  check_t(t, 1, steps(), "alpha");
  return 1.0 - beta_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_t(t, 0, steps(), "alpha_bar");
  return alpha_bar_[t];
}

double NoiseSchedule::sigma(int t) const {
  check_t(t, 1, steps(), "sigma");
  return sigma_[t - 1];
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas, SigmaMode mode) {
  if (betas.empty()) {
    throw ConfigError("schedule needs at least one step");
  }
  for (double b : betas) {
    if (!(b > 0.0) || b > 1.0) {
      throw ConfigError("beta value " + std::to_string(b) + " outside (0, 1]");
    }
  }
  NoiseSchedule s;
  s.mode_ = mode;
  s.beta_ = std::move(betas);
  const int T = s.steps();
  s.alpha_bar_.resize(T + 1);
  s.alpha_bar_[0] = 1.0;
  for (int t = 1; t <= T; ++t) {
    s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.beta_[t - 1]);
  }
  s.sigma_.resize(T);
  for (int t = 1; t <= T; ++t) {
    if (mode == SigmaMode::ddim) {
      s.sigma_[t - 1] = 0.0;
    } else {
      const double denom = 1.0 - s.alpha_bar_[t];
      // t = 1: alpha_bar(0) = 1 forces sigma = 0.
      s.sigma_[t - 1] =
          denom == 0.0 ? 0.0 : std::sqrt((1.0 - s.alpha_bar_[t - 1]) / denom * s.beta_[t - 1]);
    }
  }
  return s;
}

NoiseSchedule build_schedule(int steps, double beta_start, double beta_end, SigmaMode mode) {
  if (steps < 1) {
    throw ConfigError("schedule step count T = " + std::to_string(steps) + " must be >= 1");
  }
  if (!(beta_start > 0.0)) {
    throw ConfigError("beta_start = " + std::to_string(beta_start) + " must be > 0");
  }
  if (!(beta_end < 1.0)) {
    throw ConfigError("beta_end = " + std::to_string(beta_end) + " must be < 1");
  }
  if (beta_start > beta_end) {
    throw ConfigError("beta_start = " + std::to_string(beta_start) +
                      " exceeds beta_end = " + std::to_string(beta_end));
  }
  std::vector<double> betas(steps);
  if (steps == 1) {
    betas[0] = beta_start;
  } else {
    for (int t = 0; t < steps; ++t) {
      betas[t] = beta_start + (beta_end - beta_start) * static_cast<double>(t) /
                                  static_cast<double>(steps - 1);
    }
  }
  return NoiseSchedule::from_betas(std::move(betas), mode);
}

double sigma(const NoiseSchedule& schedule, int t) {
  return schedule.sigma(t);
}

}  // namespace cfdiff
