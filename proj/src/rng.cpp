#include "treelift/rng.hpp"

namespace treelift {

namespace {

// log(k!) via Stirling's series for the PTRS sampler
double log_factorial(double k) {
  static const double table[] = {0.0, 0.0, 0.6931471805599453, 1.791759469228055,
                                 3.1780538303479458, 4.787491742782046,
                                 6.579251212010101, 8.525161361065415,
                                 10.60460290274525, 12.801827480081469};
  if (k < 10.0) return table[static_cast<int>(k)];
  double kk = k + 1.0;
  return (kk - 0.5) * std::log(kk) - kk + 0.9189385332046727 +
         1.0 / (12.0 * kk) - 1.0 / (360.0 * kk * kk * kk);
}

}  // namespace

int64_t Rng::poisson(double lambda) {
  if (lambda <= 0.0) return 0;
  if (lambda < 30.0) {
    // Knuth: multiply uniforms until the product drops below exp(-lambda)
    const double limit = std::exp(-lambda);
    double prod = 1.0;
    int64_t k = 0;
    for (;;) {
      prod *= unit_open();
      if (prod <= limit) return k;
      ++k;
    }
  }
  // Hormann (1993) PTRS transformed rejection
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lambda = std::log(lambda);
  for (;;) {
    double u = unit() - 0.5;
    double v = unit_open();
    double us = 0.5 - std::abs(u);
    double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    double log_accept = k * log_lambda - lambda - log_factorial(k);
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <= log_accept)
      return static_cast<int64_t>(k);
  }
}

}  // namespace treelift
