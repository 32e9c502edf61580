#pragma once

#include <span>

namespace ldl::experiments {

/// Regularized incomplete beta function I_x(a, b) via Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` degrees of freedom (df need not be integral).
double student_t_cdf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// Two-sided Welch t-test. Needs at least two samples per side and non-zero
/// variance in at least one of them (EvaluationError otherwise).
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
/// Population standard deviation (divides by n).
double stddev(std::span<const double> x);
/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace ldl::experiments
