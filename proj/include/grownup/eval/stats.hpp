#pragma once

#include <cstddef>
#include <vector>

namespace grownup::eval {

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
};

/// Welch's unequal-variance two-sample test with Welch-Satterthwaite degrees
/// of freedom. Needs two samples of size >= 2; throws DegenerateSample when
/// both variances are zero.
TTest welch_t(const std::vector<double>& a, const std::vector<double>& b);

struct FisherResult {
  double statistic = 0.0;  // -2 sum ln p
  std::size_t df = 0;
  double p_value = 1.0;
};

/// Fisher's method. Throws InvalidP for any p outside (0, 1], and
/// DegenerateSample for an empty list.
FisherResult fisher_combined(const std::vector<double>& p_values);

/// Paired t-test over J cross-validation differences with the Nadeau-Bengio
/// variance correction (1/J + n_test/n_train). n_test = 0 gives the ordinary
/// paired test. Throws DegenerateSample for J < 2, for zero variance with a
/// nonzero mean, or for n_train = 0 with n_test > 0.
TTest corrected_paired_t(const std::vector<double>& diffs, double n_train, double n_test);

/// Ordinary paired t-test on the element-wise differences a - b.
TTest paired_t(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace grownup::eval
