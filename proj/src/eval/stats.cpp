#include "grownup/eval/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <string>

#include "grownup/errors.hpp"

namespace grownup::eval {

namespace {

struct Moments {
  double mean;
  double var;  // unbiased
};

Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss / (n - 1)};
}

double two_sided_p(double t, double df) {
  if (t == 0.0) return 1.0;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace

TTest welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateSample("welch_t: each sample needs at least 2 values");
  const auto ma = moments(a), mb = moments(b);
  const double va = ma.var / static_cast<double>(a.size()), vb = mb.var / static_cast<double>(b.size());
  if (va + vb == 0.0) throw DegenerateSample("welch_t: both samples have zero variance");
  TTest r;
  r.t = (ma.mean - mb.mean) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p_value = two_sided_p(r.t, r.df);
  return r;
}

FisherResult fisher_combined(const std::vector<double>& p_values) {
  if (p_values.empty()) throw DegenerateSample("fisher_combined: no p-values");
  FisherResult r;
  for (double p : p_values) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidP("fisher_combined: p = " + std::to_string(p) + " outside (0, 1]");
    r.statistic -= 2.0 * std::log(p);
  }
  r.df = 2 * p_values.size();
  if (r.statistic == 0.0) return r;
  const boost::math::chi_squared dist(static_cast<double>(r.df));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

TTest corrected_paired_t(const std::vector<double>& diffs, double n_train, double n_test) {
  if (diffs.size() < 2) throw DegenerateSample("corrected_paired_t: need at least 2 differences");
  if (n_test < 0 || n_train < 0 || (n_train == 0 && n_test > 0)) {
    throw DegenerateSample("corrected_paired_t: invalid fold sizes");
  }
  const auto m = moments(diffs);
  const double j = static_cast<double>(diffs.size());
  TTest r;
  r.df = j - 1;
  if (m.var == 0.0) {
    if (m.mean == 0.0) return r;
    throw DegenerateSample("corrected_paired_t: zero variance in differences");
  }
  const double ratio = n_test == 0 ? 0.0 : n_test / n_train;
  r.t = m.mean / std::sqrt((1.0 / j + ratio) * m.var);
  r.p_value = two_sided_p(r.t, r.df);
  return r;
}

TTest paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DegenerateSample("paired_t: samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return corrected_paired_t(d, 1.0, 0.0);
}

}  // namespace grownup::eval
