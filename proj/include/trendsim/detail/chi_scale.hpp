#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "trendsim/detail/normal.hpp"

namespace trendsim::detail {

// Quantile of chi_df / sqrt(df), the radial scale of the multivariate t.
// Tabulated as a function of x = Phi^-1(u) on [-8.3, 8.3] with cubic
// Hermite interpolation (exact derivatives); the map is smooth in x for
// every df, so 4096 panels give about 1e-10 absolute accuracy. Outside the
// table the exact inverse is used.
class ChiScaleTable {
 public:
  explicit ChiScaleTable(double df) : df_(df), a_(0.5 * df) {
    values_.resize(kNodes);
    slopes_.resize(kNodes);
    for (std::size_t i = 0; i < kNodes; ++i) {
      const double x = -kRange + static_cast<double>(i) * step();
      const double q = x <= 0.0 ? boost::math::gamma_p_inv(a_, normal_cdf(x))
                                : boost::math::gamma_q_inv(a_, normal_cdf(-x));
      const double g = std::sqrt(2.0 * q / df_);
      values_[i] = g;
      const double dens = boost::math::gamma_p_derivative(a_, q);
      slopes_[i] = (g > 0.0 && dens > 0.0) ? normal_pdf(x) / (dens * df_ * g) : 0.0;
    }
  }

  double exact(double u) const {
    const double q = u <= 0.5 ? boost::math::gamma_p_inv(a_, u) : boost::math::gamma_q_inv(a_, 1.0 - u);
    return std::sqrt(2.0 * q / df_);
  }

  double operator()(double u) const {
    const double x = normal_quantile(u);
    const double pos = (x + kRange) / step();
    if (!(pos >= 0.0) || pos >= static_cast<double>(kNodes - 1)) return exact(u);
    const auto i = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(i);
    const double h = step();
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * values_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] +
           (-2 * t3 + 3 * t2) * values_[i + 1] + (t3 - t2) * h * slopes_[i + 1];
  }

  double df() const { return df_; }

  // One table per df and thread; tables are immutable once built.
  static const ChiScaleTable& for_df(double df) {
    thread_local std::map<double, std::unique_ptr<ChiScaleTable>> cache;
    auto it = cache.find(df);
    if (it == cache.end()) {
      if (cache.size() > 32) cache.clear();
      it = cache.emplace(df, std::make_unique<ChiScaleTable>(df)).first;
    }
    return *it->second;
  }

 private:
  static constexpr std::size_t kNodes = 4097;
  static constexpr double kRange = 8.3;
  static constexpr double step() { return 2.0 * kRange / static_cast<double>(kNodes - 1); }

  double df_;
  double a_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

}  // namespace trendsim::detail
