#include <random>

#include <gtest/gtest.h>

#include "trendsim/contrasts.hpp"
#include "trendsim/report.hpp"

using namespace trendsim;

namespace {

void expect_rows(const ContrastMatrix& c, const std::vector<std::vector<double>>& rows) {
  ASSERT_EQ(c.rows(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ASSERT_EQ(c.cols(), static_cast<Eigen::Index>(rows[r].size()));
    for (std::size_t j = 0; j < rows[r].size(); ++j) {
      EXPECT_NEAR(c.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)), rows[r][j], 1e-15)
          << "row " << r << " col " << j;
    }
  }
}

void expect_rows_sum_zero(const ContrastMatrix& c) {
  for (Eigen::Index r = 0; r < c.rows(); ++r) EXPECT_LT(std::fabs(c.weights.row(r).sum()), 1e-12);
}

}  // namespace

TEST(Williams, BalancedK3MatchesTable) {
  const auto c = williams_matrix(balanced_dose_factor({0, 1, 2, 3}));
  expect_rows(c, {{-1, 0, 0, 1}, {-1, 0, 0.5, 0.5}, {-1, 1.0 / 3, 1.0 / 3, 1.0 / 3}});
  EXPECT_TRUE(validate(c).empty());
  EXPECT_EQ(c.kind, ContrastKind::Williams);
}

TEST(Williams, K1IsTwoSample) { expect_rows(williams_matrix(balanced_dose_factor({0, 1})), {{-1, 1}}); }

TEST(Williams, UnbalancedPooling) {
  const auto c = williams_matrix(make_dose_factor({0, 1, 2}, {4, 2, 6}));
  expect_rows(c, {{-1, 0, 1}, {-1, 2.0 / 8, 6.0 / 8}});
}

TEST(Williams, RowsEqualDirectPooledMeans) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> size(1, 9);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t k = 1 + rep % 6;
    std::vector<double> values;
    std::vector<int> sizes;
    for (std::size_t i = 0; i <= k; ++i) {
      values.push_back(static_cast<double>(i));
      sizes.push_back(size(rng));
    }
    const auto c = williams_matrix(make_dose_factor(values, sizes));
    Eigen::VectorXd mu(static_cast<Eigen::Index>(k + 1));
    for (auto& m : mu) m = z(rng);
    const Eigen::VectorXd got = c.weights * mu;
    for (std::size_t j = 1; j <= k; ++j) {
      double sum = 0, n = 0;
      for (std::size_t i = k + 1 - j; i <= k; ++i) {
        sum += sizes[i] * mu[static_cast<Eigen::Index>(i)];
        n += sizes[i];
      }
      EXPECT_NEAR(got[static_cast<Eigen::Index>(j - 1)], sum / n - mu[0], 1e-12);
    }
    expect_rows_sum_zero(c);
  }
}

TEST(Williams, LabelsUseDoseValues) {
  const auto c = williams_matrix(balanced_dose_factor(twofold_concentrations(6)));
  ASSERT_EQ(c.rows(), 6);
  EXPECT_EQ(c.row_labels.front(), "0.5 - 0");
  EXPECT_EQ(c.row_labels.back(), "0.015625,0.03125,0.0625,0.125,0.25,0.5 - 0");
}

TEST(GrandMean, BalancedL4MatchesTable) {
  const auto c = grand_mean_matrix(balanced_lab_factor(4));
  const double t = 1.0 / 3;
  expect_rows(c, {{-1, t, t, t}, {t, -1, t, t}, {t, t, -1, t}, {t, t, t, -1}});
  EXPECT_EQ(c.row_labels[0], "1 - 2,3,4");
}

TEST(GrandMean, L2) { expect_rows(grand_mean_matrix(balanced_lab_factor(2)), {{-1, 1}, {1, -1}}); }

TEST(GrandMean, UnbalancedSizes) {
  const auto c = grand_mean_matrix(make_nominal_factor({"a", "b", "c"}, {6, 12, 6}));
  EXPECT_NEAR(c.weights(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(c.weights(0, 1), 12.0 / 18, 1e-15);
  EXPECT_NEAR(c.weights(0, 2), 6.0 / 18, 1e-15);
}

TEST(GrandMean, ConstantMeansGiveExactZero) {
  for (std::size_t l = 2; l <= 9; ++l) {
    const auto c = grand_mean_matrix(balanced_lab_factor(l, 3));
    const Eigen::VectorXd mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(l), 4.25);
    const Eigen::VectorXd v = c.weights * mu;
    for (auto x : v) EXPECT_NEAR(x, 0.0, 1e-14);
  }
}

TEST(HighestDose, Examples) {
  expect_rows(highest_dose_matrix(balanced_dose_factor(twofold_concentrations(6))), {{-1, 0, 0, 0, 0, 0, 1}});
  const auto k1 = balanced_dose_factor({0, 1});
  EXPECT_TRUE(highest_dose_matrix(k1).weights.isApprox(williams_matrix(k1).weights));
  const auto k3 = balanced_dose_factor({0, 1, 2, 3});
  EXPECT_TRUE(highest_dose_matrix(k3).weights.row(0).isApprox(williams_matrix(k3).weights.row(0)));
}

TEST(Dunnett, AllDosesVsControl) {
  expect_rows(dunnett_matrix(balanced_dose_factor({0, 1, 2})), {{-1, 1, 0}, {-1, 0, 1}});
}

TEST(Factors, Errors) {
  EXPECT_THROW(williams_matrix(balanced_dose_factor({0})), std::invalid_argument);
  EXPECT_THROW(make_dose_factor({0, 1}, {2, 0}), std::invalid_argument);
  EXPECT_THROW(make_dose_factor({0, 0}, {2, 2}), std::invalid_argument);
  EXPECT_THROW(grand_mean_matrix(balanced_lab_factor(1)), std::invalid_argument);
  EXPECT_THROW(make_nominal_factor({"a", "a"}, {1, 1}), std::invalid_argument);
}

TEST(Validate, ReportsViolations) {
  EXPECT_TRUE(validate(williams_matrix(balanced_dose_factor({0, 1, 2, 3}))).empty());
  auto c = user_defined_matrix(Eigen::MatrixXd{{1, 1}}, {"r"}, {"a", "b"});
  EXPECT_EQ(validate(c), std::vector<std::string>{"row 1: sum = 2 ≠ 0"});
  c.weights.setZero();
  EXPECT_EQ(validate(c), std::vector<std::string>{"row 1: all weights zero"});
}

TEST(Kronecker, TableOneLabels) {
  const auto c = kronecker_interaction(grand_mean_matrix(balanced_lab_factor(7)),
                                       williams_matrix(balanced_dose_factor(twofold_concentrations(6))));
  ASSERT_EQ(c.rows(), 42);
  ASSERT_EQ(c.cols(), 49);
  EXPECT_EQ(c.row_labels.front(), "((1 - 2,3,4,5,6,7):0.5) - ((1 - 2,3,4,5,6,7):0)");
  EXPECT_EQ(c.row_labels[1], "((1 - 2,3,4,5,6,7):0.25,0.5) - ((1 - 2,3,4,5,6,7):0)");
  EXPECT_EQ(c.row_labels[36], "((7 - 1,2,3,4,5,6):0.5) - ((7 - 1,2,3,4,5,6):0)");
  EXPECT_EQ(c.row_labels.back(),
            "((7 - 1,2,3,4,5,6):0.015625,0.03125,0.0625,0.125,0.25,0.5) - ((7 - 1,2,3,4,5,6):0)");
  EXPECT_EQ(c.column_labels.front(), "1:0");
  EXPECT_EQ(c.column_labels[7], "2:0");
  EXPECT_TRUE(validate(c).empty());
}

TEST(Kronecker, TwoByTwo) {
  const auto c = kronecker_interaction(grand_mean_matrix(balanced_lab_factor(2)),
                                       williams_matrix(balanced_dose_factor({0, 1})));
  expect_rows(c, {{1, -1, -1, 1}, {-1, 1, 1, -1}});
}

TEST(Kronecker, EntryIndexingBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 6);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t l = 2 + rep % 5, k = 1 + rep % 4;
    std::vector<int> ls(l), ds(k + 1);
    for (auto& s : ls) s = size(rng);
    for (auto& s : ds) s = size(rng);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < l; ++i) names.push_back("lab" + std::to_string(i));
    const auto a = grand_mean_matrix(make_nominal_factor(names, ls));
    const auto b = williams_matrix(make_dose_factor(twofold_concentrations(k), ds));
    const auto c = kronecker_interaction(a, b);
    ASSERT_EQ(c.rows(), a.rows() * b.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index s = 0; s < b.rows(); ++s)
        for (Eigen::Index i = 0; i < a.cols(); ++i)
          for (Eigen::Index t = 0; t < b.cols(); ++t)
            EXPECT_EQ(c.weights(r * b.rows() + s, i * b.cols() + t), a.weights(r, i) * b.weights(s, t));
    expect_rows_sum_zero(c);
    EXPECT_TRUE(validate(c).empty());
  }
}

TEST(Kronecker, RejectsInvalidParent) {
  const auto bad = user_defined_matrix(Eigen::MatrixXd{{1, 1}}, {"r"}, {"a", "b"});
  EXPECT_THROW(kronecker_interaction(bad, williams_matrix(balanced_dose_factor({0, 1}))), std::invalid_argument);
}

TEST(Serialization, JsonRoundTripAndTable) {
  const auto c = williams_matrix(balanced_dose_factor({0, 1, 2, 3}));
  const auto j = contrast_json(c);
  EXPECT_EQ(j.at("kind"), "Williams");
  const auto back = contrast_from_json(j);
  EXPECT_TRUE(back.weights.isApprox(c.weights));
  EXPECT_EQ(back.row_labels, c.row_labels);
  const auto table = contrast_table(c);
  EXPECT_NE(table.find("1/3"), std::string::npos);
  EXPECT_NE(table.find("1/2"), std::string::npos);
}
