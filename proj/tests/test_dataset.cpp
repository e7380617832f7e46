#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "trendsim/dataset.hpp"

using namespace trendsim;

namespace {

std::string crossed_csv(std::size_t labs, const std::vector<std::string>& doses, int n, bool skip_last = false) {
  std::ostringstream os;
  os << "lab,conc,response\n";
  int v = 1;
  for (std::size_t l = 1; l <= labs; ++l) {
    for (std::size_t d = 0; d < doses.size(); ++d) {
      if (skip_last && l == labs && d + 1 == doses.size()) continue;
      for (int i = 0; i < n; ++i) os << l << ',' << doses[d] << ',' << v++ << "\n";
    }
  }
  return os.str();
}

}  // namespace

TEST(LoadCsv, AmesDesignShape) {
  std::istringstream in(crossed_csv(7, {"0", "0.015625", "0.03125", "0.0625", "0.125", "0.25", "0.5"}, 6));
  const auto d = parse_csv(in);
  EXPECT_EQ(d.cell_count(), 49u);
  EXPECT_EQ(d.size(), 294u);
  EXPECT_EQ(d.dose_factor.levels.front(), "0");
  EXPECT_EQ(d.dose_factor.levels.back(), "0.5");
  EXPECT_TRUE(d.dose_factor.first_is_control);
  for (int n : d.cell_sizes()) EXPECT_EQ(n, 6);
}

TEST(LoadCsv, DosesSortedLabsInInputOrder) {
  std::istringstream in("lab,conc,response\nB,2,1\nB,0,2\nA,2,3\nA,0,4\nB,1,5\nA,1,6\n");
  const auto d = parse_csv(in);
  EXPECT_EQ(d.lab_factor.levels, (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(d.dose_factor.levels, (std::vector<std::string>{"0", "1", "2"}));
  EXPECT_EQ(d.observations[0].dose, 2u);
  EXPECT_EQ(d.observations[0].source_row, 1u);
}

TEST(LoadCsv, SingleLabTwoDosesIsValid) {
  std::istringstream in("lab,conc,response\n1,0,1\n1,1,2\n");
  const auto d = parse_csv(in);
  EXPECT_EQ(d.cell_count(), 2u);
}

TEST(LoadCsv, MissingCellNamed) {
  std::istringstream in(crossed_csv(3, {"0", "0.125", "0.25"}, 2, true));
  try {
    parse_csv(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("lab 3, dose 0.25"), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, ErrorsCarryContext) {
  {
    std::istringstream in("lab,dose,response\n1,0,1\n");
    EXPECT_THROW(parse_csv(in), DataError);
  }
  {
    std::istringstream in("lab,conc,response\n1,0,1\n1,x,2\n");
    try {
      parse_csv(in, {}, "f.csv");
      FAIL();
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("f.csv: row 2"), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(load_csv("/nonexistent/ames.csv"), DataError);
}

TEST(LoadCsv, CustomColumnsQuotesAndBom) {
  std::istringstream in("\xEF\xBB\xBF\"Lab\",dose,y,extra\n\"a\",0,1.5,x\n\"a\",1,2.5,x\n\"a\",0,3,x\n");
  const auto d = parse_csv(in, CsvSchema{"Lab", "dose", "y"});
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.lab_factor.levels.front(), "a");
}

TEST(Transform, NoneIsIdentity) {
  std::istringstream in("lab,conc,response\n1,0,1\n1,1,2\n");
  const auto d = parse_csv(in);
  const auto t = apply_transform(d, Transform::None);
  EXPECT_EQ(t.observations[1].response, 2.0);
  EXPECT_EQ(t.transform_applied, Transform::None);
}

TEST(Transform, SqrtAndFreemanTukey) {
  std::istringstream in("lab,conc,response\n1,0,0\n1,0,1\n1,1,4\n1,1,9\n");
  const auto d = parse_csv(in);
  const auto s = apply_transform(d, Transform::Sqrt);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s.observations[i].response, static_cast<double>(i));
  std::istringstream in2("lab,conc,response\n1,0,3\n1,1,3\n");
  const auto ft = apply_transform(parse_csv(in2), Transform::FreemanTukey);
  EXPECT_NEAR(ft.observations[0].response, 3.7321, 1e-4);
  EXPECT_EQ(ft.transform_applied, Transform::FreemanTukey);
}

TEST(Transform, DomainErrorNamesRow) {
  std::istringstream in("lab,conc,response\n1,0,1\n1,1,0\n");
  try {
    apply_transform(parse_csv(in), Transform::Log);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(Transform, CustomCallable) {
  std::istringstream in("lab,conc,response\n1,0,1\n1,1,2\n");
  const auto d = apply_transform(parse_csv(in), [](double y) { return 10.0 * y; });
  EXPECT_EQ(d.observations[1].response, 20.0);
  EXPECT_EQ(d.transform_applied, Transform::Custom);
  EXPECT_THROW(apply_transform(parse_csv(in), [](double) { return NAN; }), DataError);
}

TEST(Csv, WriteThenReadRoundTrip) {
  std::istringstream in(crossed_csv(2, {"0", "0.5"}, 2));
  const auto d = parse_csv(in);
  std::ostringstream out;
  write_csv(out, d);
  std::istringstream back(out.str());
  const auto e = parse_csv(back);
  ASSERT_EQ(e.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(e.observations[i].response, d.observations[i].response);
}
