#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "pushrank/csv.hpp"
#include "pushrank/data.hpp"
#include "pushrank/error.hpp"
#include "test_support.hpp"

using namespace pushrank;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "pushrank_test_data";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string write_temp(const std::string& name,
                       const std::vector<std::string>& lines) {
  auto path = temp_path(name);
  csv::write_lines(path, lines);
  return path;
}

}  // namespace

TEST_CASE("response load counts observed entries") {
  auto path = write_temp("resp34.csv", {
                                           ",D1,D2,D3,D4",
                                           "CL1,1.5,2.5,,4.5",
                                           "CL2,0.1,0.2,0.3,0.4",
                                           "CL3,9,8,7,",
                                       });
  auto resp = load_response(path);
  CHECK(resp.cell_count() == 3);
  CHECK(resp.drug_count() == 4);
  CHECK(resp.observed_count() == 10);
  CHECK(resp.values(1, 2) == doctest::Approx(0.3));
  CHECK_FALSE(resp.observed(0, 2));
}

TEST_CASE("duplicate drug header is rejected") {
  auto path = write_temp("dup.csv", {",D1,D1", "CL1,1,2"});
  CHECK_THROWS_WITH_AS(load_response(path), doctest::Contains("duplicate drug id D1"),
                       Error);
}

TEST_CASE("all-missing row names the cell line") {
  auto path = write_temp("allmiss.csv", {",D1,D2", "CL1,,", "CL2,1,2"});
  CHECK_THROWS_WITH_AS(load_response(path), doctest::Contains("CL1"), Error);
}

TEST_CASE("all-missing column names the drug") {
  auto path = write_temp("colmiss.csv", {",D1,D2", "CL1,1,", "CL2,2,"});
  CHECK_THROWS_WITH_AS(load_response(path), doctest::Contains("D2"), Error);
}

TEST_CASE("non-numeric cell reports coordinates") {
  auto path = write_temp("badnum.csv", {",D1,D2", "CL1,1,x7"});
  CHECK_THROWS_WITH_AS(load_response(path), doctest::Contains("CL1"), Error);
}

TEST_CASE("expression must be fully observed") {
  auto good = write_temp("expr.csv", {",G1,G2,G3,G4,G5", "CL1,1,2,3,4,5",
                                      "CL2,5,4,3,2,1", "CL3,1,1,2,2,3"});
  auto expr = load_expression(good);
  CHECK(expr.cell_count() == 3);
  CHECK(expr.gene_count() == 5);

  auto bad = write_temp("expr_hole.csv", {",G1,G2", "CL1,1,", "CL2,2,3"});
  CHECK_THROWS_WITH_AS(load_expression(bad), doctest::Contains("G2"), Error);
}

TEST_CASE("alignment check names the unmatched cell line") {
  auto rpath = write_temp("align_r.csv", {",D1,D2", "CL1,1,2", "CL2,3,4", "CL3,5,6"});
  auto epath = write_temp("align_e.csv", {",G1", "CL1,1", "CL2,2"});
  auto resp = load_response(rpath);
  auto expr = load_expression(epath);
  CHECK_THROWS_WITH_AS(check_alignment(resp, expr), doctest::Contains("CL3"), Error);
}

TEST_CASE("write-load round trip is bit exact") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd values(6, 9);
  BoolMask mask(6, 9);
  for (int p = 0; p < 6; ++p)
    for (int i = 0; i < 9; ++i) {
      values(p, i) = val(rng);
      mask(p, i) = unit(rng) > 0.25;
    }
  // keep the invariants intact
  for (int p = 0; p < 6; ++p) mask(p, 0) = true;
  for (int i = 0; i < 9; ++i) mask(0, i) = true;
  for (int p = 0; p < 6; ++p)
    for (int i = 0; i < 9; ++i)
      if (!mask(p, i)) values(p, i) = 0.0;

  auto resp = test_support::make_response(values, &mask);
  auto path = temp_path("roundtrip.csv");
  write_response(resp, path);
  auto back = load_response(path);
  REQUIRE(back.cell_line_ids == resp.cell_line_ids);
  REQUIRE(back.drug_ids == resp.drug_ids);
  for (int p = 0; p < 6; ++p)
    for (int i = 0; i < 9; ++i) {
      CHECK(back.observed(p, i) == resp.observed(p, i));
      if (resp.observed(p, i)) {
        CHECK(std::memcmp(&back.values(p, i), &resp.values(p, i),
                          sizeof(double)) == 0);
      }
    }
}

TEST_CASE("write-load-write is byte idempotent") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  Eigen::MatrixXd values(4, 5);
  for (int p = 0; p < 4; ++p)
    for (int i = 0; i < 5; ++i) values(p, i) = val(rng) / 7.0;
  auto resp = test_support::make_response(values);
  auto p1 = temp_path("idem1.csv");
  auto p2 = temp_path("idem2.csv");
  write_response(resp, p1);
  write_response(load_response(p1), p2);
  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("restrict_to keeps subset order and revalidates") {
  Eigen::MatrixXd values(3, 4);
  values << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  auto resp = test_support::make_response(values);

  auto sub = restrict_to(resp, {"CL003", "CL001"},
                         {"D001", "D002", "D003", "D004"});
  CHECK(sub.cell_count() == 2);
  CHECK(sub.drug_count() == 4);
  CHECK(sub.cell_line_ids[0] == "CL003");
  CHECK(sub.values(0, 0) == 9);

  CHECK_THROWS_WITH_AS(restrict_to(resp, {"CL9"}, {"D001"}),
                       doctest::Contains("unknown cell line CL9"), Error);

  // full restriction is the identity
  auto full = restrict_to(resp, resp.cell_line_ids, resp.drug_ids);
  CHECK((full.values - resp.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((full.observed == resp.observed).all());
}

TEST_CASE("restrict_to rejects an all-missing column in the subset") {
  Eigen::MatrixXd values(3, 2);
  values << 1, 2, 3, 4, 5, 6;
  BoolMask mask(3, 2);
  mask << true, true, true, false, true, false;
  values(1, 1) = 0;
  values(2, 1) = 0;
  auto resp = test_support::make_response(values, &mask);
  CHECK_THROWS_WITH_AS(restrict_to(resp, {"CL002", "CL003"}, {"D001", "D002"}),
                       doctest::Contains("D002"), Error);
}
