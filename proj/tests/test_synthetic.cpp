#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pushrank/error.hpp"
#include "pushrank/synthetic.hpp"
#include "test_support.hpp"

using namespace pushrank;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("responses are exactly low rank without noise") {
  auto data = generate_synthetic(10, 14, 3, 0.0, 0.0, 1);
  for (int p = 0; p < 10; ++p)
    for (int i = 0; i < 14; ++i) {
      double expected = -data.planted.U.col(p).dot(data.planted.V.col(i));
      CHECK(data.response.values(p, i) == doctest::Approx(expected).epsilon(1e-14));
    }
  CHECK(data.expression.gene_count() == 15);
}

TEST_CASE("missing mass stays within binomial bounds") {
  auto data = generate_synthetic(40, 60, 5, 0.05, 0.2, 7);
  const double expect = 0.2 * 40 * 60;
  const double sigma = std::sqrt(40 * 60 * 0.2 * 0.8);
  const double missing = 40.0 * 60.0 - static_cast<double>(data.response.observed_count());
  CHECK(std::abs(missing - expect) <= 4.0 * sigma);
  data.response.validate();
}

TEST_CASE("generation is byte deterministic") {
  auto dir = std::filesystem::temp_directory_path() / "pushrank_synth";
  std::filesystem::create_directories(dir);
  auto a = generate_synthetic(12, 15, 2, 0.1, 0.25, 99);
  auto b = generate_synthetic(12, 15, 2, 0.1, 0.25, 99);
  write_response(a.response, (dir / "a.csv").string());
  write_response(b.response, (dir / "b.csv").string());
  CHECK(slurp((dir / "a.csv").string()) == slurp((dir / "b.csv").string()));
  write_expression(a.expression, (dir / "ea.csv").string());
  write_expression(b.expression, (dir / "eb.csv").string());
  CHECK(slurp((dir / "ea.csv").string()) == slurp((dir / "eb.csv").string()));

  auto c = generate_synthetic(12, 15, 2, 0.1, 0.25, 100);
  write_response(c.response, (dir / "c.csv").string());
  CHECK(slurp((dir / "a.csv").string()) != slurp((dir / "c.csv").string()));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(generate_synthetic(1, 5, 2, 0.0, 0.0, 1), Error);
  CHECK_THROWS_AS(generate_synthetic(5, 5, 0, 0.0, 0.0, 1), Error);
  CHECK_THROWS_AS(generate_synthetic(5, 5, 2, 0.0, 0.6, 1), Error);
  CHECK_THROWS_AS(generate_synthetic(5, 5, 2, -0.1, 0.0, 1), Error);
}

TEST_CASE("expression correlates with the planted latent similarity") {
  auto data = generate_synthetic(20, 25, 3, 0.02, 0.0, 5);
  // cells with near-identical latent vectors should have similar expression
  double best_latent = 1e9, best_expr = 0.0;
  double worst_latent = -1.0, worst_expr = 0.0;
  for (int p = 0; p < 20; ++p)
    for (int q = p + 1; q < 20; ++q) {
      double dl = (data.planted.U.col(p) - data.planted.U.col(q)).norm();
      double de = (data.expression.values.row(p) - data.expression.values.row(q)).norm();
      if (dl < best_latent) {
        best_latent = dl;
        best_expr = de;
      }
      if (dl > worst_latent) {
        worst_latent = dl;
        worst_expr = de;
      }
    }
  CHECK(best_expr < worst_expr);
}
