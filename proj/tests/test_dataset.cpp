#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "overparam/dataset.hpp"
#include "overparam/errors.hpp"
#include "overparam/gram.hpp"

using namespace overparam;

namespace {

std::string temp_path(const std::string& name) {
  return "/tmp/overparam_dataset_test_" + name;
}

// Householder-style random rotation, good to ~1e-15 orthogonality.
Eigen::MatrixXd random_rotation(Eigen::Index d, RngSeed seed) {
  SplitRng rng(seed);
  Eigen::MatrixXd g = rng.gaussian_rows(d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ();
}

}  // namespace

TEST_CASE("gen_orthogonal produces an exactly orthonormal set") {
  Dataset ds = gen_orthogonal(3, {1, 0});
  Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(gram(i, j) == (i == j ? 1.0 : 0.0));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(ds.y[i]) == 1.0);
  CHECK_THROWS_AS(gen_orthogonal(0, {1, 0}), InputError);
}

TEST_CASE("gen_orthogonal data has the closed-form Gram matrix 0.5 I") {
  Dataset ds = gen_orthogonal(3, {5, 2});
  GramMatrix cts = hcts(ds);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(std::abs(cts.mat(i, j) - (i == j ? 0.5 : 0.0)) <= 1e-10);
}

TEST_CASE("generators are deterministic in (seed, stream)") {
  Dataset a = gen_orthogonal(6, {9, 1});
  Dataset b = gen_orthogonal(6, {9, 1});
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);

  Dataset c = gen_gaussian_sphere(5, 7, {9, 1});
  Dataset d = gen_gaussian_sphere(5, 7, {9, 1});
  CHECK(c.X == d.X);
  CHECK(c.y == d.y);

  Dataset e = gen_gaussian_sphere(5, 7, {9, 2});
  CHECK(c.X != e.X);  // distinct stream, distinct draws
}

TEST_CASE("gen_gaussian_sphere rows are unit vectors") {
  Dataset ds = gen_gaussian_sphere(40, 12, {3, 0});
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    CHECK(std::abs(ds.X.row(i).norm() - 1.0) <= 1e-12);
}

TEST_CASE("theta on hand cases") {
  Dataset orth = gen_orthogonal(4, {2, 0});
  CHECK(theta(orth) <= 1e-12);

  // A duplicated point forces max inner product 1, so theta = sqrt(4) = 2.
  Dataset dup = gen_orthogonal(4, {2, 0});
  dup.X.row(3) = dup.X.row(0);
  CHECK(theta(dup) == Catch::Approx(2.0).margin(1e-12));

  Dataset two;
  two.X.resize(2, 2);
  two.X << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;  // inner product 0.5
  two.y = Eigen::VectorXd::Ones(2);
  CHECK(theta(two) == Catch::Approx(0.5 * std::sqrt(2.0)).margin(1e-12));

  Dataset one;
  one.X = Eigen::MatrixXd::Identity(1, 1);
  one.y = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(theta(one), InputError);
}

TEST_CASE("theta is invariant under permutation and common rotation") {
  Dataset ds = gen_gaussian_sphere(10, 6, {17, 0});
  double base = theta(ds);

  SplitRng rng({17, 1});
  auto perm = rng.permutation(ds.n());
  Dataset shuffled = ds;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    shuffled.X.row(i) = ds.X.row(perm[static_cast<std::size_t>(i)]);
    shuffled.y[i] = ds.y[perm[static_cast<std::size_t>(i)]];
  }
  CHECK(theta(shuffled) == Catch::Approx(base).margin(1e-12));

  Dataset rotated = ds;
  rotated.X = ds.X * random_rotation(ds.dim(), {17, 2});
  CHECK(theta(rotated) == Catch::Approx(base).margin(1e-9));
}

TEST_CASE("csv round trip preserves the dataset") {
  std::string path = temp_path("roundtrip.csv");
  Dataset ds = gen_gaussian_sphere(7, 5, {21, 0});
  save_csv(ds, path);
  Dataset back = load_csv(path);
  REQUIRE(back.n() == ds.n());
  REQUIRE(back.dim() == ds.dim());
  CHECK((back.X - ds.X).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((back.y - ds.y).cwiseAbs().maxCoeff() <= 1e-14);
  std::remove(path.c_str());
}

TEST_CASE("csv loader validates content") {
  std::string path = temp_path("fixture.csv");

  SECTION("hand-written 2-sample file loads") {
    std::ofstream f(path);
    f << "x0,x1,y\n1,0,1\n0,1,-1\n";
    f.close();
    Dataset ds = load_csv(path);
    CHECK(ds.n() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.y[1] == -1.0);
  }

  SECTION("zero row is rejected even with normalize") {
    std::ofstream f(path);
    f << "x0,x1,y\n0,0,1\n";
    f.close();
    CHECK_THROWS_AS(load_csv(path, true), InputError);
  }

  SECTION("non-unit row needs the normalize flag") {
    std::ofstream f(path);
    f << "x0,x1,y\n2,0,1\n";
    f.close();
    CHECK_THROWS_AS(load_csv(path), InputError);
    Dataset ds = load_csv(path, true);
    CHECK(ds.X(0, 0) == Catch::Approx(1.0));
  }

  SECTION("malformed row reports the line number") {
    std::ofstream f(path);
    f << "x0,x1,y\n1,0,1\n1,zebra,1\n";
    f.close();
    try {
      load_csv(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  SECTION("field-count mismatch is a parse error") {
    std::ofstream f(path);
    f << "x0,x1,y\n1,0\n";
    f.close();
    CHECK_THROWS_AS(load_csv(path), ParseError);
  }

  std::remove(path.c_str());
}
