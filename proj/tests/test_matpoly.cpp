#include <doctest.h>
#include <cstdlib>

#include "mbp/matpoly.hpp"

using namespace mbp;

namespace {

Mat m2(cd a, cd b, cd c, cd d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("eval: constant term and identity") {
  // W = I_2 x - diag(1,2) at z = 0
  MatPoly W({-m2(1, 0, 0, 2), Mat::Identity(2, 2)});
  Mat v = W.eval(0.0);
  CHECK((v + m2(1, 0, 0, 2)).norm() == doctest::Approx(0.0));

  MatPoly id = MatPoly::identity(3);
  Mat a = Mat::Random(3, 3);
  CHECK((id.eval_at_matrix(a) - Mat::Identity(3, 3)).norm() == doctest::Approx(0.0));
}

TEST_CASE("eval_at_matrix: scalar root") {
  // p = 1: x^2 - 3x + 2 at [2] -> [0]
  MatPoly P = MatPoly::scalar({2.0, -3.0, 1.0});
  Mat a = Mat::Constant(1, 1, 2.0);
  CHECK(P.eval_at_matrix(a).norm() == doctest::Approx(0.0));
}

TEST_CASE("eval_at_matrix mismatched sizes throw") {
  MatPoly W = MatPoly::identity(2);
  Mat a = Mat::Identity(3, 3);
  CHECK_THROWS_AS(W.eval_at_matrix(a), Error);
}

TEST_CASE("adjugate_det: scalar and unimodular cases") {
  MatPoly W = MatPoly::scalar({2.0, 0.0, 1.0});
  auto ad = adjugate_det(W);
  CHECK((ad.det.coeff(0)(0, 0) - cd(2.0)).real() == doctest::Approx(0.0));
  CHECK(ad.adj.coeff(0)(0, 0).real() == doctest::Approx(1.0));

  // W = [[1, q(x)], [0, 1]] -> adj = [[1, -q(x)], [0, 1]], det = 1
  MatPoly W2(2, 2);
  W2.coeff_ref(0) = Mat::Identity(2, 2);
  W2.coeff_ref(0)(0, 1) = 3.0;
  W2.coeff_ref(1) = Mat::Zero(2, 2);
  W2.coeff_ref(1)(0, 1) = -2.0;  // q(x) = 3 - 2x
  W2.trim();
  auto ad2 = adjugate_det(W2);
  CHECK(ad2.det.degree() == 0);
  CHECK(std::abs(ad2.det.coeff(0)(0, 0) - cd(1.0)) < 1e-10);
  CHECK(std::abs(ad2.adj.coeff(0)(0, 1) - cd(-3.0)) < 1e-9);
  CHECK(std::abs(ad2.adj.coeff(1)(0, 1) - cd(2.0)) < 1e-9);
}

TEST_CASE("adjugate_det: pointwise product identity on a random instance") {
  std::srand(7);
  std::vector<Mat> c;
  for (int k = 0; k <= 2; ++k) c.push_back(Mat::Random(2, 2));
  MatPoly W(std::move(c));
  auto ad = adjugate_det(W);
  for (int s = 0; s < 7; ++s) {
    cd z(0.3 * s - 1.0, 0.1 * s);
    Mat lhs = W.eval(z) * ad.adj.eval(z);
    Mat rhs = ad.det.eval(z)(0, 0) * Mat::Identity(2, 2);
    CHECK((lhs - rhs).norm() < 1e-9 * std::max(1.0, rhs.norm()));
    Mat lhs2 = ad.adj.eval(z) * W.eval(z);
    CHECK((lhs2 - rhs).norm() < 1e-9 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("spectrum: simple explicit cases") {
  // x^2 - 1
  MatPoly W = MatPoly::scalar({-1.0, 0.0, 1.0});
  auto sp = spectrum(W);
  REQUIRE(sp.size() == 2);
  CHECK(std::abs(sp[0].value - cd(-1.0)) < 1e-8);
  CHECK(std::abs(sp[1].value - cd(1.0)) < 1e-8);
  CHECK(sp[0].multiplicity == 1);

  // I_2 x - diag(1,2)
  MatPoly W2({-m2(1, 0, 0, 2), Mat::Identity(2, 2)});
  auto sp2 = spectrum(W2);
  REQUIRE(sp2.size() == 2);
  CHECK(std::abs(sp2[0].value - cd(1.0)) < 1e-8);
  CHECK(std::abs(sp2[1].value - cd(2.0)) < 1e-8);
}

TEST_CASE("spectrum: product of two linear factors vs scalar-root oracle") {
  MatPoly A({-m2(1, 0, 0, 2), Mat::Identity(2, 2)});
  MatPoly B({-m2(3, 0, 0, 4), Mat::Identity(2, 2)});
  auto sp = spectrum(A * B);
  REQUIRE(sp.size() == 4);
  // det W = (x-1)(x-2)(x-3)(x-4); roots by construction
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(sp[i].value - cd(double(i + 1))) < 1e-7);
    CHECK(sp[i].multiplicity == 1);
  }
}

TEST_CASE("spectrum rejects singular leading coefficient") {
  MatPoly W(2, 2);
  W.coeff_ref(0) = Mat::Identity(2, 2);
  W.coeff_ref(1) = m2(1, 0, 0, 0);  // singular
  CHECK_THROWS_AS(spectrum(W), Error);
}

TEST_CASE("monic_from_jordan_pair: N=1 and scalar quadratic") {
  // X = I_p, J = diag -> W = I x - J
  Mat X = Mat::Identity(3, 3);
  Mat J = Mat::Zero(3, 3);
  J.diagonal() << 1.0, 2.0, -0.5;
  MatPoly W = monic_from_jordan_pair(X, J);
  CHECK(W.degree() == 1);
  CHECK((W.coeff(0) + J).norm() < 1e-12);

  // p=1, X=[1,1], J=diag(1,2) -> x^2 - 3x + 2
  Mat X2(1, 2);
  X2 << 1.0, 1.0;
  Mat J2 = Mat::Zero(2, 2);
  J2.diagonal() << 1.0, 2.0;
  MatPoly W2 = monic_from_jordan_pair(X2, J2);
  CHECK(std::abs(W2.coeff(0)(0, 0) - cd(2.0)) < 1e-12);
  CHECK(std::abs(W2.coeff(1)(0, 0) - cd(-3.0)) < 1e-12);
}

TEST_CASE("monic_from_jordan_pair: rank-deficient stack throws SingularQ") {
  Mat X(1, 2);
  X << 1.0, 1.0;
  Mat J = Mat::Identity(2, 2);
  CHECK_THROWS_AS(monic_from_jordan_pair(X, J), Error);
  try {
    monic_from_jordan_pair(X, J);
  } catch (const Error& e) {
    CHECK(e.code() == Err::SingularQ);
  }
}

TEST_CASE("jordan_triple_Y on the 2x2 Vandermonde example") {
  Mat X(1, 2);
  X << 1.0, 1.0;
  Mat J = Mat::Zero(2, 2);
  J.diagonal() << 1.0, 2.0;
  Mat Y = jordan_triple_Y(X, J);
  CHECK(std::abs(Y(0, 0) - cd(-1.0)) < 1e-12);
  CHECK(std::abs(Y(1, 0) - cd(1.0)) < 1e-12);
}

TEST_CASE("divide_right_exact recovers the quotient") {
  std::srand(11);
  std::vector<Mat> qc, wc;
  for (int k = 0; k <= 3; ++k) qc.push_back(Mat::Random(2, 2));
  wc.push_back(Mat::Random(2, 2));
  wc.push_back(Mat::Identity(2, 2));
  MatPoly Q(std::move(qc)), W(std::move(wc));
  MatPoly F = Q * W;
  MatPoly Q2 = divide_right_exact(F, W);
  CHECK(Q2.degree() == Q.degree());
  for (int k = 0; k <= Q.degree(); ++k)
    CHECK((Q2.coeff(k) - Q.coeff(k)).norm() < 1e-10);

  // nonzero remainder must throw
  MatPoly Fbad = F;
  Fbad.coeff_ref(0) += Mat::Identity(2, 2);
  CHECK_THROWS_AS(divide_right_exact(Fbad, W), Error);
}
