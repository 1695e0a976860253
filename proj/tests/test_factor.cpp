#include <doctest.h>

#include <cstdlib>

#include "mbp/factor.hpp"

using namespace mbp;

namespace {

KernelRep hilbert_kernel(int moments = 32) {
  std::vector<Mat> m;
  for (int n = 0; n < moments; ++n) m.push_back(Mat::Constant(1, 1, 1.0 / (n + 1)));
  return KernelRep::hankel(std::move(m), 1.0, std::make_shared<LebesgueProvider>());
}

// symmetric scalar measure on +-(j+1)/m nodes; rank 2m
KernelRep symmetric_kernel(int m = 4) {
  std::vector<cd> nodes;
  for (int j = 0; j < m; ++j) {
    nodes.push_back(-double(j + 1) / m);
    nodes.push_back(double(j + 1) / m);
  }
  const int nn = 2 * m;
  std::vector<Mat> w(nn * nn, Mat::Zero(1, 1));
  for (int i = 0; i < nn; ++i) w[i * nn + i] = Mat::Constant(1, 1, 1.0 / nn);
  return KernelRep::discrete(nodes, nodes, w);
}

// random diagonal positive discrete kernel, p x p blocks
KernelRep random_spd_kernel(int p, int nodes, unsigned seed) {
  std::srand(seed);
  std::vector<cd> xs;
  std::vector<Mat> ws;
  for (int i = 0; i < nodes; ++i) xs.push_back(-1.0 + 2.0 * (i + 0.5) / nodes +
                                               0.03 * ((std::rand() % 100) / 100.0));
  for (int i = 0; i < nodes; ++i)
    for (int j = 0; j < nodes; ++j) {
      if (i == j) {
        Mat a = Mat::Random(p, p).real().cast<cd>() * 0.3;
        ws.push_back(a * a.adjoint().eval() + Mat::Identity(p, p));
      } else {
        ws.push_back(Mat::Zero(p, p));
      }
    }
  return KernelRep::discrete(xs, xs, ws);
}

}  // namespace

TEST_CASE("gauss_borel: identity Gram") {
  Mat g = Mat::Identity(6, 6);
  Factorization f(g, 2);
  CHECK((f.S1() - Mat::Identity(6, 6)).norm() < 1e-15);
  CHECK((f.S2() - Mat::Identity(6, 6)).norm() < 1e-15);
  for (int k = 0; k < 3; ++k) CHECK((f.H(k) - Mat::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("gauss_borel: 2x2 Hilbert by hand") {
  Factorization f = gauss_borel(hilbert_kernel(), 2);
  CHECK(std::abs(f.H(0)(0, 0) - cd(1.0)) < 1e-15);
  CHECK(std::abs(f.H(1)(0, 0) - cd(1.0 / 12.0)) < 1e-14);
  MatPoly p1 = f.P1(1);
  CHECK(std::abs(p1.coeff(0)(0, 0) - cd(-0.5)) < 1e-14);
  CHECK(std::abs(p1.coeff(1)(0, 0) - cd(1.0)) < 1e-15);
}

TEST_CASE("gauss_borel reports the first singular truncation") {
  Mat g = Mat::Identity(4, 4);
  g(0, 0) = 0.0;
  try {
    Factorization f(g, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::QuasidefinitenessFailure);
    CHECK(e.index() == 1);
  }
}

TEST_CASE("theta_star basics and nesting") {
  Mat a = Mat::Identity(2, 2);
  Mat b = Mat::Random(2, 2), c = Mat::Random(2, 2), d = Mat::Random(2, 2);
  CHECK((theta_star(a, b, c, d) - (d - c * b)).norm() < 1e-14);

  Mat m(2, 2);
  m << 2.0, 1.0, 1.0, 1.0;
  CHECK(std::abs(theta_star(m, 1)(0, 0) - cd(0.5)) < 1e-15);

  KernelRep k = hilbert_kernel();
  Factorization f = gauss_borel(k, 6);
  Mat g = k.gram(6);
  for (int kk = 0; kk < 6; ++kk) {
    Mat h = kk == 0 ? Mat(g.block(0, 0, 1, 1)) : theta_star(g.topLeftCorner(kk + 1, kk + 1), kk);
    CHECK(rel_err(h, f.H(kk)) < 1e-10);
  }
}

TEST_CASE("reconstruction and biorthogonality on random instances") {
  for (int p : {1, 2, 3}) {
    KernelRep k = random_spd_kernel(p, 9, 100 + p);
    const int n = 7;
    Factorization f = gauss_borel(k, n);
    CHECK(f.reconstruction_residual() < tol::fac);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Mat g = k.pairing(f.P1(i), f.P2(j));
        Mat expect = i == j ? f.H(i) : Mat::Zero(p, p);
        CHECK((g - expect).norm() < 1e-9 * std::max(1.0, f.H(std::min(i, j)).norm()));
      }
  }
}

TEST_CASE("cd kernel: order zero and reproducing property") {
  KernelRep k = hilbert_kernel();
  Factorization f = gauss_borel(k, 7);
  // K_0(x, y) = H_0^{-1}
  Mat k0 = cd_kernel(f, 0, cd(0.3), cd(0.9));
  CHECK(rel_err(k0, Mat(f.H(0).inverse())) < 1e-14);
  // <K_n(x, z), I y^l> = I z^l for l <= n; Hilbert conditioning limits n
  const int nh = 4;
  for (int l = 0; l <= nh; ++l) {
    for (cd z : {cd(0.2, 0.1), cd(-1.4, 0.0)}) {
      MatPoly kx = cd_kernel_in_x(f, nh, z);
      Mat got = k.pairing(kx, MatPoly::monomial(1, l));
      CHECK(std::abs(got(0, 0) - std::pow(z, l)) <
            1e-10 * std::max(1.0, std::abs(std::pow(z, l))));
    }
  }
  const int n = 5;
  // tight tolerance on a well-conditioned instance
  KernelRep ks = symmetric_kernel();
  Factorization fs = gauss_borel(ks, 7);
  for (int l = 0; l <= n; ++l)
    for (cd z : {cd(0.4, 0.3), cd(-0.9, 0.1)}) {
      MatPoly kx = cd_kernel_in_x(fs, n, z);
      Mat got = ks.pairing(kx, MatPoly::monomial(1, l));
      CHECK(std::abs(got(0, 0) - std::pow(z, l)) < 1e-10);
    }
}

TEST_CASE("hankel CD formula telescopes") {
  KernelRep k = hilbert_kernel();
  Factorization f = gauss_borel(k, 8);
  std::srand(17);
  for (int trial = 0; trial < 20; ++trial) {
    cd x(2.0 * std::rand() / RAND_MAX - 1.0, 0.2 * std::rand() / RAND_MAX);
    cd y(2.0 * std::rand() / RAND_MAX - 1.0, -0.3 * std::rand() / RAND_MAX);
    int n = 5;
    Mat lhs = (x - y) * cd_kernel(f, n, x, y);
    Mat rhs = f.P2(n).eval(y).transpose() *
                  Eigen::PartialPivLU<Mat>(f.H(n)).solve(f.P1(n + 1).eval(x)) -
              f.P2(n + 1).eval(y).transpose() *
                  Eigen::PartialPivLU<Mat>(f.H(n)).solve(f.P1(n).eval(x));
    CHECK(rel_err(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("mixed CD formula telescopes on a discrete kernel") {
  KernelRep k = symmetric_kernel();
  Factorization f = gauss_borel(k, 8);
  SecondKind sk = second_kind(f, k);
  for (int trial = 0; trial < 5; ++trial) {
    cd x(2.5 + 0.4 * trial, 0.7);
    cd y(0.3 - 0.1 * trial, -0.2);
    int n = 4;
    Mat lhs = (x - y) * mixed_cd_kernel(f, sk, n, x, y);
    Mat rhs = f.P2(n).eval(y).transpose() *
                  Eigen::PartialPivLU<Mat>(f.H(n)).solve(sk.C1[n + 1]->deriv(x, 0)) -
              f.P2(n + 1).eval(y).transpose() *
                  Eigen::PartialPivLU<Mat>(f.H(n)).solve(sk.C1[n]->deriv(x, 0)) +
              Mat::Identity(1, 1);
    CHECK(rel_err(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("jacobi matrices: band structure and hankel coupling") {
  KernelRep k = random_spd_kernel(2, 9, 42);
  const int n = 7;
  Factorization f = gauss_borel(k, n);
  JacobiMatrices jm = jacobi_matrices(f);
  const int p = 2;
  // banded: |(J1)_{k,l}| ~ 0 for l > k + 1, checked on truncation-exact rows
  for (int kk = 0; kk + 1 < n; ++kk)
    for (int l = kk + 2; l < n; ++l)
      CHECK(jm.J1.block(kk * p, l * p, p, p).norm() < 1e-9 * std::max(1.0, jm.J1.norm()));
  // H^{-1} J1 = J2^T H^{-1} elementwise on the interior window
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      Mat lhs = Eigen::PartialPivLU<Mat>(f.H(i)).solve(jm.J1.block(i * p, j * p, p, p));
      Mat rhs = jm.J2.block(j * p, i * p, p, p).transpose() *
                Eigen::PartialPivLU<Mat>(f.H(j)).solve(Mat::Identity(p, p));
      CHECK((lhs - rhs).norm() < 1e-8 * std::max(1.0, lhs.norm()));
    }
  // three-term relation J1 P1(x) = x P1(x) on interior rows
  for (cd x : {cd(0.3, 0.2), cd(-0.8, 0.0)}) {
    for (int i = 0; i + 1 < n; ++i) {
      Mat acc = Mat::Zero(p, p);
      for (int j = 0; j < n; ++j)
        acc += jm.J1.block(i * p, j * p, p, p) * f.P1(j).eval(x);
      CHECK(rel_err(acc, Mat(x * f.P1(i).eval(x))) < 1e-9);
    }
  }
}

TEST_CASE("symmetric two-point measure has vanishing recurrence diagonal") {
  KernelRep k = symmetric_kernel();
  Factorization f = gauss_borel(k, 6);
  JacobiMatrices jm = jacobi_matrices(f);
  for (int i = 0; i + 1 < 6; ++i) CHECK(std::abs(jm.J1(i, i)) < 1e-12);
}

TEST_CASE("second kind functions: explicit value and Laurent leading term") {
  std::vector<cd> nodes{0.0};
  std::vector<Mat> w{Mat::Constant(1, 1, 1.0)};
  KernelRep k = KernelRep::discrete(nodes, nodes, w);
  Factorization f = gauss_borel(k, 1);
  SecondKind sk = second_kind(f, k);
  cd z(2.0, 1.0);
  CHECK(std::abs(sk.C1[0]->deriv(z, 0)(0, 0) - 1.0 / z) < 1e-15);

  KernelRep kh = symmetric_kernel();
  Factorization fh = gauss_borel(kh, 6);
  for (int n = 0; n < 4; ++n) {
    auto rat = cauchy_transform(kh, fh.P1(n), 1);
    // Laurent expansion of sum A_j / (z - y_j): coefficient of z^{-l-1} is
    // sum A_j y_j^l; the first nonzero one sits at l = n and equals H_n
    for (int l = 0; l <= n; ++l) {
      Mat coef = Mat::Zero(1, 1);
      for (const auto& t : rat.poles()) coef += std::pow(t.z0, l) * t.coef;
      if (l < n)
        CHECK(coef.norm() < 1e-12);
      else
        CHECK(rel_err(coef, fh.H(n)) < 1e-12);
    }
    // poles confined to the support
    for (const auto& t : rat.poles()) {
      double dmin = 1e9;
      for (cd y : kh.nodes_y()) dmin = std::min(dmin, std::abs(t.z0 - y));
      CHECK(dmin < 1e-12);
    }
  }
}
