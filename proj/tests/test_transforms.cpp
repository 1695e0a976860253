#include <doctest.h>

#include <cstdlib>

#include "mbp/transforms.hpp"

using namespace mbp;

namespace {

KernelRep symmetric_kernel(int m = 5) {
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

// p=2 diagonal-supported discrete kernel (block-Hankel Gram)
KernelRep spd_kernel_p2(int m = 10, unsigned seed = 77) {
  std::srand(seed);
  std::vector<cd> nodes;
  std::vector<Mat> w(m * m, Mat::Zero(2, 2));
  for (int i = 0; i < m; ++i) {
    nodes.push_back(-1.0 + 2.0 * (i + 0.5) / m);
    Mat a = Mat::Random(2, 2) * 0.4;
    w[i * m + i] = a * a.adjoint().eval() + Mat::Identity(2, 2) / m;
  }
  return KernelRep::discrete(nodes, nodes, w);
}

// non-Hankel p=1 kernel with distinct x and y node grids
KernelRep skew_kernel() {
  std::vector<cd> nx, ny;
  for (int i = 0; i < 7; ++i) nx.push_back(-0.9 + 1.8 * i / 6.0);
  for (int j = 0; j < 7; ++j) ny.push_back(-0.85 + 1.7 * j / 6.0);
  std::vector<Mat> w;
  for (int i = 0; i < 49; ++i)
    w.push_back(Mat::Constant(1, 1, cd(0.05 + 0.02 * ((i * 37) % 11), 0.0)));
  for (int i = 0; i < 7; ++i) w[i * 7 + i] += Mat::Constant(1, 1, 1.0);
  return KernelRep::discrete(nx, ny, w);
}

SpectralPair degree_one_scalar(double a) {
  std::vector<EigenvalueData> eigs(1);
  eigs[0].x = a;
  JordanChain c;
  c.kappa = 1;
  c.right = {Vec::Constant(1, 1.0)};
  eigs[0].chains.push_back(c);
  return spectral_data_forward(1, eigs);
}

SpectralPair degree_two_scalar(double a, double b) {
  std::vector<EigenvalueData> eigs(2);
  eigs[0].x = a;
  eigs[1].x = b;
  for (auto& e : eigs) {
    JordanChain c;
    c.kappa = 1;
    c.right = {Vec::Constant(1, 1.0)};
    e.chains.push_back(c);
  }
  return spectral_data_forward(1, eigs);
}

SpectralPair degree_one_p2(cd e1, cd e2) {
  std::vector<EigenvalueData> eigs(2);
  eigs[0].x = e1;
  eigs[1].x = e2;
  Vec r1(2), r2(2);
  r1 << 1.0, 0.25;
  r2 << -0.3, 1.0;
  JordanChain c1;
  c1.kappa = 1;
  c1.right = {r1};
  JordanChain c2;
  c2.kappa = 1;
  c2.right = {r2};
  eigs[0].chains.push_back(c1);
  eigs[1].chains.push_back(c2);
  return spectral_data_forward(2, eigs);
}

}  // namespace

TEST_CASE("geronimus with identity polynomial is the identity transform") {
  KernelRep k = symmetric_kernel();
  Factorization f = gauss_borel(k, 6);
  TransformResult direct = geronimus_direct(k, MatPoly::identity(1), {}, nullptr, 4);
  for (int i = 0; i <= 4; ++i) {
    CHECK(rel_err(direct.H[i], f.H(i)) < 1e-13);
    CHECK(rel_err(direct.P1[i].coeff(0), f.P1(i).coeff(0)) < 1e-12);
  }
}

TEST_CASE("degree-one massless geronimus: closed form and route agreement") {
  KernelRep k = symmetric_kernel();
  auto pair = degree_one_scalar(2.0);
  const int n = 5;
  Factorization f = gauss_borel(k, n + 3);
  TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
  TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
  TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {}, &pair.data, n);
  CHECK(spec.deviation(direct, n) < 1e-8);
  CHECK(nonspec.deviation(direct, n) < 1e-8);

  // closed forms of the degree-one case:
  //   P-check_n = P_n - C_n(a) C_{n-1}(a)^{-1} P_{n-1}
  //   H-check_n = -C_n(a) C_{n-1}(a)^{-1} H_{n-1}
  SecondKind sk = second_kind(f, k);
  for (int nn = 1; nn <= n; ++nn) {
    cd cn = sk.C1[nn]->deriv(2.0, 0)(0, 0);
    cd cm = sk.C1[nn - 1]->deriv(2.0, 0)(0, 0);
    Mat h = -cn / cm * f.H(nn - 1);
    CHECK(rel_err(h, direct.H[nn]) < 1e-9);
    MatPoly pn = f.P1(nn);
    pn -= cn / cm * f.P1(nn - 1);
    for (int j = 0; j <= nn; ++j)
      CHECK(rel_err(pn.coeff(j), direct.P1[nn].coeff(j)) < 1e-8);
  }
}

TEST_CASE("degree-one geronimus with a Dirac-jet mass") {
  KernelRep k = symmetric_kernel();
  auto pair = degree_one_scalar(2.0);
  MassTerm m;
  m.eig_index = 0;
  m.chain_index = 0;
  m.order = 0;
  m.xi.terms.push_back({cd(0.3), 0, Vec::Constant(1, 0.8)});
  const int n = 4;
  Factorization f = gauss_borel(k, n + 3);
  TransformResult direct = geronimus_direct(k, pair.W, {m}, &pair.data, n);
  TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {m}, n);
  TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {m}, &pair.data, n);
  CHECK(spec.deviation(direct, n) < 1e-8);
  CHECK(nonspec.deviation(direct, n) < 1e-8);

  TransformResult spec0 = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
  CHECK(spec0.deviation(direct, n) > 1e-4);  // the mass matters
}

TEST_CASE("degree-two monic geronimus, scalar and matrix") {
  {
    KernelRep k = symmetric_kernel();
    auto pair = degree_two_scalar(2.0, 3.0);
    const int n = 4;
    Factorization f = gauss_borel(k, n + 4);
    TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
    TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
    TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {}, &pair.data, n);
    CHECK(spec.deviation(direct, n) < 1e-8);
    CHECK(nonspec.deviation(direct, n) < 1e-8);
  }
  {
    KernelRep k = spd_kernel_p2();
    auto pair = degree_one_p2(2.0, 3.0);
    const int n = 4;
    Factorization f = gauss_borel(k, n + 3);
    TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
    TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
    TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {}, &pair.data, n);
    CHECK(spec.deviation(direct, n) < 1e-7);
    CHECK(nonspec.deviation(direct, n) < 1e-7);
  }
}

TEST_CASE("n < N branch agrees with the direct route") {
  KernelRep k = symmetric_kernel();
  auto pair = degree_two_scalar(2.0, 3.0);
  const int n = 1;  // below N = 2
  Factorization f = gauss_borel(k, 6);
  TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
  TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
  TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {}, &pair.data, n);
  CHECK(spec.deviation(direct, n) < 1e-8);
  CHECK(nonspec.deviation(direct, n) < 1e-8);
}

TEST_CASE("geronimus on a non-Hankel kernel") {
  KernelRep k = skew_kernel();
  auto pair = degree_one_scalar(2.2);
  const int n = 4;
  Factorization f = gauss_borel(k, n + 3);
  TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
  TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
  TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {}, &pair.data, n);
  CHECK(spec.deviation(direct, n) < 1e-8);
  CHECK(nonspec.deviation(direct, n) < 1e-8);
}

TEST_CASE("unimodular christoffel through the nonspectral route") {
  KernelRep k = spd_kernel_p2(10, 91);
  MatPoly W(2, 2);
  W.coeff_ref(0) = Mat::Identity(2, 2);
  W.coeff_ref(1) = Mat::Zero(2, 2);
  W.coeff_ref(1)(0, 1) = 0.8;
  W.trim();
  MatPoly W_G = unimodular_inverse(W);  // Geronimus polynomial for u W
  const int n = 4;
  Factorization f = gauss_borel(k, n + W_G.degree() + 2);
  KernelRep kc = christoffel_kernel(k, W);
  Factorization fd = gauss_borel(kc, n + 1);
  TransformResult nonspec = geronimus_nonspectral(f, k, W_G, {}, nullptr, n);
  for (int i = 0; i <= n; ++i) {
    CHECK(rel_err(nonspec.H[i], fd.H(i)) < 1e-8);
    for (int j = 0; j <= i; ++j)
      CHECK(rel_err(nonspec.P1[i].coeff(j), fd.P1(i).coeff(j)) < 1e-8);
  }
  CHECK(nonspec.p2_up_to_leading);  // unimodular leading coefficient is singular
}

TEST_CASE("spectral vs nonspectral bridge identity") {
  KernelRep k = symmetric_kernel();
  auto pair = degree_two_scalar(2.0, 3.0);
  const int n = 4;
  Factorization f = gauss_borel(k, n + 2);
  auto aux = aux_matrices(pair.W, pair.data);
  KernelRep pk = geronimus_kernel(k, pair.W, {}, &pair.data);
  const int N = 2;
  Mat stacked(n + 1, N);
  Mat rn(n + 1, N);
  for (int m = 0; m <= n; ++m) {
    auto c1 = cauchy_fn(k, f.P1(m), 1);
    stacked.row(m) = root_jet(*c1, pair.data).row(0);
    for (int l = 0; l < N; ++l) rn(m, l) = pk.pairing(f.P1(m), MatPoly::monomial(1, l))(0, 0);
  }
  Mat resid = stacked + rn * aux.B * aux.Q;
  CHECK(resid.norm() < 1e-8 * std::max(1.0, stacked.norm()));
}

TEST_CASE("geronimus-uvarov: degree one over degree one") {
  KernelRep k = symmetric_kernel();
  auto pc = degree_one_scalar(1.8);
  auto pg = degree_one_scalar(2.5);
  const int n = 4;
  Factorization f = gauss_borel(k, n + 4);
  TransformResult direct = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Direct);
  TransformResult spec = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Spectral);
  TransformResult mixed = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Mixed);
  CHECK(spec.deviation(direct, n) < 1e-7);
  CHECK(mixed.deviation(direct, n) < 1e-7);
}

TEST_CASE("geronimus-uvarov reduces to christoffel when W_G = I") {
  KernelRep k = symmetric_kernel();
  auto pc = degree_one_scalar(1.7);
  MatPoly id = MatPoly::identity(1);
  const int n = 4;
  Factorization f = gauss_borel(k, n + 4);
  TransformResult direct = geronimus_uvarov(f, k, pc.W, id, {}, nullptr, n, GURoute::Direct);
  TransformResult spec = geronimus_uvarov(f, k, pc.W, id, {}, nullptr, n, GURoute::Spectral);
  CHECK(spec.deviation(direct, n) < 1e-7);
}

TEST_CASE("geronimus-uvarov with masses agrees across routes") {
  KernelRep k = symmetric_kernel();
  auto pc = degree_one_scalar(1.9);
  auto pg = degree_one_scalar(2.4);
  MassTerm m;
  m.eig_index = 0;
  m.chain_index = 0;
  m.order = 0;
  m.xi.terms.push_back({cd(0.25), 0, Vec::Constant(1, 0.5)});
  const int n = 3;
  Factorization f = gauss_borel(k, n + 4);
  TransformResult direct = geronimus_uvarov(f, k, pc.W, pg.W, {m}, &pg.data, n, GURoute::Direct);
  TransformResult spec = geronimus_uvarov(f, k, pc.W, pg.W, {m}, &pg.data, n, GURoute::Spectral);
  TransformResult mixed = geronimus_uvarov(f, k, pc.W, pg.W, {m}, &pg.data, n, GURoute::Mixed);
  CHECK(spec.deviation(direct, n) < 1e-7);
  CHECK(mixed.deviation(direct, n) < 1e-7);
}

TEST_CASE("geronimus-uvarov n < N_G branch") {
  KernelRep k = symmetric_kernel();
  auto pc = degree_one_scalar(1.8);
  auto pg = degree_two_scalar(2.2, 3.1);
  const int n = 1;  // below N_G = 2
  Factorization f = gauss_borel(k, 7);
  TransformResult direct = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Direct);
  TransformResult spec = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Spectral);
  TransformResult mixed = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Mixed);
  CHECK(spec.deviation(direct, n) < 1e-7);
  CHECK(mixed.deviation(direct, n) < 1e-7);
}

TEST_CASE("adjugate recast of a singular-leading-coefficient christoffel") {
  // u W with det A_N = 0 recast as W_C = det(W) I, W_G = adj(W); block-Hankel
  // (diagonal) p=2 kernel as the application requires
  KernelRep k = spd_kernel_p2(10, 55);
  MatPoly W(2, 2);
  W.coeff_ref(0) = Mat::Identity(2, 2) * 2.0;
  W.coeff_ref(0)(0, 1) = 0.3;
  Mat lead = Mat::Zero(2, 2);
  lead(0, 0) = 1.0;
  lead(0, 1) = 0.5;
  W.coeff_ref(1) = lead;  // singular leading coefficient
  W.trim();
  auto ad = adjugate_det(W);
  cd leadc = ad.det.coeff(ad.det.degree())(0, 0);
  MatPoly W_C(2, 2);
  for (int j = 0; j <= ad.det.degree(); ++j)
    W_C.coeff_ref(j) = ad.det.coeff(j)(0, 0) / leadc * Mat::Identity(2, 2);
  W_C.trim();
  MatPoly W_G = ad.adj;
  const int n = 3;
  Factorization f = gauss_borel(k, n + W_C.degree() + W_G.degree() + 2);
  TransformResult mixed = geronimus_uvarov(f, k, W_C, W_G, {}, nullptr, n, GURoute::Mixed);
  KernelRep kc = christoffel_kernel(k, (1.0 / leadc) * W);
  Factorization fd = gauss_borel(kc, n + 1);
  for (int i = 0; i <= n; ++i) {
    CHECK(rel_err(mixed.H[i], fd.H(i)) < 1e-7);
    for (int j = 0; j <= i; ++j)
      CHECK(rel_err(mixed.P1[i].coeff(j), fd.P1(i).coeff(j)) < 1e-7);
  }
}

TEST_CASE("uvarov: zero mass, point mass, sobolev jet") {
  KernelRep k = symmetric_kernel();
  const int n = 4;
  Factorization f = gauss_borel(k, n + 2);
  TransformResult none = uvarov(f, k, {}, n);
  for (int i = 0; i <= n; ++i) CHECK(rel_err(none.H[i], f.H(i)) < 1e-14);

  UvarovTerm t;
  t.y_point = 0.37;
  t.order = 0;
  t.beta.terms.push_back({cd(0.37), 0, Mat::Constant(1, 1, 0.6)});
  TransformResult direct = uvarov_direct(k, {t}, n);
  TransformResult formula = uvarov(f, k, {t}, n);
  CHECK(formula.deviation(direct, n) < 1e-9);

  // discrete Sobolev: order-1 derivative jet at one point
  UvarovTerm s0, s1;
  s0.y_point = 0.37;
  s0.order = 0;
  s0.beta.terms.push_back({cd(0.37), 0, Mat::Constant(1, 1, 0.5)});
  s1.y_point = 0.37;
  s1.order = 1;
  s1.beta.terms.push_back({cd(0.37), 1, Mat::Constant(1, 1, 0.25)});
  TransformResult sdirect = uvarov_direct(k, {s0, s1}, n);
  TransformResult sformula = uvarov(f, k, {s0, s1}, n);
  CHECK(sformula.deviation(sdirect, n) < 1e-8);
}

TEST_CASE("uvarov beta -> 0 returns the base family linearly") {
  KernelRep k = symmetric_kernel();
  const int n = 3;
  Factorization f = gauss_borel(k, n + 2);
  double prev = -1.0;
  for (double eps : {1e-4, 1e-6}) {
    UvarovTerm t;
    t.y_point = 0.37;
    t.order = 0;
    t.beta.terms.push_back({cd(0.37), 0, Mat::Constant(1, 1, eps)});
    TransformResult r = uvarov(f, k, {t}, n);
    double dev = 0.0;
    for (int i = 0; i <= n; ++i) dev = std::max(dev, rel_err(r.H[i], f.H(i)));
    if (prev > 0) CHECK(dev < prev * 1e-1);  // linear decay
    CHECK(dev < 10 * eps);
    prev = dev;
  }
}

TEST_CASE("uvarov on a p=2 kernel") {
  KernelRep k = spd_kernel_p2(10, 13);
  const int n = 3;
  Factorization f = gauss_borel(k, n + 2);
  UvarovTerm t;
  t.y_point = 0.21;
  t.order = 0;
  Mat b(2, 2);
  b << 0.4, 0.1, -0.05, 0.3;
  t.beta.terms.push_back({cd(0.21), 0, b});
  TransformResult direct = uvarov_direct(k, {t}, n);
  TransformResult formula = uvarov(f, k, {t}, n);
  CHECK(formula.deviation(direct, n) < 1e-9);
}

TEST_CASE("poised set search") {
  std::srand(6);
  Mat rows = Mat::Random(3, 8);
  auto idx = poised_set_search(rows, 3);
  REQUIRE(idx.size() == 3);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 1);
  CHECK(idx[2] == 2);
  // duplicated columns are skipped
  Mat dup(2, 4);
  dup.col(0) = Vec::Constant(2, 1.0);
  dup.col(1) = Vec::Constant(2, 1.0);
  dup.col(2) = Vec::Constant(2, 1.0);
  dup.col(3) << 1.0, -1.0;
  auto idx2 = poised_set_search(dup, 2);
  REQUIRE(idx2.size() == 2);
  Mat sub(2, 2);
  sub.col(0) = dup.col(idx2[0]);
  sub.col(1) = dup.col(idx2[1]);
  CHECK(rcond(sub) > 1e-3);
  // rank-deficient rows
  Mat rank1 = Vec::Constant(3, 1.0) * RowVec::Constant(5, 1.0);
  CHECK_THROWS_AS(poised_set_search(rank1, 3), Error);
}

TEST_CASE("resolvent and connection report (geronimus)") {
  KernelRep k = symmetric_kernel();
  auto pair = degree_two_scalar(2.0, 3.0);
  const int win = 8;
  Factorization f = gauss_borel(k, win);
  KernelRep pk = geronimus_kernel(k, pair.W, {}, &pair.data);
  Factorization ft = gauss_borel(pk, win);
  std::mt19937_64 rng(99);
  auto rep = resolvent_and_connection(f, ft, k, pk, MatPoly::identity(1), pair.W, rng);
  CHECK(rep.band_residual < 1e-9);
  CHECK(rep.last_subdiag_residual < 1e-9);
  CHECK(rep.alternative_residual < 1e-8);
  CHECK(rep.connection_P_residual < 1e-9);
  CHECK(rep.connection_C_residual < 1e-8);
  CHECK(rep.cd_connection_residual < 1e-8);
  CHECK(rep.cd_mixed_residual < 1e-8);
}

TEST_CASE("resolvent with identity perturbation is the identity") {
  KernelRep k = symmetric_kernel();
  const int win = 6;
  Factorization f = gauss_borel(k, win);
  std::mt19937_64 rng(7);
  auto rep =
      resolvent_and_connection(f, f, k, k, MatPoly::identity(1), MatPoly::identity(1), rng);
  CHECK((rep.omega - Mat::Identity(rep.omega.rows(), rep.omega.cols())).norm() < 1e-10);
}

TEST_CASE("resolvent and connection report (geronimus-uvarov)") {
  KernelRep k = symmetric_kernel();
  auto pc = degree_one_scalar(1.8);
  auto pg = degree_one_scalar(2.5);
  const int win = 8;
  Factorization f = gauss_borel(k, win);
  KernelRep pk = geronimus_uvarov_kernel(k, pc.W, pg.W, {}, &pg.data);
  Factorization ft = gauss_borel(pk, win);
  std::mt19937_64 rng(5);
  auto rep = resolvent_and_connection(f, ft, k, pk, pc.W, pg.W, rng);
  CHECK(rep.band_residual < 1e-9);
  CHECK(rep.last_subdiag_residual < 1e-9);
  CHECK(rep.connection_P_residual < 1e-8);
  CHECK(rep.cd_connection_residual < 1e-8);
}

TEST_CASE("degree-one product formulas for the quasitau chain") {
  KernelRep k = symmetric_kernel();
  auto pair = degree_one_scalar(2.0);
  const int n = 5;
  Factorization f = gauss_borel(k, n + 3);
  TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
  SecondKind sk = second_kind(f, k);
  // C_n(A) = (-1)^(n-1) H-check_n prod_{m<n} H_m^{-1} H-check_m  (A = 2)
  for (int nn = 1; nn <= n; ++nn) {
    cd lhs = sk.C1[nn]->deriv(2.0, 0)(0, 0);
    cd prod = 1.0;
    for (int m = 0; m < nn; ++m) prod *= direct.H[m](0, 0) / f.H(m)(0, 0);
    cd rhs = std::pow(-1.0, nn - 1) * direct.H[nn](0, 0) * prod;
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
  }
  // christoffel side: P_{n+1}(A) = (-1)^(n+1) prod H-hat_m H_m^{-1}
  auto pc = degree_one_scalar(1.6);
  TransformResult chat =
      geronimus_uvarov(f, k, pc.W, MatPoly::identity(1), {}, nullptr, n, GURoute::Direct);
  for (int nn = 0; nn + 1 <= n; ++nn) {
    cd lhs = f.P1(nn + 1).eval(1.6)(0, 0);
    cd prod = 1.0;
    for (int m = 0; m <= nn; ++m) prod *= chat.H[m](0, 0) / f.H(m)(0, 0);
    cd rhs = std::pow(-1.0, nn + 1) * prod;
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("p=2 geronimus-uvarov degree one with matrix eigen-structure") {
  KernelRep k = spd_kernel_p2(10, 23);
  auto pc = degree_one_p2(1.7, 2.6);
  auto pg = degree_one_p2(2.1, 3.2);
  const int n = 3;
  Factorization f = gauss_borel(k, n + 4);
  TransformResult direct = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Direct);
  TransformResult spec = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Spectral);
  TransformResult mixed = geronimus_uvarov(f, k, pc.W, pg.W, {}, &pg.data, n, GURoute::Mixed);
  CHECK(spec.deviation(direct, n) < 1e-7);
  CHECK(mixed.deviation(direct, n) < 1e-7);
}

TEST_CASE("geronimus on continuous Hankel moments through the provider") {
  // Lebesgue moments with exact resolvent moments; all three routes on the
  // provider-backed kernel
  std::vector<Mat> m;
  for (int i = 0; i < 28; ++i) m.push_back(Mat::Constant(1, 1, 1.0 / (i + 1)));
  KernelRep k = KernelRep::hankel(std::move(m), 1.0, std::make_shared<LebesgueProvider>());
  auto pair = degree_one_scalar(2.0);
  const int n = 4;
  Factorization f = gauss_borel(k, n + 3);
  TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
  TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
  TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {}, &pair.data, n);
  // the Hilbert-type Gram conditioning bounds the agreement near 1e-8
  CHECK(spec.deviation(direct, n) < 1e-7);
  CHECK(nonspec.deviation(direct, n) < 1e-7);

  // with a Dirac-jet mass
  MassTerm mass;
  mass.eig_index = 0;
  mass.chain_index = 0;
  mass.order = 0;
  mass.xi.terms.push_back({cd(0.3), 0, Vec::Constant(1, 0.4)});
  TransformResult dm = geronimus_direct(k, pair.W, {mass}, &pair.data, n);
  TransformResult sm = geronimus_spectral(f, k, pair.W, pair.data, {mass}, n);
  CHECK(sm.deviation(dm, n) < 1e-7);
}

TEST_CASE("geronimus with a double eigenvalue on provider-backed moments") {
  // kappa = 2 chain at 2.0: W_G = (y - 2)^2, exercising first-order
  // derivatives of the resolvent moments
  std::vector<Mat> m;
  for (int i = 0; i < 28; ++i) m.push_back(Mat::Constant(1, 1, 1.0 / (i + 1)));
  KernelRep k = KernelRep::hankel(std::move(m), 1.0, std::make_shared<LebesgueProvider>());
  std::vector<EigenvalueData> eigs(1);
  eigs[0].x = 2.0;
  JordanChain c;
  c.kappa = 2;
  c.right = {Vec::Constant(1, 1.0), Vec::Constant(1, 0.0)};
  eigs[0].chains.push_back(c);
  auto pair = spectral_data_forward(1, eigs);
  const int n = 3;
  Factorization f = gauss_borel(k, n + 4);
  TransformResult direct = geronimus_direct(k, pair.W, {}, &pair.data, n);
  TransformResult spec = geronimus_spectral(f, k, pair.W, pair.data, {}, n);
  TransformResult nonspec = geronimus_nonspectral(f, k, pair.W, {}, &pair.data, n);
  CHECK(spec.deviation(direct, n) < 1e-7);
  CHECK(nonspec.deviation(direct, n) < 1e-7);
}

TEST_CASE("uvarov with off-diagonal support") {
  // x-functional anchored away from the y-side point
  KernelRep k = symmetric_kernel();
  const int n = 4;
  Factorization f = gauss_borel(k, n + 2);
  UvarovTerm t;
  t.y_point = 0.4;
  t.order = 0;
  t.beta.terms.push_back({cd(0.1), 0, Mat::Constant(1, 1, 0.5)});
  t.beta.terms.push_back({cd(-0.3), 1, Mat::Constant(1, 1, 0.2)});
  TransformResult direct = uvarov_direct(k, {t}, n);
  TransformResult formula = uvarov(f, k, {t}, n);
  CHECK(formula.deviation(direct, n) < 1e-9);
}
