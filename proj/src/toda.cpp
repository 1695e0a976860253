#include "mbp/toda.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mbp {

namespace {

std::vector<double> shifted(std::vector<double> t, int idx, double dh) {
  if (static_cast<int>(t.size()) <= idx) t.resize(idx + 1, 0.0);
  t[idx] += dh;
  return t;
}

cd time_poly(const std::vector<double>& t, cd x) {
  cd acc = 0.0;
  cd pw = x;
  for (double v : t) {
    acc += v * pw;
    pw *= x;
  }
  return acc;
}

}  // namespace

TodaState evolve(const KernelRep& k, std::vector<double> t1, std::vector<double> t2, int n) {
  KernelRep deformed = toda_weights(k, t1, t2);
  TodaState s{k, std::move(t1), std::move(t2), n, gauss_borel(deformed, n),
              std::move(deformed), {}, {}, {}};
  const int p = k.p();
  s.U.resize(n, Mat::Zero(p, p));
  for (int kk = 1; kk < n; ++kk) s.U[kk] = s.fac.S1_block(kk, kk - 1);
  s.a.resize(n, Mat::Zero(p, p));
  for (int kk = 1; kk < n; ++kk)
    s.a[kk] = s.fac.H(kk) * Eigen::PartialPivLU<Mat>(s.fac.H(kk - 1)).solve(
                                Mat::Identity(p, p));
  s.b.resize(n - 1, Mat::Zero(p, p));
  for (int kk = 0; kk + 1 < n; ++kk) s.b[kk] = s.U[kk] - s.U[kk + 1];
  return s;
}

double TodaResiduals::max() const {
  double m = 0.0;
  for (double v : b_eq) m = std::max(m, v);
  for (double v : a_eq) m = std::max(m, v);
  for (double v : h_eq) m = std::max(m, v);
  return m;
}

TodaResiduals toda_residual(const TodaState& s, double h) {
  TodaResiduals out;
  TodaState ep = evolve(s.base, shifted(s.t1, 0, h), s.t2, s.n);
  TodaState em = evolve(s.base, shifted(s.t1, 0, -h), s.t2, s.n);
  TodaState zp = evolve(s.base, s.t1, shifted(s.t2, 0, h), s.n);
  TodaState zm = evolve(s.base, s.t1, shifted(s.t2, 0, -h), s.n);
  const int kmax = s.n - 2;
  for (int k = 0; k <= kmax - 1; ++k) {
    // db_k/dzeta = a_k - a_{k+1}
    Mat lhs = (zp.b[k] - zm.b[k]) / (2.0 * h);
    Mat rhs = s.a[k] - s.a[k + 1];
    out.b_eq.push_back(rel_err(lhs, rhs));
  }
  for (int k = 1; k <= kmax; ++k) {
    // da_k/deta = b_k a_k - a_k b_{k-1}
    Mat lhs = (ep.a[k] - em.a[k]) / (2.0 * h);
    Mat rhs = s.b[k] * s.a[k] - s.a[k] * s.b[k - 1];
    out.a_eq.push_back(rel_err(lhs, rhs));
  }
  for (int k = 0; k < static_cast<int>(s.b.size()); ++k) {
    Mat lhs = (ep.H(k) - em.H(k)) / (2.0 * h);
    Mat rhs = s.b[k] * s.H(k);
    out.h_eq.push_back(rel_err(lhs, rhs));
  }
  return out;
}

namespace {

void require_kp_flows(const TodaState& s) {
  for (double v : s.t2)
    if (v != 0.0) fail(Err::NonzeroT2, "KP reduction requires vanishing t2 flows");
}

Mat baker1(const TodaState& s, int k, cd z) {
  return std::exp(time_poly(s.t1, z)) * s.fac.P1(k).eval(z);
}

Mat u_at(const KernelRep& base, const std::vector<double>& t1, int n, int k) {
  TodaState s = evolve(base, t1, {}, n);
  return s.U[k];
}

}  // namespace

KPLinearResiduals kp_linear_residual(const TodaState& s, int k, double h, cd z) {
  require_kp_flows(s);
  if (k < 1 || k + 1 >= s.n) fail(Err::WindowTooSmall, "kp_linear_residual: site out of range");
  KPLinearResiduals out;
  auto psi = [&](int idx, double dh) {
    TodaState sh = evolve(s.base, shifted(s.t1, idx, dh), {}, s.n);
    return baker1(sh, k, z);
  };
  auto uu = [&](int idx, double dh) { return u_at(s.base, shifted(s.t1, idx, dh), s.n, k); };
  Mat psi0 = baker1(s, k, z);
  // d psi / d rho = d^2 psi / d eta^2 - 2 (dU/deta) psi
  Mat drho = (psi(1, h) - psi(1, -h)) / (2.0 * h);
  Mat deta2 = (psi(0, h) - 2.0 * psi0 + psi(0, -h)) / (h * h);
  Mat du = (uu(0, h) - uu(0, -h)) / (2.0 * h);
  Mat rhs = deta2 - 2.0 * du * psi0;
  out.second_order = rel_err(drho, rhs);
  // third order flow
  Mat dtheta = (psi(2, h) - psi(2, -h)) / (2.0 * h);
  Mat deta3 =
      (psi(0, 2 * h) - 2.0 * psi(0, h) + 2.0 * psi(0, -h) - psi(0, -2 * h)) / (2.0 * h * h * h);
  Mat deta1 = (psi(0, h) - psi(0, -h)) / (2.0 * h);
  Mat du2 = (uu(0, h) - 2.0 * u_at(s.base, s.t1, s.n, k) + uu(0, -h)) / (h * h);
  Mat durho = (uu(1, h) - uu(1, -h)) / (2.0 * h);
  Mat rhs3 = deta3 - 3.0 * du * deta1 - 1.5 * (du2 + durho) * psi0;
  out.third_order = rel_err(dtheta, rhs3);
  return out;
}

KPResidual kp_residual(const TodaState& s, int k, double h) {
  require_kp_flows(s);
  if (k < 1 || k + 1 >= s.n) fail(Err::WindowTooSmall, "kp_residual: site out of range");
  auto uu = [&](double de, double dr, double dt) {
    auto t = s.t1;
    if (t.size() < 3) t.resize(3, 0.0);
    t[0] += de;
    t[1] += dr;
    t[2] += dt;
    return u_at(s.base, t, s.n, k);
  };
  // g(eta) = 4 dU/dtheta + 6 (dU/deta)^2 - d^3U/deta^3, evaluated at eta shifts
  auto g_at = [&](double de) {
    Mat dtheta = (uu(de, 0, h) - uu(de, 0, -h)) / (2.0 * h);
    Mat deta = (uu(de + h, 0, 0) - uu(de - h, 0, 0)) / (2.0 * h);
    Mat deta3 = (uu(de + 2 * h, 0, 0) - 2.0 * uu(de + h, 0, 0) + 2.0 * uu(de - h, 0, 0) -
                 uu(de - 2 * h, 0, 0)) /
                (2.0 * h * h * h);
    return Mat(4.0 * dtheta + 6.0 * deta * deta - deta3);
  };
  Mat dg = (g_at(h) - g_at(-h)) / (2.0 * h);
  Mat drho2 = (uu(0, h, 0) - 2.0 * uu(0, 0, 0) + uu(0, -h, 0)) / (h * h);
  Mat due = (uu(h, 0, 0) - uu(-h, 0, 0)) / (2.0 * h);
  Mat dur = (uu(0, h, 0) - uu(0, -h, 0)) / (2.0 * h);
  Mat comm = due * dur - dur * due;
  // the rho-rho term carries the weight 3 of the standard potential form and
  // the commutator enters as 6 [U_rho, U_eta]; both pinned by second-order
  // vanishing of the residual on exact flows
  Mat res = dg - 3.0 * drho2 - 6.0 * comm;
  KPResidual out;
  double scale = std::max({dg.norm(), drho2.norm(), 1e-12});
  out.residual = res.norm() / scale;
  out.commutator_norm = comm.norm();
  return out;
}

Mat tau_ratio_1(const std::vector<Mat>& Ht, const std::vector<Mat>& Hs, int n) {
  const int p = static_cast<int>(Ht[0].rows());
  Mat acc = Mat::Identity(p, p);
  for (int m = 0; m <= n; ++m)
    acc = Mat(Ht[m] * Eigen::PartialPivLU<Mat>(Hs[m]).solve(Mat::Identity(p, p))) * acc;
  return acc;
}

Mat tau_ratio_2(const std::vector<Mat>& Ht, const std::vector<Mat>& Hs, int n) {
  const int p = static_cast<int>(Ht[0].rows());
  Mat acc = Mat::Identity(p, p);
  for (int m = 0; m <= n; ++m)
    acc = Mat(Eigen::PartialPivLU<Mat>(Ht[m]).solve(Hs[m])) * acc;
  return acc;
}

double SatoResiduals::max() const { return std::max({p1, c2, c1, p2}); }

SatoResiduals sato_check(const TodaState& s, cd z, int n) {
  if (n + 2 > s.n) fail(Err::WindowTooSmall, "sato_check: truncation too small");
  SatoResiduals out;
  const int p = s.base.p();
  Factorization f1m = gauss_borel(miwa_shift(s.deformed, 1, z, -1), n + 1);
  Factorization f1p = gauss_borel(miwa_shift(s.deformed, 1, z, +1), n + 1);
  Factorization f2m = gauss_borel(miwa_shift(s.deformed, 2, z, -1), n + 1);
  Factorization f2p = gauss_borel(miwa_shift(s.deformed, 2, z, +1), n + 1);
  std::vector<Mat> ht, h1m, h1p, h2m, h2p;
  for (int m = 0; m <= n; ++m) {
    ht.push_back(s.H(m));
    h1m.push_back(f1m.H(m));
    h1p.push_back(f1p.H(m));
    h2m.push_back(f2m.H(m));
    h2p.push_back(f2p.H(m));
  }
  // The z-powers below follow from substituting the Miwa factor
  // (1 - x/z) = -z^{-1}(x - z) into the degree-one product formulas for the
  // transformed quasitau chain; checked against hand-expanded two-node
  // instances.
  // P1^t_n(z) = z^n tau1_{n-1}(t - [z]_1, t)
  {
    Mat lhs = s.fac.P1(n).eval(z);
    Mat rhs = n == 0 ? Mat(Mat::Identity(p, p))
                     : Mat(std::pow(z, n) * tau_ratio_1(h1m, ht, n - 1));
    out.p1 = rel_err(lhs, rhs);
  }
  // (C2^t_n(z))^T (H^t_n)^{-1} = z^{-n-1} (tau1_n(t, t + [z]_1))^{-1}
  {
    Mat c2 = cauchy_transform(s.deformed, s.fac.P2(n), 2).deriv(z, 0);
    Mat lhs = c2.transpose() *
              Eigen::PartialPivLU<Mat>(s.H(n)).solve(Mat::Identity(p, p));
    // inverse of the ordered product flips order and factors
    Mat acc = Mat::Identity(p, p);
    for (int m = 0; m <= n; ++m)
      acc = acc * Mat(h1p[m] * Eigen::PartialPivLU<Mat>(ht[m]).solve(Mat::Identity(p, p)));
    Mat rhs = std::pow(z, -n - 1) * acc;
    out.c2 = rel_err(lhs, rhs);
  }
  // (H^t_n)^{-1} C1^t_n(z) = z^{-n-1} tau2_n(t, t - [z]_2)
  {
    Mat c1 = cauchy_transform(s.deformed, s.fac.P1(n), 1).deriv(z, 0);
    Mat lhs = Eigen::PartialPivLU<Mat>(s.H(n)).solve(c1);
    Mat rhs = std::pow(z, -n - 1) * tau_ratio_2(ht, h2m, n);
    out.c1 = rel_err(lhs, rhs);
  }
  // (P2^t_n(z))^T = z^n (tau2_{n-1}(t + [z]_2, t))^{-1}
  {
    Mat lhs = s.fac.P2(n).eval(z).transpose();
    Mat acc = Mat::Identity(p, p);
    for (int m = 0; m < n; ++m)
      acc = acc * Mat(Eigen::PartialPivLU<Mat>(ht[m]).solve(h2p[m]));
    Mat rhs = std::pow(z, n) * acc;
    out.p2 = rel_err(lhs, rhs);
  }
  return out;
}

namespace {

// (1/2 pi i) contour integral on |z| = r by the M-point trapezoid rule
template <typename F>
Mat circle_integral(double r, int M, int p, int q, F&& f) {
  Mat acc = Mat::Zero(p, q);
  for (int m = 0; m < M; ++m) {
    cd z = r * std::exp(cd(0.0, 2.0 * std::numbers::pi * m / M));
    acc += f(z) * z;
  }
  return acc / double(M);
}

}  // namespace

BilinearResiduals bilinear_residual(const TodaState& s, const TodaState& sp, const MatPoly& W_C,
                                    const MatPoly& W_G, int k, int l, double r1, double r2,
                                    int M, int M_tau) {
  const int p = s.base.p();
  if (r1 <= std::max(s.deformed.rx(), sp.deformed.rx()) ||
      r2 <= std::max(s.deformed.ry(), sp.deformed.ry()))
    fail(Err::RadiusTooSmall, "bilinear_residual: contour radii must exceed the supports");
  const int win = std::max(k, l) + 2;
  if (s.n < win || sp.n < win) fail(Err::WindowTooSmall, "bilinear_residual: window too small");
  KernelRep hat = geronimus_uvarov_kernel(sp.deformed, W_C, W_G);
  Factorization hf = gauss_borel(hat, win);
  RationalMatrixFn c2l = cauchy_transform(s.deformed, s.fac.P2(l), 2);
  RationalMatrixFn c1k = cauchy_transform(hat, hf.P1(k), 1);
  auto efac1 = [&](cd z) { return std::exp(time_poly(sp.t1, z) - time_poly(s.t1, z)); };
  auto efac2 = [&](cd z) { return std::exp(time_poly(sp.t2, z) - time_poly(s.t2, z)); };
  Mat lhs = circle_integral(r1, M, p, p, [&](cd z) {
    return Mat(efac1(z) * hf.P1(k).eval(z) * W_C.eval(z) * c2l.deriv(z, 0).transpose());
  });
  Mat rhs = circle_integral(r2, M, p, p, [&](cd z) {
    return Mat(c1k.deriv(z, 0) * W_G.eval(z) * s.fac.P2(l).eval(z).transpose() * efac2(z));
  });
  BilinearResiduals out;
  double scale = std::max({lhs.norm(), rhs.norm(), 1e-12});
  out.c_identity = (lhs - rhs).norm() / scale;

  // tau-ratio version via explicit Miwa-shifted factorizations
  std::vector<Mat> ht, hpt, hhat;
  for (int m = 0; m < win; ++m) {
    ht.push_back(s.H(m));
    hpt.push_back(sp.H(m));
    hhat.push_back(hf.H(m));
  }
  // integrand powers follow the corrected Miwa-shift identities (see
  // sato_check): the polynomials contribute z^k and z^l, the second kind
  // functions z^{-k-1} and z^{-l-1}
  Mat lhs_t = circle_integral(r1, M_tau, p, p, [&](cd z) {
    Factorization fm = gauss_borel(miwa_shift(hat, 1, z, -1), k + 1);
    std::vector<Mat> hm;
    for (int m = 0; m <= k; ++m) hm.push_back(fm.H(m));
    Mat t1 = k == 0 ? Mat(Mat::Identity(p, p)) : tau_ratio_1(hm, hhat, k - 1);
    Factorization fp = gauss_borel(miwa_shift(s.deformed, 1, z, +1), l + 1);
    std::vector<Mat> hp;
    for (int m = 0; m <= l; ++m) hp.push_back(fp.H(m));
    Mat acc = Mat::Identity(p, p);
    for (int m = 0; m <= l; ++m)
      acc = acc * Mat(hp[m] * Eigen::PartialPivLU<Mat>(ht[m]).solve(Mat::Identity(p, p)));
    return Mat(efac1(z) * std::pow(z, k - l - 1) * t1 * W_C.eval(z) * acc);
  });
  lhs_t = lhs_t * s.H(l);
  Mat rhs_t = circle_integral(r2, M_tau, p, p, [&](cd z) {
    Factorization fm = gauss_borel(miwa_shift(hat, 2, z, -1), k + 1);
    std::vector<Mat> hm;
    for (int m = 0; m <= k; ++m) hm.push_back(fm.H(m));
    Mat t2 = tau_ratio_2(hhat, hm, k);
    Factorization fp = gauss_borel(miwa_shift(s.deformed, 2, z, +1), l + 1);
    std::vector<Mat> hp;
    for (int m = 0; m <= l; ++m) hp.push_back(fp.H(m));
    Mat acc = Mat::Identity(p, p);
    for (int m = 0; m < l; ++m)
      acc = acc * Mat(Eigen::PartialPivLU<Mat>(ht[m]).solve(hp[m]));
    return Mat(std::pow(z, l - k - 1) * t2 * W_G.eval(z) * acc * efac2(z));
  });
  rhs_t = hf.H(k) * rhs_t;
  double scale_t = std::max({lhs_t.norm(), rhs_t.norm(), 1e-12});
  out.tau_identity = (lhs_t - rhs_t).norm() / scale_t;
  return out;
}

namespace {

// derivatives of exp(t(x)) at c, orders 0..maxorder
std::vector<cd> exp_poly_derivs(const std::vector<double>& t, cd c, int maxorder) {
  std::vector<cd> g(maxorder + 1);
  g[0] = std::exp(time_poly(t, c));
  MatPoly tpoly(1, 1);
  for (size_t j = 0; j < t.size(); ++j)
    tpoly.coeff_ref(static_cast<int>(j) + 1) = Mat::Constant(1, 1, t[j]);
  std::vector<cd> tp(maxorder + 1);
  for (int m = 1; m <= maxorder; ++m) tp[m] = tpoly.deriv_eval(c, m)(0, 0);
  for (int m = 1; m <= maxorder; ++m) {
    cd acc = 0.0;
    for (int j = 0; j < m; ++j) acc += binom(m - 1, j) * tp[j + 1] * g[m - 1 - j];
    g[m] = acc;
  }
  return g;
}

// derivatives of exp(t1(x)) f(x) at a node, with f a rational function
Mat exp_times_deriv(const std::vector<double>& t, const RationalMatrixFn& f, cd c, int order) {
  std::vector<cd> g = exp_poly_derivs(t, c, order);
  Mat out = Mat::Zero(f.rows(), f.cols());
  for (int j = 0; j <= order; ++j) out += binom(order, j) * g[j] * f.deriv(c, order - j);
  return out;
}

// time deformation of additive terms: exp(t1(x) - t2(y)) v folds the
// exponential jets into the x-functional coefficients and splits the y-side
// jet against exp(-t2)
std::vector<UvarovTerm> deform_uvarov_terms(const std::vector<UvarovTerm>& terms,
                                            const std::vector<double>& t1,
                                            const std::vector<double>& t2) {
  std::vector<UvarovTerm> out;
  std::vector<double> neg(t2);
  for (auto& v : neg) v = -v;
  for (const auto& u : terms) {
    MatFunctional beta;
    for (const auto& tt : u.beta.terms) {
      std::vector<cd> g = exp_poly_derivs(t1, tt.node, tt.order);
      for (int s = 0; s <= tt.order; ++s)
        beta.terms.push_back({tt.node, s, binom(tt.order, s) * g[tt.order - s] * tt.coef});
    }
    std::vector<cd> g = exp_poly_derivs(neg, u.y_point, u.order);
    double fact = 1.0;
    for (int s = 0; s <= u.order; ++s) {
      if (s > 0) fact *= s;
      UvarovTerm nt;
      nt.y_point = u.y_point;
      nt.order = u.order - s;
      cd scale = g[s] / fact;
      for (const auto& b : beta.terms) nt.beta.terms.push_back({b.node, b.order, scale * b.coef});
      out.push_back(std::move(nt));
    }
  }
  return out;
}

}  // namespace

double uvarov_bilinear_residual(const TodaState& s, const TodaState& sp,
                                const std::vector<UvarovTerm>& terms, int k, int l, double r1,
                                double r2, int M) {
  const int p = s.base.p();
  const int win = std::max(k, l) + 2;
  if (s.n < win || sp.n < win)
    fail(Err::WindowTooSmall, "uvarov_bilinear_residual: window too small");
  // the transformation commutes with the flows: deform u + v coherently
  KernelRep hat = uvarov_kernel(sp.deformed, deform_uvarov_terms(terms, sp.t1, sp.t2));
  Factorization hf = gauss_borel(hat, win);
  RationalMatrixFn c2l = cauchy_transform(s.deformed, s.fac.P2(l), 2);
  RationalMatrixFn c1k = cauchy_transform(hat, hf.P1(k), 1);
  auto efac1 = [&](cd z) { return std::exp(time_poly(sp.t1, z) - time_poly(s.t1, z)); };
  auto efac2 = [&](cd z) { return std::exp(time_poly(sp.t2, z) - time_poly(s.t2, z)); };
  // jets of exp(-t2(y)) P2_l at the Uvarov y-points
  Mat lhs = circle_integral(r1, M, p, p, [&](cd z) {
    Mat corr = Mat::Zero(p, p);
    RationalMatrixFn rz(MatPoly(p, p));
    rz.add_pole(z, 1, -Mat::Identity(p, p));  // I/(z-x) as a function of x
    for (const auto& term : terms) {
      // <exp(t1(x)) I/(z-x), beta> against the y-side jet of exp(-t2) P2_l
      Mat left = Mat::Zero(p, p);
      for (const auto& tt : term.beta.terms)
        left += exp_times_deriv(s.t1, rz, tt.node, tt.order) * tt.coef;
      // y-side jet of exp(-t2(y)) P2_l(y) at the term's point
      RationalMatrixFn p2fn(s.fac.P2(l));
      std::vector<double> neg_t2 = s.t2;
      for (auto& v : neg_t2) v = -v;
      double fact = 1.0;
      for (int i = 2; i <= term.order; ++i) fact *= i;
      Mat jet = exp_times_deriv(neg_t2, p2fn, term.y_point, term.order) / fact;
      corr += left * jet.transpose();
    }
    return Mat(efac1(z) *
               (hf.P1(k).eval(z) * (c2l.deriv(z, 0).transpose() + corr)));
  });
  Mat rhs = circle_integral(r2, M, p, p, [&](cd z) {
    return Mat(c1k.deriv(z, 0) * s.fac.P2(l).eval(z).transpose() * efac2(z));
  });
  double scale = std::max({lhs.norm(), rhs.norm(), 1e-12});
  return (lhs - rhs).norm() / scale;
}

double SatoWilsonResiduals::max() const { return std::max({s1_t1, s2_t1, s1_t2, s2_t2}); }

SatoWilsonResiduals sato_wilson_residual(const TodaState& s, int j, double h) {
  const int p = s.base.p();
  const int win = s.n;
  const int np = win * p;
  if (win < j + 3) fail(Err::WindowTooSmall, "sato_wilson_residual: window too small");
  TodaState e1p = evolve(s.base, shifted(s.t1, j - 1, h), s.t2, win);
  TodaState e1m = evolve(s.base, shifted(s.t1, j - 1, -h), s.t2, win);
  TodaState e2p = evolve(s.base, s.t1, shifted(s.t2, j - 1, h), win);
  TodaState e2m = evolve(s.base, s.t1, shifted(s.t2, j - 1, -h), win);
  Mat s1inv = s.fac.S1().partialPivLu().solve(Mat::Identity(np, np));
  Mat s2tinv = s.fac.U().partialPivLu().solve(Mat::Identity(np, np));
  Mat lambda_j = Mat::Zero(np, np);
  for (int m = 0; m + j < win; ++m)
    lambda_j.block(m * p, (m + j) * p, p, p) = Mat::Identity(p, p);
  Mat l1j = s.fac.S1() * lambda_j * s1inv;
  Mat l2j = s.fac.U() * lambda_j.transpose() * s2tinv;
  auto lower = [&](const Mat& m) {
    Mat out = Mat::Zero(np, np);
    for (int i = 0; i < win; ++i)
      for (int jj = 0; jj < i; ++jj) out.block(i * p, jj * p, p, p) = m.block(i * p, jj * p, p, p);
    return out;
  };
  auto upper = [&](const Mat& m) { return Mat(m - lower(m)); };
  const int rows_ok = win - j - 1;
  auto restrict_rows = [&](const Mat& m) {
    return Mat(m.topLeftCorner(rows_ok * p, rows_ok * p));
  };
  SatoWilsonResiduals out;
  {
    Mat ds1 = (e1p.fac.S1() - e1m.fac.S1()) / (2.0 * h) * s1inv;
    out.s1_t1 = rel_err(restrict_rows(ds1), restrict_rows(Mat(-lower(l1j))));
    Mat ds2 = (e1p.fac.U() - e1m.fac.U()) / (2.0 * h) * s2tinv;
    out.s2_t1 = rel_err(restrict_rows(ds2), restrict_rows(upper(l1j)));
  }
  {
    Mat ds1 = (e2p.fac.S1() - e2m.fac.S1()) / (2.0 * h) * s1inv;
    out.s1_t2 = rel_err(restrict_rows(ds1), restrict_rows(lower(l2j)));
    Mat ds2 = (e2p.fac.U() - e2m.fac.U()) / (2.0 * h) * s2tinv;
    out.s2_t2 = rel_err(restrict_rows(ds2), restrict_rows(Mat(-upper(l2j))));
  }
  return out;
}

}  // namespace mbp
