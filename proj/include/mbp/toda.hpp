#pragma once

#include "mbp/transforms.hpp"

namespace mbp {

/// Discrete kernel evolved by exp(t1(x) - t2(y)) with its factorization and
/// the first-subdiagonal data feeding the lattice equations.
struct TodaState {
  KernelRep base;
  std::vector<double> t1, t2;
  int n = 0;
  Factorization fac;
  KernelRep deformed;

  std::vector<Mat> U;  // U_0 = 0, U_k = (S1)_{k,k-1}
  std::vector<Mat> a;  // a_0 = 0, a_k = H_k H_{k-1}^{-1}
  std::vector<Mat> b;  // b_k = U_k - U_{k+1}

  const Mat& H(int k) const { return fac.H(k); }
};

TodaState evolve(const KernelRep& k, std::vector<double> t1, std::vector<double> t2, int n);

/// Central-difference residuals of the first-order lattice system
/// db_k/dzeta = a_k - a_{k+1} and da_k/deta = b_k a_k - a_k b_{k-1}.
struct TodaResiduals {
  std::vector<double> b_eq;
  std::vector<double> a_eq;
  std::vector<double> h_eq;  // dH_k/deta = b_k H_k
  double max() const;
};
TodaResiduals toda_residual(const TodaState& s, double h);

/// Residuals of the second/third order linear wave equations for the Baker
/// component at lattice site k, evaluated at z.
struct KPLinearResiduals {
  double second_order = 0.0;
  double third_order = 0.0;
};
KPLinearResiduals kp_linear_residual(const TodaState& s, int k, double h, cd z);

/// Residual of the noncommutative KP equation at site k; the commutator
/// norm is reported separately (it vanishes identically for p = 1).
struct KPResidual {
  double residual = 0.0;
  double commutator_norm = 0.0;
};
KPResidual kp_residual(const TodaState& s, int k, double h);

/// tau-ratio matrices: ordered products of H-quotients between time points.
Mat tau_ratio_1(const std::vector<Mat>& Ht, const std::vector<Mat>& Hs, int n);
Mat tau_ratio_2(const std::vector<Mat>& Ht, const std::vector<Mat>& Hs, int n);

/// Residuals of the four Miwa-shift identities relating the families and
/// second kind functions to tau-ratio matrices.
struct SatoResiduals {
  double p1 = 0.0, c2 = 0.0, c1 = 0.0, p2 = 0.0;
  double max() const;
};
SatoResiduals sato_check(const TodaState& s, cd z, int n);

/// Contour-quadrature residuals of the Geronimus-Uvarov bilinear identities
/// for the polynomial/second-kind pair and the tau-ratio version.
struct BilinearResiduals {
  double c_identity = 0.0;
  double tau_identity = 0.0;
};
BilinearResiduals bilinear_residual(const TodaState& s, const TodaState& sp, const MatPoly& W_C,
                                    const MatPoly& W_G, int k, int l, double r1, double r2,
                                    int M, int M_tau = 160);

/// Uvarov variant of the bilinear identity.
double uvarov_bilinear_residual(const TodaState& s, const TodaState& sp,
                                const std::vector<UvarovTerm>& terms, int k, int l, double r1,
                                double r2, int M);

/// Finite-difference residuals of the factor evolution equations for flow
/// t_{i,j} on interior rows.
struct SatoWilsonResiduals {
  double s1_t1 = 0.0, s2_t1 = 0.0, s1_t2 = 0.0, s2_t2 = 0.0;
  double max() const;
};
SatoWilsonResiduals sato_wilson_residual(const TodaState& s, int j, double h);

}  // namespace mbp
