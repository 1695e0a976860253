#include "mbp/factor.hpp"

namespace mbp {

Factorization::Factorization(Mat g, int p) : p_(p), g_(std::move(g)) {
  const int np = static_cast<int>(g_.rows());
  if (g_.cols() != np || np % p != 0)
    fail(Err::DimensionMismatch, "Factorization: square block matrix expected");
  n_ = np / p;
  // block Doolittle, no pivoting: G = L U with unitriangular L, U carrying H
  Mat l = Mat::Identity(np, np);
  Mat u = g_;
  const double block_scale = std::max(g_.norm() / n_, 1e-300);
  for (int k = 0; k < n_; ++k) {
    Mat hk = u.block(k * p, k * p, p, p);
    // a pivot block that is tiny relative to the Gram scale is treated as a
    // quasidefiniteness failure even when its own rcond looks fine (p = 1)
    Eigen::JacobiSVD<Mat> svd(hk);
    double smin = svd.singularValues()(p - 1);
    if (rcond(hk) < tol::sing || smin <= 1e-13 * block_scale)
      fail(Err::QuasidefinitenessFailure,
           "gauss_borel: singular leading truncation of the Gram matrix", k + 1);
    Eigen::PartialPivLU<Mat> lu(hk.transpose());
    for (int i = k + 1; i < n_; ++i) {
      // L_{ik} solves L_{ik} H_k = U_{ik}
      Mat lik = lu.solve(u.block(i * p, k * p, p, p).transpose()).transpose();
      l.block(i * p, k * p, p, p) = lik;
      u.block(i * p, k * p, p, p).setZero();
      u.block(i * p, (k + 1) * p, p, np - (k + 1) * p) -=
          lik * u.block(k * p, (k + 1) * p, p, np - (k + 1) * p);
    }
  }
  u_ = u;
  h_.reserve(n_);
  for (int k = 0; k < n_; ++k) h_.push_back(u.block(k * p, k * p, p, p));
  // S1 = L^{-1} by unitriangular forward substitution
  s1_ = Mat::Identity(np, np);
  for (int j = 0; j < n_; ++j)
    for (int i = j + 1; i < n_; ++i) {
      Mat acc = Mat::Zero(p, p);
      for (int m = j; m < i; ++m)
        acc += l.block(i * p, m * p, p, p) * s1_.block(m * p, j * p, p, p);
      s1_.block(i * p, j * p, p, p) = -acc;
    }
  // S2^T = U^{-1} H: back substitution, upper unitriangular result
  Mat s2t = Mat::Zero(np, np);
  for (int j = 0; j < n_; ++j) {
    Mat rhs = Mat::Zero(np, p);
    rhs.block(j * p, 0, p, p) = h_[j];
    for (int i = j; i >= 0; --i) {
      Mat acc = rhs.block(i * p, 0, p, p);
      for (int m = i + 1; m <= j; ++m)
        acc -= u.block(i * p, m * p, p, p) * s2t.block(m * p, j * p, p, p);
      s2t.block(i * p, j * p, p, p) =
          Eigen::PartialPivLU<Mat>(h_[i]).solve(acc);
    }
  }
  s2_ = s2t.transpose();
}

Factorization gauss_borel(const KernelRep& k, int n) {
  return Factorization(k.gram(n), k.p());
}

Factorization gauss_borel(const Mat& g, int p) { return Factorization(g, p); }

MatPoly Factorization::P1(int k) const {
  std::vector<Mat> c;
  for (int l = 0; l <= k; ++l) c.push_back(S1_block(k, l));
  return MatPoly(std::move(c));
}

MatPoly Factorization::P2(int k) const {
  std::vector<Mat> c;
  for (int l = 0; l <= k; ++l) c.push_back(S2_block(k, l));
  return MatPoly(std::move(c));
}

double Factorization::reconstruction_residual() const {
  const int np = n_ * p_;
  Mat hd = Mat::Zero(np, np);
  for (int k = 0; k < n_; ++k) hd.block(k * p_, k * p_, p_, p_) = h_[k];
  Mat lhs = s1_.partialPivLu().solve(hd * s2_.transpose().partialPivLu().solve(
                                              Mat::Identity(np, np)));
  return (lhs - g_).norm() / std::max(g_.norm(), 1e-300);
}

Mat theta_star(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
  if (a.rows() != a.cols()) fail(Err::DimensionMismatch, "theta_star: A must be square");
  if (rcond(a) < tol::sing)
    fail(Err::SingularLeadingBlock, "theta_star: singular upper-left block");
  return d - c * a.partialPivLu().solve(b);
}

Mat theta_star(const Mat& m, int split) {
  return theta_star(m.topLeftCorner(split, split), m.topRightCorner(split, m.cols() - split),
                    m.bottomLeftCorner(m.rows() - split, split),
                    m.bottomRightCorner(m.rows() - split, m.cols() - split));
}

Mat cd_kernel(const Factorization& f, int n, cd x, cd y) {
  const int p = f.p();
  if (n >= f.n())
    fail(Err::WindowTooSmall, "cd_kernel: order exceeds the truncation");
  Mat out = Mat::Zero(p, p);
  for (int k = 0; k <= n; ++k)
    out += f.P2(k).eval(y).transpose() *
           Eigen::PartialPivLU<Mat>(f.H(k)).solve(f.P1(k).eval(x));
  return out;
}

MatPoly cd_kernel_in_x(const Factorization& f, int n, cd y) {
  const int p = f.p();
  MatPoly out(p, p);
  for (int k = 0; k <= n; ++k) {
    Mat lead = f.P2(k).eval(y).transpose() *
               Eigen::PartialPivLU<Mat>(f.H(k)).solve(Mat::Identity(p, p));
    out += MatPoly::constant(lead) * f.P1(k);
  }
  return out;
}

SecondKind second_kind(const Factorization& f, const KernelRep& k, bool want_c2) {
  SecondKind out;
  for (int m = 0; m < f.n(); ++m) {
    out.C1.push_back(cauchy_fn(k, f.P1(m), 1));
    if (want_c2) out.C2.push_back(cauchy_transform(k, f.P2(m), 2));
  }
  return out;
}

Mat mixed_cd_kernel(const Factorization& f, const SecondKind& sk, int n, cd x, cd y) {
  const int p = f.p();
  Mat out = Mat::Zero(p, p);
  for (int k = 0; k <= n; ++k)
    out += f.P2(k).eval(y).transpose() *
           Eigen::PartialPivLU<Mat>(f.H(k)).solve(sk.C1[k]->deriv(x, 0));
  return out;
}

JacobiMatrices jacobi_matrices(const Factorization& f) {
  const int p = f.p();
  const int np = f.n() * p;
  Mat lambda = Mat::Zero(np, np);
  for (int k = 0; k + 1 < f.n(); ++k)
    lambda.block(k * p, (k + 1) * p, p, p) = Mat::Identity(p, p);
  JacobiMatrices jm;
  jm.J1 = f.S1() * lambda * f.S1().partialPivLu().solve(Mat::Identity(np, np));
  jm.J2 = f.S2() * lambda * f.S2().partialPivLu().solve(Mat::Identity(np, np));
  return jm;
}

}  // namespace mbp
