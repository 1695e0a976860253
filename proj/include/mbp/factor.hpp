#pragma once

#include "mbp/kernels.hpp"

namespace mbp {

/// Block Gauss-Borel factorization of a truncated Gram matrix:
/// G = S1^{-1} H S2^{-T} with block lower unitriangular S1, S2 and block
/// diagonal H.
class Factorization {
 public:
  Factorization(Mat g, int p);

  int p() const { return p_; }
  int n() const { return n_; }

  const Mat& S1() const { return s1_; }
  const Mat& S2() const { return s2_; }
  Mat S1_block(int k, int l) const { return s1_.block(k * p_, l * p_, p_, p_); }
  Mat S2_block(int k, int l) const { return s2_.block(k * p_, l * p_, p_, p_); }
  const Mat& H(int k) const { return h_[k]; }
  const std::vector<Mat>& H() const { return h_; }
  /// U factor of the block LU split, H S2^{-T}; upper block triangular.
  const Mat& U() const { return u_; }
  const Mat& G() const { return g_; }

  /// Monic biorthogonal polynomials from the factor rows.
  MatPoly P1(int k) const;
  MatPoly P2(int k) const;

  /// Relative Frobenius reconstruction residual ||S1^{-1} H S2^{-T} - G||.
  double reconstruction_residual() const;

 private:
  int p_, n_;
  Mat g_, s1_, s2_, u_;
  std::vector<Mat> h_;
};

/// Factorizes the leading n-block truncation of the kernel's Gram matrix.
Factorization gauss_borel(const KernelRep& k, int n);
Factorization gauss_borel(const Mat& g, int p);

/// Lower-right Schur complement D - C A^{-1} B.
Mat theta_star(const Mat& a, const Mat& b, const Mat& c, const Mat& d);
/// Same on a square block matrix partitioned at split (row/column count of A).
Mat theta_star(const Mat& m, int split);

/// Christoffel-Darboux kernel K_n(x,y) = sum_{k<=n} P2_k(y)^T H_k^{-1} P1_k(x).
Mat cd_kernel(const Factorization& f, int n, cd x, cd y);

/// K_n as a polynomial in x whose p x p coefficients are evaluated at fixed y.
MatPoly cd_kernel_in_x(const Factorization& f, int n, cd y);

/// Second kind functions of both families against the source kernel.
struct SecondKind {
  std::vector<std::shared_ptr<MatrixFn>> C1;
  std::vector<RationalMatrixFn> C2;  // discrete kernels only
};
SecondKind second_kind(const Factorization& f, const KernelRep& k, bool want_c2 = false);

/// Mixed kernel K^{(pc)}_n(x,y) = sum P2_k(y)^T H_k^{-1} C1_k(x).
Mat mixed_cd_kernel(const Factorization& f, const SecondKind& sk, int n, cd x, cd y);

/// Jacobi matrices: truncations of S_i Lambda S_i^{-1}.  Entries on the last
/// block row are affected by the truncation; tests use interior rows.
struct JacobiMatrices {
  Mat J1, J2;
};
JacobiMatrices jacobi_matrices(const Factorization& f);

}  // namespace mbp
