#pragma once

#include <vector>

#include "mbp/types.hpp"

namespace mbp {

/// Matrix polynomial with complex coefficients, coefficient index = degree.
/// Coefficients may be rectangular; vector (p x 1) and covector (1 x p)
/// polynomials reuse the same representation.
class MatPoly {
 public:
  MatPoly() : rows_(0), cols_(0) {}
  MatPoly(int rows, int cols);                 // zero polynomial
  explicit MatPoly(std::vector<Mat> coeffs);   // trims trailing zeros

  static MatPoly identity(int p);
  static MatPoly monomial(int p, int degree);  // I_p x^degree
  static MatPoly scalar(const std::vector<cd>& coeffs);
  static MatPoly constant(const Mat& a);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int p() const;                               // square size
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const;
  bool is_square() const { return rows_ == cols_; }
  bool monic(double tau = tol::id) const;
  double norm() const;                         // max coefficient Frobenius norm

  const Mat& coeff(int k) const;               // zero matrix beyond the degree
  Mat& coeff_ref(int k);                       // grows on demand
  const std::vector<Mat>& coeffs() const { return c_; }
  void trim(double tau = 0.0);

  Mat eval(cd z) const;                        // Horner
  Mat deriv_eval(cd z, int order) const;       // exact derivative
  Mat eval_at_matrix(const Mat& a) const;      // right evaluation sum_k c_k a^k
  MatPoly derivative() const;
  MatPoly transpose() const;
  cd scalar_eval(cd z) const;                  // 1x1 convenience

  MatPoly operator-() const;
  MatPoly& operator+=(const MatPoly& o);
  MatPoly& operator-=(const MatPoly& o);
  MatPoly& operator*=(cd s);

  friend MatPoly operator+(MatPoly a, const MatPoly& b) { return a += b; }
  friend MatPoly operator-(MatPoly a, const MatPoly& b) { return a -= b; }
  friend MatPoly operator*(const MatPoly& a, const MatPoly& b);
  friend MatPoly operator*(const Mat& a, const MatPoly& b);
  friend MatPoly operator*(const MatPoly& a, const Mat& b);
  friend MatPoly operator*(cd s, MatPoly a) { return a *= s; }

 private:
  int rows_, cols_;
  std::vector<Mat> c_;
  mutable Mat zero_;
};

/// p x p evaluation of eval(P, z); free-function spellings of the members.
Mat eval(const MatPoly& P, cd z);
Mat eval_at_matrix(const MatPoly& P, const Mat& a);

struct AdjugateDet {
  MatPoly adj;  // p x p, degree <= N(p-1)
  MatPoly det;  // 1 x 1, degree <= Np
};

/// Adjugate and determinant by evaluation at scaled roots of unity and
/// coefficient interpolation; W adj = adj W = det I as polynomial identity.
AdjugateDet adjugate_det(const MatPoly& W);

struct EigenvalueCluster {
  cd value;
  int multiplicity;
};

/// Eigenvalues of the block companion linearization, clustered within
/// tol::clust.  Accepts a nonsingular leading coefficient (normalized
/// internally); throws NonMonic otherwise, ClusterAmbiguous when two
/// clusters are separated by less than ten cluster radii.
std::vector<EigenvalueCluster> spectrum(const MatPoly& W);
std::vector<EigenvalueCluster> spectrum(const MatPoly& W, double radius_rel,
                                        double guard_factor);
std::vector<EigenvalueCluster> cluster_points(std::vector<cd> ev, double radius,
                                              double guard_factor);

/// Unique monic W with A_0 X + ... + A_{N-1} X J^{N-1} = -X J^N.
MatPoly monic_from_jordan_pair(const Mat& X, const Mat& J);

/// Y solving [X; XJ; ...; XJ^{N-1}] Y = [0; ...; 0; I_p].
Mat jordan_triple_Y(const Mat& X, const Mat& J);

/// Exact right division F = Q W + R by a monic (or nonsingular-leading) W;
/// throws NonzeroDivisionRemainder when ||R|| > tau * scale.
MatPoly divide_right_exact(const MatPoly& F, const MatPoly& W,
                           double tau = tol::fac);

}  // namespace mbp
