#pragma once

#include <vector>

#include "mbp/spectral.hpp"

namespace mbp {

/// Matrix rational function: polynomial part plus finite pole terms
/// coef / (z - z0)^order, with exact derivatives of every order.
class RationalMatrixFn : public MatrixFn {
 public:
  struct PoleTerm {
    cd z0;
    int order;  // >= 1
    Mat coef;
  };

  RationalMatrixFn() : poly_(0, 0) {}
  explicit RationalMatrixFn(MatPoly poly) : poly_(std::move(poly)) {}
  RationalMatrixFn(MatPoly poly, std::vector<PoleTerm> poles);

  int rows() const override { return poly_.rows(); }
  int cols() const override { return poly_.cols(); }
  Mat deriv(cd z, int order) const override;

  const MatPoly& poly() const { return poly_; }
  const std::vector<PoleTerm>& poles() const { return poles_; }

  void add_pole(cd z0, int order, const Mat& coef);
  void merge_poles(double drop_tol = 0.0);  // combine equal (z0, order) terms

  /// Right evaluation at a matrix argument: poly part sum c_k a^k plus
  /// coef (a - z0 I)^{-order}, valid when z0 is off the spectrum of a.
  Mat eval_at_matrix(const Mat& a) const;

  RationalMatrixFn& operator+=(const RationalMatrixFn& o);
  RationalMatrixFn& operator*=(cd s);
  friend RationalMatrixFn operator*(const Mat& a, const RationalMatrixFn& f);

 private:
  MatPoly poly_;
  std::vector<PoleTerm> poles_;
};

/// 1/(z-x)-type scalar building block: derivative of (z - z0)^(-r).
cd inv_power_deriv(cd z, cd z0, int r, int order);

}  // namespace mbp
