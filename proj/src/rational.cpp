#include "mbp/rational.hpp"

#include <algorithm>

namespace mbp {

cd inv_power_deriv(cd z, cd z0, int r, int order) {
  // d^m/dz^m (z-z0)^(-r) = (-1)^m r(r+1)...(r+m-1) (z-z0)^(-r-m)
  double c = 1.0;
  for (int i = 0; i < order; ++i) c *= -(r + i);
  return c * std::pow(z - z0, -double(r + order));
}

RationalMatrixFn::RationalMatrixFn(MatPoly poly, std::vector<PoleTerm> poles)
    : poly_(std::move(poly)), poles_(std::move(poles)) {
  for (const auto& t : poles_)
    if (t.coef.rows() != poly_.rows() || t.coef.cols() != poly_.cols())
      fail(Err::DimensionMismatch, "RationalMatrixFn: pole coefficient shape");
}

Mat RationalMatrixFn::deriv(cd z, int order) const {
  Mat out = poly_.deriv_eval(z, order);
  for (const auto& t : poles_) out += t.coef * inv_power_deriv(z, t.z0, t.order, order);
  return out;
}

void RationalMatrixFn::add_pole(cd z0, int order, const Mat& coef) {
  if (coef.rows() != poly_.rows() || coef.cols() != poly_.cols())
    fail(Err::DimensionMismatch, "RationalMatrixFn::add_pole shape");
  poles_.push_back({z0, order, coef});
}

void RationalMatrixFn::merge_poles(double drop_tol) {
  std::vector<PoleTerm> merged;
  for (const auto& t : poles_) {
    bool found = false;
    for (auto& m : merged)
      if (m.order == t.order && std::abs(m.z0 - t.z0) == 0.0) {
        m.coef += t.coef;
        found = true;
        break;
      }
    if (!found) merged.push_back(t);
  }
  if (drop_tol > 0.0)
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [&](const PoleTerm& t) { return t.coef.norm() <= drop_tol; }),
                 merged.end());
  poles_ = std::move(merged);
}

Mat RationalMatrixFn::eval_at_matrix(const Mat& a) const {
  Mat out = poly_.is_zero() ? Mat::Zero(a.rows(), a.cols()) : poly_.eval_at_matrix(a);
  const Mat id = Mat::Identity(a.rows(), a.cols());
  for (const auto& t : poles_) {
    Mat base = a - t.z0 * id;
    Mat inv = base.partialPivLu().solve(id);
    Mat pw = inv;
    for (int i = 1; i < t.order; ++i) pw = pw * inv;
    out += t.coef * pw;
  }
  return out;
}

RationalMatrixFn& RationalMatrixFn::operator+=(const RationalMatrixFn& o) {
  poly_ += o.poly_;
  for (const auto& t : o.poles_) poles_.push_back(t);
  return *this;
}

RationalMatrixFn& RationalMatrixFn::operator*=(cd s) {
  poly_ *= s;
  for (auto& t : poles_) t.coef *= s;
  return *this;
}

RationalMatrixFn operator*(const Mat& a, const RationalMatrixFn& f) {
  RationalMatrixFn out(a * f.poly_);
  for (const auto& t : f.poles_) out.add_pole(t.z0, t.order, a * t.coef);
  return out;
}

}  // namespace mbp
