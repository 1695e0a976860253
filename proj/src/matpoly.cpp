#include "mbp/matpoly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mbp {

MatPoly::MatPoly(int rows, int cols) : rows_(rows), cols_(cols) {
  c_.push_back(Mat::Zero(rows, cols));
}

MatPoly::MatPoly(std::vector<Mat> coeffs) {
  if (coeffs.empty()) fail(Err::DimensionMismatch, "MatPoly: empty coefficient list");
  rows_ = static_cast<int>(coeffs.front().rows());
  cols_ = static_cast<int>(coeffs.front().cols());
  for (const auto& a : coeffs)
    if (a.rows() != rows_ || a.cols() != cols_)
      fail(Err::DimensionMismatch, "MatPoly: ragged coefficient list");
  c_ = std::move(coeffs);
  trim();
}

MatPoly MatPoly::identity(int p) {
  MatPoly r(p, p);
  r.c_[0] = Mat::Identity(p, p);
  return r;
}

MatPoly MatPoly::monomial(int p, int degree) {
  MatPoly r(p, p);
  r.coeff_ref(degree) = Mat::Identity(p, p);
  return r;
}

MatPoly MatPoly::scalar(const std::vector<cd>& coeffs) {
  std::vector<Mat> c;
  for (cd v : coeffs) c.push_back(Mat::Constant(1, 1, v));
  return MatPoly(std::move(c));
}

MatPoly MatPoly::constant(const Mat& a) {
  return MatPoly(std::vector<Mat>{a});
}

int MatPoly::p() const {
  if (rows_ != cols_) fail(Err::DimensionMismatch, "MatPoly: square coefficients expected");
  return rows_;
}

bool MatPoly::is_zero() const {
  for (const auto& a : c_)
    if (a.norm() != 0.0) return false;
  return true;
}

bool MatPoly::monic(double tau) const {
  if (rows_ != cols_) return false;
  return (c_.back() - Mat::Identity(rows_, cols_)).norm() <= tau * std::sqrt(double(rows_));
}

double MatPoly::norm() const {
  double m = 0.0;
  for (const auto& a : c_) m = std::max(m, a.norm());
  return m;
}

const Mat& MatPoly::coeff(int k) const {
  if (k >= 0 && k < static_cast<int>(c_.size())) return c_[k];
  zero_ = Mat::Zero(rows_, cols_);
  return zero_;
}

Mat& MatPoly::coeff_ref(int k) {
  while (static_cast<int>(c_.size()) <= k) c_.push_back(Mat::Zero(rows_, cols_));
  return c_[k];
}

void MatPoly::trim(double tau) {
  while (c_.size() > 1 && c_.back().norm() <= tau) c_.pop_back();
}

Mat MatPoly::eval(cd z) const {
  Mat acc = c_.back();
  for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k) acc = acc * z + c_[k];
  return acc;
}

Mat MatPoly::deriv_eval(cd z, int order) const {
  if (order == 0) return eval(z);
  Mat acc = Mat::Zero(rows_, cols_);
  for (int k = degree(); k >= order; --k) acc = acc * z + falling(k, order) * c_[k];
  return acc;
}

Mat MatPoly::eval_at_matrix(const Mat& a) const {
  if (rows_ != cols_) fail(Err::DimensionMismatch, "eval_at_matrix: square polynomial expected");
  if (a.rows() != a.cols()) fail(Err::DimensionMismatch, "eval_at_matrix: square argument expected");
  if (a.rows() != cols_) fail(Err::DimensionMismatch, "eval_at_matrix: size mismatch");
  // right evaluation: powers of the argument multiply the coefficients from the right
  Mat acc = c_.back();
  for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k) acc = acc * a + c_[k];
  return acc;
}

MatPoly MatPoly::derivative() const {
  if (degree() == 0) return MatPoly(rows_, cols_);
  std::vector<Mat> d;
  for (int k = 1; k <= degree(); ++k) d.push_back(double(k) * c_[k]);
  return MatPoly(std::move(d));
}

MatPoly MatPoly::transpose() const {
  std::vector<Mat> d;
  for (const auto& a : c_) d.push_back(a.transpose());
  return MatPoly(std::move(d));
}

cd MatPoly::scalar_eval(cd z) const {
  if (rows_ != 1 || cols_ != 1) fail(Err::DimensionMismatch, "scalar_eval: 1x1 expected");
  return eval(z)(0, 0);
}

MatPoly MatPoly::operator-() const {
  MatPoly r = *this;
  for (auto& a : r.c_) a = -a;
  return r;
}

MatPoly& MatPoly::operator+=(const MatPoly& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) fail(Err::DimensionMismatch, "MatPoly +=");
  for (int k = 0; k <= o.degree(); ++k) coeff_ref(k) += o.c_[k];
  trim();
  return *this;
}

MatPoly& MatPoly::operator-=(const MatPoly& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) fail(Err::DimensionMismatch, "MatPoly -=");
  for (int k = 0; k <= o.degree(); ++k) coeff_ref(k) -= o.c_[k];
  trim();
  return *this;
}

MatPoly& MatPoly::operator*=(cd s) {
  for (auto& a : c_) a *= s;
  return *this;
}

MatPoly operator*(const MatPoly& a, const MatPoly& b) {
  if (a.cols() != b.rows()) fail(Err::DimensionMismatch, "MatPoly *");
  std::vector<Mat> c(a.degree() + b.degree() + 1, Mat::Zero(a.rows(), b.cols()));
  for (int i = 0; i <= a.degree(); ++i)
    for (int j = 0; j <= b.degree(); ++j) c[i + j] += a.c_[i] * b.c_[j];
  return MatPoly(std::move(c));
}

MatPoly operator*(const Mat& a, const MatPoly& b) {
  std::vector<Mat> c;
  for (const auto& m : b.c_) c.push_back(a * m);
  return MatPoly(std::move(c));
}

MatPoly operator*(const MatPoly& a, const Mat& b) {
  std::vector<Mat> c;
  for (const auto& m : a.c_) c.push_back(m * b);
  return MatPoly(std::move(c));
}

Mat eval(const MatPoly& P, cd z) { return P.eval(z); }
Mat eval_at_matrix(const MatPoly& P, const Mat& a) { return P.eval_at_matrix(a); }

namespace {

// Interpolates coefficients 0..deg from samples at radius*exp(2 pi i k / M),
// M = deg+1; the Vandermonde of roots of unity is unitary up to scaling.
std::vector<Mat> fit_on_circle(const std::vector<Mat>& samples, double radius, int deg) {
  const int m = static_cast<int>(samples.size());
  const int rows = static_cast<int>(samples[0].rows());
  const int cols = static_cast<int>(samples[0].cols());
  std::vector<Mat> out(deg + 1, Mat::Zero(rows, cols));
  const cd i2pi(0.0, 2.0 * std::numbers::pi);
  for (int k = 0; k <= deg; ++k) {
    Mat acc = Mat::Zero(rows, cols);
    for (int j = 0; j < m; ++j) {
      cd w = std::exp(-i2pi * double(j * k) / double(m));
      acc += w * samples[j];
    }
    out[k] = acc / (double(m) * std::pow(radius, k));
  }
  return out;
}

double spectral_radius_estimate(const MatPoly& W) {
  // crude bound: 1 + max coefficient scale relative to the leading one
  double lead = W.coeffs().back().norm();
  double m = 0.0;
  for (int k = 0; k < W.degree(); ++k) m = std::max(m, W.coeff(k).norm());
  if (lead <= 0.0) return 1.0 + m;
  return 1.0 + m / lead;
}

}  // namespace

AdjugateDet adjugate_det(const MatPoly& W) {
  const int p = W.p();
  const int N = W.degree();
  if (p == 1) {
    AdjugateDet r{MatPoly::identity(1), W};
    return r;
  }
  const int det_deg = N * p;
  const int adj_deg = N * (p - 1);
  const int m = det_deg + 1;
  const double radius = 1.0 + spectral_radius_estimate(W);
  const cd i2pi(0.0, 2.0 * std::numbers::pi);
  std::vector<Mat> det_samples(m), adj_samples(m);
  for (int j = 0; j < m; ++j) {
    cd z = radius * std::exp(i2pi * double(j) / double(m));
    Mat wz = W.eval(z);
    Eigen::FullPivLU<Mat> lu(wz);
    cd det = lu.determinant();
    det_samples[j] = Mat::Constant(1, 1, det);
    // adj = det * inverse when invertible; sample radius keeps us off the spectrum
    adj_samples[j] = det * lu.inverse();
  }
  AdjugateDet r;
  r.det = MatPoly(fit_on_circle(det_samples, radius, det_deg));
  std::vector<Mat> adj_c = fit_on_circle(adj_samples, radius, adj_deg);
  r.adj = MatPoly(std::move(adj_c));
  r.det.trim(1e-11 * std::max(1.0, r.det.norm()));
  r.adj.trim(1e-11 * std::max(1.0, r.adj.norm()));
  return r;
}

std::vector<EigenvalueCluster> cluster_points(std::vector<cd> ev, double radius,
                                              double guard_factor) {
  std::sort(ev.begin(), ev.end(), [](cd a, cd b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<EigenvalueCluster> out;
  std::vector<cd> cluster;
  auto flush = [&]() {
    if (cluster.empty()) return;
    cd mean = 0.0;
    for (cd v : cluster) mean += v;
    mean /= double(cluster.size());
    out.push_back({mean, static_cast<int>(cluster.size())});
    cluster.clear();
  };
  for (cd v : ev) {
    if (!cluster.empty()) {
      cd mean = 0.0;
      for (cd w : cluster) mean += w;
      mean /= double(cluster.size());
      if (std::abs(v - mean) > radius) flush();
    }
    cluster.push_back(v);
  }
  flush();
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = i + 1; j < out.size(); ++j) {
      double d = std::abs(out[i].value - out[j].value);
      if (d < guard_factor * radius)
        fail(Err::ClusterAmbiguous, "spectrum: clusters closer than the separation guard");
    }
  return out;
}

std::vector<EigenvalueCluster> spectrum(const MatPoly& W, double radius_rel,
                                        double guard_factor) {
  const int p = W.p();
  const int N = W.degree();
  if (N == 0) {
    if (rcond(W.coeff(0)) < tol::sing)
      fail(Err::NonMonic, "spectrum: singular constant polynomial");
    return {};
  }
  MatPoly Wm = W;
  if (!W.monic()) {
    const Mat& lead = W.coeff(N);
    if (rcond(lead) < tol::sing)
      fail(Err::NonMonic, "spectrum: singular leading coefficient");
    Eigen::PartialPivLU<Mat> lu(lead);
    std::vector<Mat> c;
    for (int k = 0; k <= N; ++k) c.push_back(lu.solve(W.coeff(k)));
    Wm = MatPoly(std::move(c));
  }
  // block companion linearization
  const int n = N * p;
  Mat comp = Mat::Zero(n, n);
  for (int k = 0; k + 1 < N; ++k)
    comp.block(k * p, (k + 1) * p, p, p) = Mat::Identity(p, p);
  for (int k = 0; k < N; ++k)
    comp.block((N - 1) * p, k * p, p, p) = -Wm.coeff(k);
  Eigen::ComplexEigenSolver<Mat> es(comp, false);
  std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
  double scale = 1.0;
  for (cd v : ev) scale = std::max(scale, std::abs(v));
  return cluster_points(std::move(ev), radius_rel * scale, guard_factor);
}

std::vector<EigenvalueCluster> spectrum(const MatPoly& W) {
  return spectrum(W, tol::clust, 10.0);
}

MatPoly monic_from_jordan_pair(const Mat& X, const Mat& J) {
  const int p = static_cast<int>(X.rows());
  const int np = static_cast<int>(X.cols());
  if (J.rows() != np || J.cols() != np || np % p != 0)
    fail(Err::DimensionMismatch, "monic_from_jordan_pair: incompatible sizes");
  const int N = np / p;
  Mat Q(np, np);
  Mat row = X;
  for (int k = 0; k < N; ++k) {
    Q.block(k * p, 0, p, np) = row;
    row = row * J;
  }
  if (rcond(Q) < tol::sing)
    fail(Err::SingularQ, "monic_from_jordan_pair: stacked pair matrix is singular");
  // [A_0, ..., A_{N-1}] Q = -X J^N, solved through Q^T
  Mat rhs = -row;  // row == X J^N here
  Mat coeffs_t = Q.transpose().partialPivLu().solve(rhs.transpose());
  Mat coeffs = coeffs_t.transpose();
  std::vector<Mat> c;
  for (int k = 0; k < N; ++k) c.push_back(coeffs.block(0, k * p, p, p));
  c.push_back(Mat::Identity(p, p));
  return MatPoly(std::move(c));
}

Mat jordan_triple_Y(const Mat& X, const Mat& J) {
  const int p = static_cast<int>(X.rows());
  const int np = static_cast<int>(X.cols());
  const int N = np / p;
  Mat Q(np, np);
  Mat row = X;
  for (int k = 0; k < N; ++k) {
    Q.block(k * p, 0, p, np) = row;
    row = row * J;
  }
  if (rcond(Q) < tol::sing) fail(Err::SingularQ, "jordan_triple_Y: singular stacked pair");
  Mat rhs = Mat::Zero(np, p);
  rhs.block((N - 1) * p, 0, p, p) = Mat::Identity(p, p);
  return Q.partialPivLu().solve(rhs);
}

MatPoly divide_right_exact(const MatPoly& F, const MatPoly& W, double tau) {
  const int p = W.p();
  const int Nw = W.degree();
  Mat lead = W.coeff(Nw);
  bool monic = W.monic();
  Eigen::PartialPivLU<Mat> lead_lu;
  if (!monic) {
    if (rcond(lead) < tol::sing)
      fail(Err::SingularLeadingBlock, "divide_right_exact: singular divisor leading coefficient");
    lead_lu = Eigen::PartialPivLU<Mat>(lead.transpose());
  }
  MatPoly rem = F;
  const int qdeg = std::max(0, F.degree() - Nw);
  std::vector<Mat> q(qdeg + 1, Mat::Zero(F.rows(), p));
  for (int k = qdeg; k >= 0; --k) {
    Mat top = rem.coeff(k + Nw);
    Mat qk = monic ? top : Mat(lead_lu.solve(top.transpose()).transpose());
    q[k] = qk;
    for (int j = 0; j <= Nw; ++j) rem.coeff_ref(k + j) -= qk * W.coeff(j);
  }
  rem.trim();
  double scale = std::max({F.norm(), W.norm(), 1.0});
  for (int k = Nw; k <= rem.degree(); ++k)
    if (rem.coeff(k).norm() > tau * scale)
      fail(Err::NonzeroDivisionRemainder, "divide_right_exact: high-degree residue");
  for (int k = 0; k < Nw && k <= rem.degree(); ++k)
    if (rem.coeff(k).norm() > tau * scale)
      fail(Err::NonzeroDivisionRemainder, "divide_right_exact: division leaves a remainder");
  return MatPoly(std::move(q));
}

}  // namespace mbp
