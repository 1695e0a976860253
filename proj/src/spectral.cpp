#include "mbp/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace mbp {

SpectralData::SpectralData(int p, std::vector<EigenvalueData> eigs)
    : p_(p), eigs_(std::move(eigs)) {
  alpha_total_ = 0;
  for (const auto& e : eigs_) {
    if (e.chains.empty()) fail(Err::DimensionMismatch, "SpectralData: eigenvalue without chains");
    for (const auto& c : e.chains) {
      if (c.kappa <= 0 || static_cast<int>(c.right.size()) != c.kappa)
        fail(Err::DimensionMismatch, "SpectralData: chain length mismatch");
      if (!c.left.empty() && static_cast<int>(c.left.size()) != c.kappa)
        fail(Err::DimensionMismatch, "SpectralData: left chain length mismatch");
    }
    alpha_total_ += e.alpha();
  }
}

Mat SpectralData::X() const {
  Mat x(p_, alpha_total_);
  int col = 0;
  for (const auto& e : eigs_)
    for (const auto& c : e.chains)
      for (int l = 0; l < c.kappa; ++l) x.col(col++) = c.right[l];
  return x;
}

Mat SpectralData::J() const {
  Mat j = Mat::Zero(alpha_total_, alpha_total_);
  int off = 0;
  for (const auto& e : eigs_)
    for (const auto& c : e.chains) {
      for (int l = 0; l < c.kappa; ++l) {
        j(off + l, off + l) = e.x;
        if (l + 1 < c.kappa) j(off + l, off + l + 1) = 1.0;
      }
      off += c.kappa;
    }
  return j;
}

MatPoly SpectralData::right_root_poly(int a, int i) const {
  const auto& c = eigs_[a].chains[i];
  cd x0 = eigs_[a].x;
  // expand sum r_l (x - x0)^l into the monomial basis
  MatPoly r(p_, 1);
  MatPoly shift({Mat::Constant(1, 1, -x0), Mat::Constant(1, 1, 1.0)});
  MatPoly pw = MatPoly::identity(1);
  for (int l = 0; l < c.kappa; ++l) {
    Mat coef(p_, 1);
    coef.col(0) = c.right[l];
    r += MatPoly::constant(coef) * pw;
    pw = pw * shift;
  }
  return r;
}

MatPoly SpectralData::left_root_poly(int a, int i) const {
  const auto& c = eigs_[a].chains[i];
  if (c.left.empty()) fail(Err::DimensionMismatch, "left root polynomial not populated");
  cd x0 = eigs_[a].x;
  MatPoly r(1, p_);
  MatPoly shift({Mat::Constant(1, 1, -x0), Mat::Constant(1, 1, 1.0)});
  MatPoly pw = MatPoly::identity(1);
  for (int l = 0; l < c.kappa; ++l) {
    Mat coef(1, p_);
    coef.row(0) = c.left[l];
    r += pw * MatPoly::constant(coef);
    pw = pw * shift;
  }
  return r;
}

int SpectralData::chain_offset(int a, int i) const {
  int off = 0;
  for (int b = 0; b < a; ++b) off += eigs_[b].alpha();
  for (int k = 0; k < i; ++k) off += eigs_[a].chains[k].kappa;
  return off;
}

namespace {

// Left Jordan chain of length kappa for W at x0: covectors l_0.. with
// sum_{s<=j} l_{j-s} W^(s)(x0)/s! = 0.  Chains are extended by least squares;
// a nonzero residual means the requested length is not attainable.
std::vector<RowVec> left_chain(const MatPoly& W, cd x0, int kappa) {
  const int p = W.p();
  Mat w0 = W.eval(x0);
  Eigen::JacobiSVD<Mat> svd(w0.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double smax = std::max({s(0), W.norm(), 1.0});
  int nullity = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) <= 1e-8 * smax) ++nullity;
  if (nullity == 0) fail(Err::SingularQ, "left_chain: point is not an eigenvalue");
  // candidate eigen-covectors: kernel of W(x0)^T lives in the right singular vectors
  std::vector<RowVec> candidates;
  for (int i = 0; i < nullity; ++i)
    candidates.push_back(svd.matrixV().col(p - 1 - i).transpose());
  double scale = std::max(1.0, W.norm());
  for (const auto& l0 : candidates) {
    std::vector<RowVec> chain{l0};
    bool ok = true;
    for (int j = 1; j < kappa && ok; ++j) {
      RowVec rhs = RowVec::Zero(p);
      double fact = 1.0;
      for (int ss = 1; ss <= j; ++ss) {
        fact *= ss;
        rhs -= chain[j - ss] * W.deriv_eval(x0, ss) / fact;
      }
      // minimal-norm solution of l_j W(x0) = rhs
      RowVec lj = svd.solve(rhs.transpose()).transpose();
      if ((lj * w0 - rhs).norm() > 1e-7 * scale * std::max(1.0, rhs.norm())) {
        ok = false;
        break;
      }
      chain.push_back(lj);
    }
    if (ok) return chain;
  }
  fail(Err::SingularQ, "left_chain: no admissible left Jordan chain of requested length");
}

}  // namespace

SpectralPair spectral_data_forward(int p, std::vector<EigenvalueData> eigs_right) {
  SpectralData tmp(p, eigs_right);
  MatPoly W = monic_from_jordan_pair(tmp.X(), tmp.J());
  for (auto& e : eigs_right)
    for (auto& c : e.chains)
      if (c.left.empty()) c.left = left_chain(W, e.x, c.kappa);
  SpectralData sd(p, std::move(eigs_right));
  return {std::move(W), std::move(sd)};
}

SpectralData spectral_data_from_poly(const MatPoly& W) {
  const int p = W.p();
  auto clusters = spectrum(W);
  std::vector<EigenvalueData> eigs;
  for (const auto& cl : clusters) {
    Mat wz = W.eval(cl.value);
    Eigen::JacobiSVD<Mat> svd(wz, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int nullity = 0;
    for (int i = 0; i < s.size(); ++i)
      if (s(i) <= 1e-8 * std::max({s(0), W.norm(), 1.0})) ++nullity;
    if (nullity != cl.multiplicity)
      fail(Err::SingularQ,
           "spectral_data_from_poly: defective eigenvalue, supply Jordan data explicitly");
    EigenvalueData e;
    e.x = cl.value;
    for (int i = 0; i < cl.multiplicity; ++i) {
      JordanChain c;
      c.kappa = 1;
      c.right.push_back(svd.matrixV().col(p - 1 - i));
      c.left = left_chain(W, cl.value, 1);
      if (cl.multiplicity > 1) {
        Eigen::JacobiSVD<Mat> svdl(wz.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
        c.left[0] = svdl.matrixV().col(p - 1 - i).transpose();
      }
      e.chains.push_back(std::move(c));
    }
    eigs.push_back(std::move(e));
  }
  return SpectralData(p, std::move(eigs));
}

double spectral_data_residual(const MatPoly& W, const SpectralData& sd) {
  const int N = W.degree();
  Mat X = sd.X();
  Mat J = sd.J();
  Mat acc = Mat::Zero(X.rows(), X.cols());
  Mat xjk = X;
  for (int k = 0; k <= N; ++k) {
    acc += W.coeff(k) * xjk;
    xjk = xjk * J;
  }
  double scale = std::max(1.0, W.norm() * X.norm());
  double r = acc.norm() / scale;
  // root-polynomial annihilation orders
  for (size_t a = 0; a < sd.eigs().size(); ++a) {
    const auto& e = sd.eigs()[a];
    for (size_t i = 0; i < e.chains.size(); ++i) {
      MatPoly wr = W * sd.right_root_poly(static_cast<int>(a), static_cast<int>(i));
      MatPoly lw = sd.left_root_poly(static_cast<int>(a), static_cast<int>(i)) * W;
      double fact = 1.0;
      for (int m = 0; m < e.chains[i].kappa; ++m) {
        if (m > 0) fact *= m;
        r = std::max(r, wr.deriv_eval(e.x, m).norm() / (fact * scale));
        r = std::max(r, lw.deriv_eval(e.x, m).norm() / (fact * scale));
      }
    }
  }
  return r;
}

Mat jet(const MatrixFn& f, const SpectralData& sd) {
  const int p = sd.p();
  Mat out(p, p * sd.alpha_total());
  int col = 0;
  for (const auto& e : sd.eigs())
    for (const auto& c : e.chains) {
      double fact = 1.0;
      for (int m = 0; m < c.kappa; ++m) {
        if (m > 0) fact *= m;
        out.block(0, col, p, p) = f.deriv(e.x, m) / fact;
        col += p;
      }
    }
  return out;
}

Mat root_jet(const MatrixFn& f, const SpectralData& sd) {
  const int p = sd.p();
  Mat out(p, sd.alpha_total());
  int col = 0;
  for (const auto& e : sd.eigs())
    for (const auto& c : e.chains) {
      // cache the scaled derivatives f^(s)(x_a)/s!
      std::vector<Mat> fd(c.kappa);
      double fact = 1.0;
      for (int s = 0; s < c.kappa; ++s) {
        if (s > 0) fact *= s;
        fd[s] = f.deriv(e.x, s) / fact;
      }
      for (int m = 0; m < c.kappa; ++m) {
        Vec acc = Vec::Zero(p);
        for (int l = 0; l <= m && l < c.kappa; ++l) acc += fd[m - l] * c.right[l];
        out.col(col++) = acc;
      }
    }
  return out;
}

Mat root_jet(const MatPoly& f, const SpectralData& sd) {
  return root_jet(MatPolyFn(f), sd);
}

Mat monomial_root_jet(int n, const SpectralData& sd) {
  return root_jet(MatPoly::monomial(sd.p(), n), sd);
}

std::vector<cd> w_poly(const MatPoly& W, const SpectralData& sd, int a, int i, int j) {
  const auto& e = sd.eigs()[a];
  const int ki = e.chains[i].kappa;
  const int kj = e.chains[j].kappa;
  const int kmax = std::max(ki, kj);
  MatPoly prod = sd.left_root_poly(a, i) * W * sd.right_root_poly(a, j);  // 1x1
  // Taylor coefficients about x_a, then divide out (x - x_a)^kmax
  const int deg = prod.degree();
  std::vector<cd> taylor(deg + 1);
  double fact = 1.0;
  for (int m = 0; m <= deg; ++m) {
    if (m > 0) fact *= m;
    taylor[m] = prod.deriv_eval(e.x, m)(0, 0) / fact;
  }
  double scale = std::max(1.0, W.norm());
  for (int m = 0; m < kmax && m <= deg; ++m)
    if (std::abs(taylor[m]) > 1e-8 * scale)
      fail(Err::NonzeroRemainder, "w_poly: root polynomials inconsistent with W");
  std::vector<cd> out;
  for (int m = kmax; m <= deg; ++m) out.push_back(taylor[m]);
  if (out.empty()) out.push_back(0.0);
  return out;
}

Mat w_coupling(const MatPoly& W, const SpectralData& sd) {
  const int at = sd.alpha_total();
  Mat wc = Mat::Zero(at, at);
  int base = 0;
  for (size_t a = 0; a < sd.eigs().size(); ++a) {
    const auto& e = sd.eigs()[a];
    const int s = static_cast<int>(e.chains.size());
    // block (i, j): kappa_i x kappa_j, entries from the Taylor coefficients
    // of w_{i,j} with offset kmax(i,j)
    int roff = 0;
    for (int i = 0; i < s; ++i) {
      int coff = 0;
      const int ki = e.chains[i].kappa;
      for (int j = 0; j < s; ++j) {
        const int kj = e.chains[j].kappa;
        const int kmax = std::max(ki, kj);
        auto w = w_poly(W, sd, static_cast<int>(a), i, j);
        for (int r = 0; r < ki; ++r)
          for (int c = 0; c < kj; ++c) {
            int idx = r + c - kmax + 1;
            if (idx >= 0 && idx < static_cast<int>(w.size()))
              wc(base + roff + r, base + coff + c) = w[idx];
          }
        coff += kj;
      }
      roff += ki;
    }
    base += e.alpha();
  }
  return wc;
}

AuxMatrices aux_matrices(const MatPoly& W, const SpectralData& sd) {
  const int p = sd.p();
  const int N = W.degree();
  const int np = N * p;
  if (sd.alpha_total() != np)
    fail(Err::DimensionMismatch, "aux_matrices: spectral data does not fill N*p");
  AuxMatrices aux;
  aux.B = Mat::Zero(np, np);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i + j + 1 <= N) aux.B.block(i * p, j * p, p, p) = W.coeff(i + j + 1);
  Mat X = sd.X();
  Mat J = sd.J();
  aux.Q = Mat(np, np);
  Mat row = X;
  for (int k = 0; k < N; ++k) {
    aux.Q.block(k * p, 0, p, np) = row;
    row = row * J;
  }
  if (rcond(aux.Q) < tol::sing) fail(Err::SingularQ, "aux_matrices: singular stacked pair");
  aux.Y = jordan_triple_Y(X, J);
  aux.R = Mat(np, np);
  Mat col = aux.Y;
  for (int k = 0; k < N; ++k) {
    aux.R.block(0, k * p, np, p) = col;
    col = J * col;
  }
  aux.Wcal = w_coupling(W, sd);
  return aux;
}

Mat triple_R_truncation(const SpectralData& sd, const Mat& Y, int n) {
  const int p = sd.p();
  Mat J = sd.J();
  Mat out(sd.alpha_total(), n * p);
  Mat col = Y;
  for (int k = 0; k < n; ++k) {
    out.block(0, k * p, sd.alpha_total(), p) = col;
    col = J * col;
  }
  return out;
}

std::vector<MatPoly> bivariate_coupling_in_x(const MatPoly& W) {
  const int p = W.p();
  const int N = W.degree();
  // V(x,y) = sum_{j=1..N} A_j h_{j-1}(x,y); coefficient of x^k is
  // sum_{j>k} A_j y^{j-1-k}
  std::vector<MatPoly> out;
  for (int k = 0; k < N; ++k) {
    MatPoly ck(p, p);
    for (int j = k + 1; j <= N; ++j) ck.coeff_ref(j - 1 - k) += W.coeff(j);
    ck.trim();
    out.push_back(std::move(ck));
  }
  if (out.empty()) out.push_back(MatPoly(p, p));
  return out;
}

}  // namespace mbp
