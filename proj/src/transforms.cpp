#include "mbp/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace mbp {

namespace {

// <P, (xi)> row against the chain layout of sd: p x alpha_total
Mat mass_pairing_row(const MatPoly& P, const std::vector<MassTerm>& masses,
                     const SpectralData& sd) {
  Mat row = Mat::Zero(P.rows(), sd.alpha_total());
  for (const auto& m : masses) {
    int col = sd.chain_offset(m.eig_index, m.chain_index) + m.order;
    row.col(col) += m.xi.apply(P);
  }
  return row;
}

MatPoly hcat(const MatPoly& a, const MatPoly& b) {
  MatPoly out(a.rows(), a.cols() + b.cols());
  for (int k = 0; k <= std::max(a.degree(), b.degree()); ++k) {
    Mat c = Mat::Zero(a.rows(), a.cols() + b.cols());
    c.leftCols(a.cols()) = a.coeff(k);
    c.rightCols(b.cols()) = b.coeff(k);
    out.coeff_ref(k) = c;
  }
  out.trim();
  return out;
}

Mat stack_rows(const std::vector<Mat>& rows, int lo, int hi) {
  const int p = static_cast<int>(rows[lo].rows());
  const int cols = static_cast<int>(rows[lo].cols());
  Mat out((hi - lo + 1) * p, cols);
  for (int m = lo; m <= hi; ++m) out.block((m - lo) * p, 0, p, cols) = rows[m];
  return out;
}

// x = b A^{-1} through the transposed solve
Mat right_solve(const Mat& b, const Mat& a) {
  return a.transpose().partialPivLu().solve(b.transpose()).transpose();
}

void identity_copy(const Factorization& f, int n, TransformResult& out) {
  for (int k = 0; k <= n; ++k) {
    out.P1.push_back(f.P1(k));
    out.P2.push_back(f.P2(k));
    out.H.push_back(f.H(k));
  }
}

}  // namespace

double TransformResult::deviation(const TransformResult& other, int upto,
                                  bool compare_p2) const {
  // coefficient deviations are normalized by the polynomial scale so that
  // numerically-zero trailing coefficients do not register
  auto poly_dev = [](const MatPoly& a, const MatPoly& b) {
    double scale = std::max({a.norm(), b.norm(), 1e-300});
    double d = 0.0;
    for (int j = 0; j <= std::max(a.degree(), b.degree()); ++j)
      d = std::max(d, (a.coeff(j) - b.coeff(j)).norm() / scale);
    return d;
  };
  double dev = 0.0;
  for (int k = 0; k <= upto; ++k) {
    dev = std::max(dev, poly_dev(P1[k], other.P1[k]));
    dev = std::max(dev, rel_err(H[k], other.H[k]));
    if (compare_p2 && !p2_up_to_leading && !other.p2_up_to_leading)
      dev = std::max(dev, poly_dev(P2[k], other.P2[k]));
  }
  return dev;
}

TransformResult geronimus_direct(const KernelRep& k, const MatPoly& W_G,
                                 const std::vector<MassTerm>& masses, const SpectralData* sd,
                                 int n) {
  KernelRep pk = geronimus_kernel(k, W_G, masses, sd);
  Factorization f = gauss_borel(pk, n + 1);
  TransformResult out;
  out.route = "direct";
  out.n = n;
  identity_copy(f, n, out);
  return out;
}

TransformResult geronimus_spectral(const Factorization& f, const KernelRep& k,
                                   const MatPoly& W_G, const SpectralData& sd,
                                   const std::vector<MassTerm>& masses, int n) {
  const int p = f.p();
  const int N = W_G.degree();
  TransformResult out;
  out.route = "spectral";
  out.n = n;
  if (N == 0) {
    identity_copy(f, n, out);
    return out;
  }
  if (!W_G.monic())
    fail(Err::NonMonic, "geronimus_spectral: monic perturbing polynomial required");
  const int need = std::max(n + 1, N);
  if (f.n() < need) fail(Err::WindowTooSmall, "geronimus_spectral: base truncation too small");
  auto aux = aux_matrices(W_G, sd);

  const int rows_hi = std::max(n, N - 1);
  std::vector<Mat> rows(rows_hi + 1);
  for (int m = 0; m <= rows_hi; ++m) {
    auto c1 = cauchy_fn(k, f.P1(m), 1);
    rows[m] = root_jet(*c1, sd) - mass_pairing_row(f.P1(m), masses, sd) * aux.Wcal;
  }

  out.P1.resize(n + 1, MatPoly(p, p));
  out.P2.resize(n + 1, MatPoly(p, p));
  out.H.resize(n + 1, Mat::Zero(p, p));

  {
    // truncated branch for indices below the perturbing degree
    if (p * N > 16)
      fail(Err::WindowTooSmall, "geronimus_spectral: n < N branch gated to p*N <= 16");
    Mat T = -stack_rows(rows, 0, N - 1) * aux.R;
    Factorization tf(T, p);
    for (int nn = 0; nn <= std::min(n, N - 1); ++nn) {
      MatPoly p1(p, p);
      for (int j = 0; j <= nn; ++j) p1 += MatPoly::constant(tf.S1_block(nn, j)) * f.P1(j);
      out.P1[nn] = p1;
      out.P2[nn] = tf.P2(nn);
      out.H[nn] = tf.H(nn);
    }
  }

  auto v_coeffs = bivariate_coupling_in_x(W_G);
  for (int nn = N; nn <= n; ++nn) {
    Mat M = stack_rows(rows, nn - N, nn - 1);
    if (rcond(M) < tol::sing)
      fail(Err::SingularJetBlock, "geronimus_spectral: singular stacked jet matrix");
    Mat omega = -right_solve(rows[nn], M);  // [omega_{nn,nn-N}, ..., omega_{nn,nn-1}]
    MatPoly p1 = f.P1(nn);
    for (int j = 0; j < N; ++j)
      p1 += MatPoly::constant(omega.block(0, j * p, p, p)) * f.P1(nn - N + j);
    out.P1[nn] = p1;
    out.H[nn] = omega.block(0, 0, p, p) * f.H(nn - N);
    // second family from the mixed-kernel jet row
    MatPoly acc(p, N * p);
    for (int kk = 0; kk < nn; ++kk) {
      Mat hk_rows = Eigen::PartialPivLU<Mat>(f.H(kk)).solve(rows[kk]);
      acc += f.P2(kk).transpose() * MatPoly::constant(hk_rows);
    }
    MatPoly lastrow = W_G * acc;
    for (size_t kk = 0; kk < v_coeffs.size(); ++kk)
      lastrow += v_coeffs[kk] * MatPoly::constant(monomial_root_jet(static_cast<int>(kk), sd));
    Mat rhs = Mat::Zero(N * p, p);
    rhs.block(0, 0, p, p) = f.H(nn - N);
    Mat mult = M.partialPivLu().solve(rhs);
    out.P2[nn] = (lastrow * mult).transpose();
  }
  return out;
}

MatPoly unimodular_inverse(const MatPoly& W) {
  RationalMatrixFn inv = rational_inverse(W);
  if (!inv.poles().empty())
    fail(Err::NonMonic, "unimodular_inverse: polynomial is not unimodular");
  return inv.poly();
}

std::vector<int> poised_set_search(const Mat& rows, int need) {
  const int cols = static_cast<int>(rows.cols());
  if (cols < need) fail(Err::NoPoisedSet, "poised_set_search: not enough columns");
  const double scale = std::max(rows.norm(), 1e-300);
  // canonical leading set first; the conditioning check is relative to the
  // whole slab so that uniformly negligible columns are rejected
  {
    Mat lead = rows.leftCols(need);
    Eigen::JacobiSVD<Mat> svd(lead);
    if (svd.singularValues()(svd.singularValues().size() - 1) > 1e-10 * scale) {
      std::vector<int> idx(need);
      for (int i = 0; i < need; ++i) idx[i] = i;
      return idx;
    }
  }
  // greedy modified Gram-Schmidt, largest residual column norm, ties by index
  Mat work = rows;
  std::vector<int> picked;
  std::vector<bool> used(cols, false);
  for (int step = 0; step < need; ++step) {
    int best = -1;
    double best_norm = -1.0;
    for (int c = 0; c < cols; ++c) {
      if (used[c]) continue;
      double nc = work.col(c).norm();
      if (nc > best_norm + 1e-15 * std::max(1.0, best_norm)) {
        best_norm = nc;
        best = c;
      }
    }
    if (best < 0 || best_norm <= 1e-13 * std::max(1.0, rows.norm()))
      fail(Err::NoPoisedSet, "poised_set_search: rank-deficient rows");
    used[best] = true;
    picked.push_back(best);
    Vec q = work.col(best) / work.col(best).norm();
    for (int c = 0; c < cols; ++c)
      if (!used[c]) work.col(c) -= q * (q.adjoint() * work.col(c));
  }
  std::sort(picked.begin(), picked.end());
  Mat sub(rows.rows(), need);
  for (int i = 0; i < need; ++i) sub.col(i) = rows.col(picked[i]);
  Eigen::JacobiSVD<Mat> svd(sub);
  if (svd.singularValues()(svd.singularValues().size() - 1) < 1e-12 * scale)
    fail(Err::NoPoisedSet, "poised_set_search: selected columns are ill conditioned");
  return picked;
}

namespace {

Mat select_columns(const Mat& m, const std::vector<int>& idx) {
  Mat out(m.rows(), static_cast<int>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out.col(static_cast<int>(i)) = m.col(idx[i]);
  return out;
}

MatPoly select_columns(const MatPoly& m, const std::vector<int>& idx) {
  MatPoly out(m.rows(), static_cast<int>(idx.size()));
  for (int k = 0; k <= m.degree(); ++k) out.coeff_ref(k) = select_columns(m.coeff(k), idx);
  out.trim();
  return out;
}

// R_{m,l} blocks for m, l in 0..count-1: R = S1 G-perturbed
std::vector<std::vector<Mat>> r_matrix(const Factorization& f, const KernelRep& pk, int rows,
                                       int cols) {
  const int p = f.p();
  Mat g = pk.gram(std::max(rows, cols));
  std::vector<std::vector<Mat>> r(rows, std::vector<Mat>(cols));
  for (int m = 0; m < rows; ++m)
    for (int l = 0; l < cols; ++l) {
      Mat acc = Mat::Zero(p, p);
      for (int j = 0; j <= m; ++j) acc += f.S1_block(m, j) * g.block(j * p, l * p, p, p);
      r[m][l] = acc;
    }
  return r;
}

Mat r_slab(const std::vector<std::vector<Mat>>& r, int row_lo, int row_hi, int col_lo,
           int col_hi, int p) {
  Mat out((row_hi - row_lo + 1) * p, (col_hi - col_lo + 1) * p);
  for (int m = row_lo; m <= row_hi; ++m)
    for (int l = col_lo; l <= col_hi; ++l)
      out.block((m - row_lo) * p, (l - col_lo) * p, p, p) = r[m][l];
  return out;
}

}  // namespace

TransformResult geronimus_nonspectral(const Factorization& f, const KernelRep& k,
                                      const MatPoly& W_G, const std::vector<MassTerm>& masses,
                                      const SpectralData* sd, int n) {
  const int p = f.p();
  const int N = W_G.degree();
  TransformResult out;
  out.route = "nonspectral";
  out.n = n;
  if (N == 0 && W_G.monic()) {
    identity_copy(f, n, out);
    return out;
  }
  if (f.n() < n + 1) fail(Err::WindowTooSmall, "geronimus_nonspectral: base truncation too small");
  KernelRep pk = geronimus_kernel(k, W_G, masses, sd);
  auto R = r_matrix(f, pk, n + 2, n + 2);
  const Mat& A_N = W_G.coeff(N);
  const bool lead_ok = rcond(A_N) > tol::sing;

  for (int nn = 0; nn <= n; ++nn) {
    if (nn < N) {
      // H from the leading R truncation, families from bordered truncations
      if (nn == 0) {
        out.P1.push_back(f.P1(0));
        out.P2.push_back(f.P2(0));
        out.H.push_back(R[0][0]);
        continue;
      }
      Mat lead = r_slab(R, 0, nn - 1, 0, nn - 1, p);
      if (rcond(lead) < tol::sing)
        fail(Err::QuasidefinitenessFailure, "nonspectral: singular R truncation", nn);
      // P1
      Mat rown = r_slab(R, nn, nn, 0, nn - 1, p);
      Mat omega = -right_solve(rown, lead);
      MatPoly p1 = f.P1(nn);
      for (int j = 0; j < nn; ++j)
        p1 += MatPoly::constant(omega.block(0, j * p, p, p)) * f.P1(j);
      out.P1.push_back(p1);
      out.H.push_back((omega * r_slab(R, 0, nn - 1, nn, nn, p) + R[nn][nn]).eval());
      // P2 via the column-bordered truncation
      Mat coln = r_slab(R, 0, nn - 1, nn, nn, p);
      Mat s2col = -lead.partialPivLu().solve(coln);
      MatPoly p2t = MatPoly::monomial(p, nn);
      for (int j = 0; j < nn; ++j)
        p2t += MatPoly::monomial(p, j) * MatPoly::constant(s2col.block(j * p, 0, p, p));
      out.P2.push_back(p2t.transpose());
      continue;
    }
    // nn >= N: poised column selection
    Mat slab = r_slab(R, nn - N, nn - 1, 0, nn - 1, p);
    std::vector<int> cols = poised_set_search(slab, N * p);
    Mat rsq = select_columns(slab, cols);
    Mat rn = select_columns(r_slab(R, nn, nn, 0, nn - 1, p), cols);
    Mat omega = -right_solve(rn, rsq);  // [omega_{nn,nn-N},...,omega_{nn,nn-1}]
    MatPoly p1 = f.P1(nn);
    for (int j = 0; j < N; ++j)
      p1 += MatPoly::constant(omega.block(0, j * p, p, p)) * f.P1(nn - N + j);
    out.P1.push_back(p1);
    out.H.push_back((omega * r_slab(R, nn - N, nn - 1, nn, nn, p) + R[nn][nn]).eval());
    // r^K_{nn,l}(y) = W_G(y) sum_k P2_k(y)^T H_k^{-1} R_{k,l} - I y^l
    MatPoly rk(p, nn * p);
    for (int kk = 0; kk < nn; ++kk) {
      Mat blocks(p, nn * p);
      for (int l = 0; l < nn; ++l)
        blocks.block(0, l * p, p, p) = Eigen::PartialPivLU<Mat>(f.H(kk)).solve(R[kk][l]);
      rk += f.P2(kk).transpose() * MatPoly::constant(blocks);
    }
    rk = W_G * rk;
    for (int l = 0; l < nn; ++l) {
      MatPoly mono = MatPoly::monomial(p, l);
      for (int j = 0; j <= mono.degree(); ++j) {
        Mat c = rk.coeff_ref(j);
        c.block(0, l * p, p, p) -= mono.coeff(j);
        rk.coeff_ref(j) = c;
      }
    }
    MatPoly rksel = select_columns(rk, cols);
    Mat rhs = Mat::Zero(N * p, p);
    rhs.block(0, 0, p, p) = f.H(nn - N);
    Mat mult = rsq.partialPivLu().solve(rhs);
    MatPoly p2ta = rksel * mult;  // (P2_nn)^T A_N
    if (lead_ok) {
      out.P2.push_back((p2ta * Mat(A_N.partialPivLu().solve(Mat::Identity(p, p)))).transpose());
    } else {
      out.P2.push_back(p2ta);
      out.p2_up_to_leading = true;
    }
  }
  return out;
}

TransformResult uvarov_direct(const KernelRep& k, const std::vector<UvarovTerm>& terms, int n) {
  KernelRep pk = uvarov_kernel(k, terms);
  Factorization f = gauss_borel(pk, n + 1);
  TransformResult out;
  out.route = "direct";
  out.n = n;
  identity_copy(f, n, out);
  return out;
}

TransformResult uvarov(const Factorization& f, [[maybe_unused]] const KernelRep& k,
                       const std::vector<UvarovTerm>& terms, int n) {
  const int p = f.p();
  TransformResult out;
  out.route = "uvarov";
  out.n = n;
  if (f.n() < n + 1) fail(Err::WindowTooSmall, "uvarov: base truncation too small");
  // degree and layout of the y-side jets
  struct Slot {
    cd point;
    int order;
  };
  std::vector<Slot> slots;
  for (const auto& t : terms) slots.push_back({t.y_point, t.order});
  const int nd = static_cast<int>(slots.size());
  if (nd == 0) {
    identity_copy(f, n, out);
    return out;
  }

  // running jets of K_{nn-1}: J01 (y-side, as x-polynomials) and the pairing
  // matrix A = I + <J01, beta>
  std::vector<MatPoly> j01(nd, MatPoly(p, p));  // block rows of J01(x)
  Mat a = Mat::Identity(nd * p, nd * p);
  for (int nn = 0; nn <= n; ++nn) {
    // jets of P2_nn at the slots
    std::vector<Mat> p2jet(nd);
    for (int s = 0; s < nd; ++s) {
      double fact = 1.0;
      for (int i = 2; i <= slots[s].order; ++i) fact *= i;
      p2jet[s] = f.P2(nn).deriv_eval(slots[s].point, slots[s].order) / fact;
    }
    // beta pairings of P1_nn
    Mat pb(p, nd * p);
    for (int s = 0; s < nd; ++s) pb.block(0, s * p, p, p) = terms[s].beta.apply(f.P1(nn));
    if (rcond(a) < tol::sing)
      fail(Err::SingularUvarovMatrix, "uvarov: bordered system is singular");
    Eigen::PartialPivLU<Mat> alu(a);
    // P1
    Mat lead = right_solve(pb, a);
    MatPoly p1 = f.P1(nn);
    for (int s = 0; s < nd; ++s)
      p1 -= MatPoly::constant(lead.block(0, s * p, p, p)) * j01[s];
    out.P1.push_back(p1);
    // H
    Mat jp2t(nd * p, p);
    for (int s = 0; s < nd; ++s) jp2t.block(s * p, 0, p, p) = p2jet[s].transpose();
    out.H.push_back(f.H(nn) + lead * jp2t);
    // P2: <K_{nn-1}(x,y), beta> as a polynomial in y
    MatPoly kb(p, nd * p);
    for (int kk = 0; kk < nn; ++kk) {
      Mat pbk(p, nd * p);
      for (int s = 0; s < nd; ++s)
        pbk.block(0, s * p, p, p) = terms[s].beta.apply(f.P1(kk));
      kb += f.P2(kk).transpose() *
            MatPoly::constant(Mat(Eigen::PartialPivLU<Mat>(f.H(kk)).solve(pbk)));
    }
    MatPoly p2t = f.P2(nn).transpose() - kb * Mat(alu.solve(jp2t));
    out.P2.push_back(p2t.transpose());
    // extend K jets to order nn for the next step
    Mat hinv = Eigen::PartialPivLU<Mat>(f.H(nn)).solve(Mat::Identity(p, p));
    for (int s = 0; s < nd; ++s)
      j01[s] += MatPoly::constant(Mat(p2jet[s].transpose() * hinv)) * f.P1(nn);
    for (int s = 0; s < nd; ++s) {
      Mat row(p, nd * p);
      for (int t = 0; t < nd; ++t)
        row.block(0, t * p, p, p) =
            terms[t].beta.apply(MatPoly(std::vector<Mat>{p2jet[s].transpose() * hinv}) *
                                f.P1(nn));
      a.block(s * p, 0, p, nd * p) += row;
    }
  }
  return out;
}

namespace {

// spectral rows for the Geronimus-Uvarov transformation
struct GURows {
  std::vector<Mat> jc;       // root jets of P1 against W_C data
  std::vector<Mat> jg;       // root jets of C1 minus mass correction, against W_G data
  int nc_cols, ng_cols;
};

GURows gu_rows(const Factorization& f, const KernelRep& k, const SpectralData& sd_c,
               const SpectralData& sd_g, const Mat& wcal_g,
               const std::vector<MassTerm>& masses, int hi) {
  GURows rows;
  rows.nc_cols = sd_c.alpha_total();
  rows.ng_cols = sd_g.alpha_total();
  for (int m = 0; m <= hi; ++m) {
    rows.jc.push_back(root_jet(f.P1(m), sd_c));
    auto c1 = cauchy_fn(k, f.P1(m), 1);
    rows.jg.push_back(root_jet(*c1, sd_g) - mass_pairing_row(f.P1(m), masses, sd_g) * wcal_g);
  }
  return rows;
}

Mat gu_stack(const GURows& rows, int lo, int hi) {
  const int p = static_cast<int>(rows.jc[lo].rows());
  Mat out((hi - lo + 1) * p, rows.nc_cols + rows.ng_cols);
  for (int m = lo; m <= hi; ++m) {
    out.block((m - lo) * p, 0, p, rows.nc_cols) = rows.jc[m];
    out.block((m - lo) * p, rows.nc_cols, p, rows.ng_cols) = rows.jg[m];
  }
  return out;
}

}  // namespace

TransformResult geronimus_uvarov(const Factorization& f, const KernelRep& k, const MatPoly& W_C,
                                 const MatPoly& W_G, const std::vector<MassTerm>& masses,
                                 const SpectralData* sd_G, int n, GURoute route) {
  const int p = f.p();
  const int nc = W_C.degree();
  const int ng = W_G.degree();
  TransformResult out;
  out.n = n;

  if (route == GURoute::Direct) {
    KernelRep pk = geronimus_uvarov_kernel(k, W_C, W_G, masses, sd_G);
    Factorization pf = gauss_borel(pk, n + 1);
    out.route = "direct";
    identity_copy(pf, n, out);
    return out;
  }

  if (ng == 0 && nc == 0) {
    out.route = route == GURoute::Spectral ? "spectral" : "mixed";
    identity_copy(f, n, out);
    return out;
  }

  if (f.n() < n + nc + 1)
    fail(Err::WindowTooSmall, "geronimus_uvarov: base truncation too small");

  if (route == GURoute::Mixed) {
    out.route = "mixed";
    SpectralData sd_c = spectral_data_from_poly(W_C);
    KernelRep pk = geronimus_kernel(k, W_G, masses, sd_G);
    auto R = r_matrix(f, pk, n + nc + 2, n + 2);
    const Mat& A_Ng = W_G.coeff(ng);
    const bool lead_ok = rcond(A_Ng) > tol::sing;
    const int jcols = sd_c.alpha_total();
    std::vector<Mat> jc;
    for (int m = 0; m <= n + nc + 1; ++m) jc.push_back(root_jet(f.P1(m), sd_c));

    for (int nn = 0; nn <= n; ++nn) {
      if (nn < ng) {
        // factorization reading of the truncated window
        Mat a11(nc * p, jcols), a21(ng * p, jcols);
        for (int m = 0; m < nc; ++m) a11.block(m * p, 0, p, jcols) = jc[m];
        for (int m = 0; m < ng; ++m) a21.block(m * p, 0, p, jcols) = jc[nc + m];
        Mat a12 = r_slab(R, 0, nc - 1, 0, ng - 1, p);
        Mat a22 = r_slab(R, nc, nc + ng - 1, 0, ng - 1, p);
        Mat schur;
        if (nc == 0)
          schur = a22;
        else {
          if (rcond(a11) < tol::sing)
            fail(Err::SingularPoisedCandidate, "geronimus_uvarov mixed: singular C-jet corner");
          schur = a22 - a21 * a11.partialPivLu().solve(a12);
        }
        Factorization tf(schur, p);
        Mat w2 = tf.S1();
        // assemble omega row nn over columns 0..nc+nn-1
        Mat w2row = w2.block(nn * p, 0, p, ng * p);
        Mat w1row;
        if (nc > 0) w1row = -w2row * (a21 * a11.partialPivLu().solve(Mat::Identity(nc * p, nc * p)));
        MatPoly p1 = f.P1(nn + nc);
        for (int j = 0; j < nc; ++j)
          p1 += MatPoly::constant(w1row.block(0, j * p, p, p)) * f.P1(j);
        for (int j = 0; j < nn; ++j)
          p1 += MatPoly::constant(w2row.block(0, j * p, p, p)) * f.P1(nc + j);
        out.P1.push_back(divide_right_exact(p1, W_C));
        out.P2.push_back(tf.P2(nn));
        out.H.push_back(tf.H(nn));
        continue;
      }
      // nn >= ng: poised selection over [jets | R columns]
      const int nrows = (nc + ng) * p;
      Mat phi(nrows, jcols + nn * p);
      for (int m = 0; m < nc + ng; ++m) {
        phi.block(m * p, 0, p, jcols) = jc[nn - ng + m];
        for (int l = 0; l < nn; ++l)
          phi.block(m * p, jcols + l * p, p, p) = R[nn - ng + m][l];
      }
      std::vector<int> cols = poised_set_search(phi, nrows);
      Mat phisq = select_columns(phi, cols);
      Mat varphi(p, jcols + nn * p);
      varphi.block(0, 0, p, jcols) = jc[nn + nc];
      for (int l = 0; l < nn; ++l) varphi.block(0, jcols + l * p, p, p) = R[nn + nc][l];
      Mat omega = -right_solve(select_columns(varphi, cols), phisq);
      MatPoly p1 = f.P1(nn + nc);
      for (int j = 0; j < nc + ng; ++j)
        p1 += MatPoly::constant(omega.block(0, j * p, p, p)) * f.P1(nn - ng + j);
      out.P1.push_back(divide_right_exact(p1, W_C));
      Mat hcol((nc + ng) * p, p);
      for (int m = 0; m < nc + ng; ++m) hcol.block(m * p, 0, p, p) = R[nn - ng + m][nn];
      out.H.push_back((omega * hcol + R[nn + nc][nn]).eval());
      // second family through the kernel-jet row
      MatPoly jcK(p, jcols);
      MatPoly rkrow(p, nn * p);
      for (int kk = 0; kk < nn; ++kk) {
        Eigen::PartialPivLU<Mat> hlu(f.H(kk));
        jcK += f.P2(kk).transpose() * MatPoly::constant(Mat(hlu.solve(jc[kk])));
        Mat blocks(p, nn * p);
        for (int l = 0; l < nn; ++l) blocks.block(0, l * p, p, p) = hlu.solve(R[kk][l]);
        rkrow += f.P2(kk).transpose() * MatPoly::constant(blocks);
      }
      jcK = W_G * jcK;
      rkrow = W_G * rkrow;
      for (int l = 0; l < nn; ++l) {
        MatPoly mono = MatPoly::monomial(p, l);
        for (int j = 0; j <= mono.degree(); ++j) {
          Mat c = rkrow.coeff_ref(j);
          c.block(0, l * p, p, p) -= mono.coeff(j);
          rkrow.coeff_ref(j) = c;
        }
      }
      MatPoly phik = select_columns(hcat(jcK, rkrow), cols);
      Mat rhs = Mat::Zero(nrows, p);
      rhs.block(0, 0, p, p) = f.H(nn - ng);
      Mat mult = phisq.partialPivLu().solve(rhs);
      MatPoly p2ta = phik * mult;
      if (lead_ok) {
        out.P2.push_back(
            (p2ta * Mat(A_Ng.partialPivLu().solve(Mat::Identity(p, p)))).transpose());
      } else {
        out.P2.push_back(p2ta);
        out.p2_up_to_leading = true;
      }
    }
    return out;
  }

  // spectral route
  out.route = "spectral";
  if (!W_C.monic() || (ng > 0 && !W_G.monic()))
    fail(Err::NonMonic, "geronimus_uvarov spectral: monic perturbing polynomials required");
  SpectralData sd_c = spectral_data_from_poly(W_C);
  if (ng == 0) {
    // pure Christoffel: jets of P1 only
    std::vector<Mat> jc;
    for (int m = 0; m <= n + nc; ++m) jc.push_back(root_jet(f.P1(m), sd_c));
    for (int nn = 0; nn <= n; ++nn) {
      Mat M(nc * p, nc * p);
      for (int m = 0; m < nc; ++m) M.block(m * p, 0, p, nc * p) = jc[nn + m];
      if (rcond(M) < tol::sing)
        fail(Err::SingularJetBlock, "christoffel spectral: singular jet stack");
      Mat omega = -right_solve(jc[nn + nc], M);
      MatPoly p1 = f.P1(nn + nc);
      for (int j = 0; j < nc; ++j)
        p1 += MatPoly::constant(omega.block(0, j * p, p, p)) * f.P1(nn + j);
      out.P1.push_back(divide_right_exact(p1, W_C));
      // omega_{nn,nn} = H-hat_nn H_nn^{-1}
      out.H.push_back(omega.block(0, 0, p, p) * f.H(nn));
      // with W_G = I the connection (hat P2)^T hatH^{-1} omega = P2^T H^{-1}
      // inverts row by row:
      // (hat P2_nn)^T = (P2_nn^T H_nn^{-1} - sum_{k<nn} (hat P2_k)^T hatH_k^{-1} omega_{k,nn}) H_nn
      MatPoly acc = f.P2(nn).transpose() *
                    Mat(Eigen::PartialPivLU<Mat>(f.H(nn)).solve(Mat::Identity(p, p)));
      for (int kk = std::max(0, nn - nc); kk < nn; ++kk) {
        Mat Mk(nc * p, nc * p);
        for (int m = 0; m < nc; ++m) Mk.block(m * p, 0, p, nc * p) = jc[kk + m];
        Mat omk = -right_solve(jc[kk + nc], Mk);
        int rel = nn - kk;
        Mat om = rel < nc ? Mat(omk.block(0, rel * p, p, p)) : Mat(Mat::Identity(p, p));
        acc -= out.P2[kk].transpose() *
               Mat(Eigen::PartialPivLU<Mat>(out.H[kk]).solve(om));
      }
      out.P2.push_back((acc * f.H(nn)).transpose());
    }
    return out;
  }
  SpectralData sd_g = sd_G ? *sd_G : spectral_data_from_poly(W_G);
  auto aux_g = aux_matrices(W_G, sd_g);
  GURows rows = gu_rows(f, k, sd_c, sd_g, aux_g.Wcal, masses, n + nc);

  auto vg_coeffs = bivariate_coupling_in_x(W_G);
  for (int nn = 0; nn <= n; ++nn) {
    if (nn < ng) {
      if (p * ng > 16)
        fail(Err::WindowTooSmall, "geronimus_uvarov spectral: n < N branch gated");
      // A = [rows 0..nc+ng-1] diag(I, R_G)
      Mat a = gu_stack(rows, 0, nc + ng - 1);
      a.rightCols(rows.ng_cols) = (a.rightCols(rows.ng_cols) * aux_g.R).eval();
      Mat a11 = a.topLeftCorner(nc * p, nc * p);
      Mat a12 = a.topRightCorner(nc * p, ng * p);
      Mat a21 = a.bottomLeftCorner(ng * p, nc * p);
      Mat a22 = a.bottomRightCorner(ng * p, ng * p);
      Mat schur;
      if (nc == 0)
        schur = a22;
      else {
        if (rcond(a11) < tol::sing)
          fail(Err::SingularJetBlock, "geronimus_uvarov spectral: singular C-jet corner");
        schur = a22 - a21 * a11.partialPivLu().solve(a12);
      }
      Factorization tf(Mat(-schur), p);
      Mat w2row = tf.S1().block(nn * p, 0, p, ng * p);
      Mat w1row;
      if (nc > 0) w1row = -w2row * (a21 * a11.inverse());
      MatPoly p1 = f.P1(nn + nc);
      for (int j = 0; j < nc; ++j)
        p1 += MatPoly::constant(w1row.block(0, j * p, p, p)) * f.P1(j);
      for (int j = 0; j < nn; ++j)
        p1 += MatPoly::constant(w2row.block(0, j * p, p, p)) * f.P1(nc + j);
      out.P1.push_back(divide_right_exact(p1, W_C));
      out.P2.push_back(tf.P2(nn));
      out.H.push_back(tf.H(nn));
      continue;
    }
    Mat M = gu_stack(rows, nn - ng, nn + nc - 1);
    if (rcond(M) < tol::sing)
      fail(Err::SingularJetBlock, "geronimus_uvarov spectral: singular stacked jets");
    Mat last(p, rows.nc_cols + rows.ng_cols);
    last.leftCols(rows.nc_cols) = rows.jc[nn + nc];
    last.rightCols(rows.ng_cols) = rows.jg[nn + nc];
    Mat omega = -right_solve(last, M);
    MatPoly p1 = f.P1(nn + nc);
    for (int j = 0; j < nc + ng; ++j)
      p1 += MatPoly::constant(omega.block(0, j * p, p, p)) * f.P1(nn - ng + j);
    out.P1.push_back(divide_right_exact(p1, W_C));
    out.H.push_back(omega.block(0, 0, p, p) * f.H(nn - ng));
    // last row of the second-family quasideterminant
    MatPoly jcK(p, rows.nc_cols);
    MatPoly jgK(p, rows.ng_cols);
    for (int kk = 0; kk < nn; ++kk) {
      Eigen::PartialPivLU<Mat> hlu(f.H(kk));
      jcK += f.P2(kk).transpose() * MatPoly::constant(Mat(hlu.solve(rows.jc[kk])));
      jgK += f.P2(kk).transpose() * MatPoly::constant(Mat(hlu.solve(rows.jg[kk])));
    }
    MatPoly left = W_G * jcK;
    MatPoly right = W_G * jgK;
    for (size_t kk = 0; kk < vg_coeffs.size(); ++kk)
      right += vg_coeffs[kk] * MatPoly::constant(monomial_root_jet(static_cast<int>(kk), sd_g));
    MatPoly lastrow = hcat(left, right);
    Mat rhs = Mat::Zero((nc + ng) * p, p);
    rhs.block(0, 0, p, p) = f.H(nn - ng);
    Mat mult = M.partialPivLu().solve(rhs);
    out.P2.push_back((lastrow * mult).transpose());
  }
  return out;
}

ResolventReport resolvent_and_connection(const Factorization& f, const Factorization& ft,
                                         const KernelRep& k, const KernelRep& kt,
                                         const MatPoly& W_C, const MatPoly& W_G,
                                         std::mt19937_64& rng) {
  const int p = f.p();
  const int nc = W_C.degree();
  const int ng = W_G.degree();
  const int win = std::min(f.n(), ft.n());
  if (win < ng + nc + 3) fail(Err::WindowTooSmall, "resolvent_and_connection: window too small");
  const int np = win * p;
  ResolventReport rep;
  rep.valid_rows = win - nc;

  // omega = S1' W_C(Lambda) S1^{-1} on the window
  Mat s1hat = ft.S1().topLeftCorner(np, np);
  Mat wc_lambda = Mat::Zero(np, np);
  for (int kk = 0; kk <= nc; ++kk)
    for (int m = 0; m + kk < win; ++m)
      wc_lambda.block(m * p, (m + kk) * p, p, p) += W_C.coeff(kk);
  Mat s1inv = f.S1().topLeftCorner(np, np).partialPivLu().solve(Mat::Identity(np, np));
  rep.omega = s1hat * wc_lambda * s1inv;

  double scale = std::max(1.0, rep.omega.norm());
  // band structure
  for (int i = 0; i < rep.valid_rows; ++i)
    for (int j = 0; j < win; ++j) {
      if (j >= i - ng && j <= i + nc) continue;
      rep.band_residual =
          std::max(rep.band_residual, rep.omega.block(i * p, j * p, p, p).norm() / scale);
    }
  // last subdiagonal: omega_{ng+k,k} = H'_{ng+k} A_{G,ng} H_k^{-1}
  for (int kk = 0; kk + ng < rep.valid_rows; ++kk) {
    Mat lhs = rep.omega.block((kk + ng) * p, kk * p, p, p);
    Mat rhs = ft.H(kk + ng) * W_G.coeff(ng) *
              Eigen::PartialPivLU<Mat>(f.H(kk)).solve(Mat::Identity(p, p));
    rep.last_subdiag_residual = std::max(rep.last_subdiag_residual, rel_err(lhs, rhs));
  }
  // alternative expression H' S2'^{-T} W_G(Lambda^T) S2^T H^{-1}
  {
    Mat uhat = ft.U().topLeftCorner(np, np);  // H' S2'^{-T}
    Mat wg_lt = Mat::Zero(np, np);
    for (int kk = 0; kk <= ng; ++kk)
      for (int m = 0; m + kk < win; ++m)
        wg_lt.block((m + kk) * p, m * p, p, p) += W_G.coeff(kk);
    Mat hinv = Mat::Zero(np, np);
    for (int kk = 0; kk < win; ++kk)
      hinv.block(kk * p, kk * p, p, p) =
          Eigen::PartialPivLU<Mat>(f.H(kk)).solve(Mat::Identity(p, p));
    Mat omega2 = uhat * wg_lt * f.S2().topLeftCorner(np, np).transpose() * hinv;
    int safe = std::max(0, rep.valid_rows - ng - 1);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < safe; ++i)
      for (int j = 0; j < safe; ++j) {
        num += (rep.omega.block(i * p, j * p, p, p) - omega2.block(i * p, j * p, p, p))
                   .squaredNorm();
        den += rep.omega.block(i * p, j * p, p, p).squaredNorm();
      }
    rep.alternative_residual = std::sqrt(num) / std::max(1.0, std::sqrt(den));
  }
  // connection on the first family: P1' W_C = omega P1
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    cd x(unif(rng) * 2.0, unif(rng) * 0.5);
    Mat stacked(np, p);
    for (int m = 0; m < win; ++m) stacked.block(m * p, 0, p, p) = f.P1(m).eval(x);
    for (int i = 0; i < rep.valid_rows - nc; ++i) {
      Mat lhs = ft.P1(i).eval(x) * W_C.eval(x);
      Mat rhs = Mat::Zero(p, p);
      for (int j = 0; j < win; ++j)
        rhs += rep.omega.block(i * p, j * p, p, p) * stacked.block(j * p, 0, p, p);
      rep.connection_P_residual = std::max(rep.connection_P_residual, rel_err(lhs, rhs));
    }
  }
  // second-kind connection with the B chi correction (discrete kernels)
  if (k.is_discrete() && kt.is_discrete() && ng > 0) {
    Mat bmat = Mat::Zero(ng * p, ng * p);
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j)
        if (i + j + 1 <= ng) bmat.block(i * p, j * p, p, p) = W_G.coeff(i + j + 1);
    double rmax = std::max(k.rx(), std::max(k.ry(), std::max(kt.rx(), kt.ry())));
    for (int trial = 0; trial < 3; ++trial) {
      cd x = (rmax + 1.5 + trial) * std::exp(cd(0, 0.7 * trial + 0.4));
      Mat chi(ng * p, p);
      for (int m = 0; m < ng; ++m)
        chi.block(m * p, 0, p, p) = std::pow(x, m) * Mat::Identity(p, p);
      Mat corr_all = ft.U().topLeftCorner(np, ng * p) * bmat * chi;
      int check_rows = std::min(rep.valid_rows - nc, win - ng);
      for (int i = 0; i < check_rows; ++i) {
        Mat lhs = cauchy_transform(kt, ft.P1(i), 1).deriv(x, 0) * W_G.eval(x) -
                  corr_all.block(i * p, 0, p, p);
        Mat rhs = Mat::Zero(p, p);
        for (int j = 0; j < win; ++j)
          rhs += rep.omega.block(i * p, j * p, p, p) *
                 cauchy_transform(k, f.P1(j), 1).deriv(x, 0);
        rep.connection_C_residual = std::max(rep.connection_C_residual, rel_err(lhs, rhs));
      }
    }
  }
  // CD kernel connection at random points
  {
    int n_cd = std::min(rep.valid_rows - nc - 1, win - ng - 1);
    int m_g = std::min(n_cd, ng);
    int m_c = std::min(n_cd, nc);
    if (n_cd >= std::max(ng, 1)) {
      for (int trial = 0; trial < 20; ++trial) {
        cd x(unif(rng), 0.3 * unif(rng));
        cd y(unif(rng), 0.3 * unif(rng));
        Mat lhs = Mat::Zero(p, p);
        for (int kk = 0; kk < n_cd; ++kk)
          lhs += ft.P2(kk).eval(y).transpose() *
                 Eigen::PartialPivLU<Mat>(ft.H(kk)).solve(ft.P1(kk).eval(x));
        lhs = lhs * W_C.eval(x);
        Mat rhs = Mat::Zero(p, p);
        for (int kk = 0; kk < n_cd; ++kk)
          rhs += f.P2(kk).eval(y).transpose() *
                 Eigen::PartialPivLU<Mat>(f.H(kk)).solve(f.P1(kk).eval(x));
        rhs = W_G.eval(y) * rhs;
        // wing correction
        Mat prow(p, (m_c + ng) * p);
        for (int j = 0; j < m_c + ng; ++j) {
          int idx = n_cd - m_c + j;
          prow.block(0, j * p, p, p) =
              ft.P2(idx).eval(y).transpose() *
              Eigen::PartialPivLU<Mat>(ft.H(idx)).solve(Mat::Identity(p, p));
        }
        Mat pcol((m_g + nc) * p, p);
        for (int j = 0; j < m_g + nc; ++j)
          pcol.block(j * p, 0, p, p) = f.P1(n_cd - m_g + j).eval(x);
        Mat wings = Mat::Zero((m_c + ng) * p, (m_g + nc) * p);
        // omega^G wing: rows n..n+ng-1, cols n-m_g..n-1
        for (int i = 0; i < ng; ++i)
          for (int j = 0; j < m_g; ++j) {
            int ri = n_cd + i, cj = n_cd - m_g + j;
            if (cj >= ri - ng && cj <= ri + nc)
              wings.block((m_c + i) * p, j * p, p, p) = rep.omega.block(ri * p, cj * p, p, p);
          }
        // -omega^C wing: rows n-m_c..n-1, cols n..n+nc-1
        for (int i = 0; i < m_c; ++i)
          for (int j = 0; j < nc; ++j) {
            int ri = n_cd - m_c + i, cj = n_cd + j;
            if (cj >= ri - ng && cj <= ri + nc)
              wings.block(i * p, (m_g + j) * p, p, p) = -rep.omega.block(ri * p, cj * p, p, p);
          }
        rhs -= prow * wings * pcol;
        rep.cd_connection_residual = std::max(rep.cd_connection_residual, rel_err(lhs, rhs));
      }
    }
  }
  // mixed CD connection (discrete kernels, Geronimus case)
  if (k.is_discrete() && kt.is_discrete() && nc == 0 && ng > 0) {
    int n_cd = std::min(rep.valid_rows - 1, win - ng - 1);
    if (n_cd >= ng) {
      double rmax = std::max({k.rx(), k.ry(), kt.rx(), kt.ry()});
      SecondKind sk = second_kind(f, k);
      SecondKind skt = second_kind(ft, kt);
      auto vg = bivariate_coupling_in_x(W_G);
      for (int trial = 0; trial < 5; ++trial) {
        cd x = (rmax + 2.0 + 0.3 * trial) * std::exp(cd(0, 1.1 * trial + 0.2));
        cd y(unif(rng), 0.2 * unif(rng));
        Mat lhs = Mat::Zero(p, p);
        for (int kk = 0; kk < n_cd; ++kk)
          lhs += ft.P2(kk).eval(y).transpose() *
                 Eigen::PartialPivLU<Mat>(ft.H(kk)).solve(skt.C1[kk]->deriv(x, 0));
        lhs = lhs * W_G.eval(x);
        Mat rhs = Mat::Zero(p, p);
        for (int kk = 0; kk < n_cd; ++kk)
          rhs += f.P2(kk).eval(y).transpose() *
                 Eigen::PartialPivLU<Mat>(f.H(kk)).solve(sk.C1[kk]->deriv(x, 0));
        rhs = W_G.eval(y) * rhs;
        Mat vxy = Mat::Zero(p, p);
        for (size_t kk = 0; kk < vg.size(); ++kk)
          vxy += vg[kk].eval(y) * std::pow(x, static_cast<double>(kk));
        rhs += vxy;
        Mat prow(p, ng * p);
        for (int j = 0; j < ng; ++j) {
          int idx = n_cd + j;
          prow.block(0, j * p, p, p) =
              ft.P2(idx).eval(y).transpose() *
              Eigen::PartialPivLU<Mat>(ft.H(idx)).solve(Mat::Identity(p, p));
        }
        Mat ccol(ng * p, p);
        for (int j = 0; j < ng; ++j)
          ccol.block(j * p, 0, p, p) = sk.C1[n_cd - ng + j]->deriv(x, 0);
        Mat wing = Mat::Zero(ng * p, ng * p);
        for (int i = 0; i < ng; ++i)
          for (int j = 0; j < ng; ++j) {
            int ri = n_cd + i, cj = n_cd - ng + j;
            if (cj >= ri - ng)
              wing.block(i * p, j * p, p, p) = rep.omega.block(ri * p, cj * p, p, p);
          }
        rhs -= prow * wing * ccol;
        rep.cd_mixed_residual = std::max(rep.cd_mixed_residual, rel_err(lhs, rhs));
      }
    }
  }
  return rep;
}

}  // namespace mbp
