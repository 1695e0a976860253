#pragma once

#include <memory>
#include <vector>

#include "mbp/matpoly.hpp"

namespace mbp {

/// A function of one complex variable with exact derivatives of any order,
/// taking p x q matrix values.
class MatrixFn {
 public:
  virtual ~MatrixFn() = default;
  virtual int rows() const = 0;
  virtual int cols() const = 0;
  virtual Mat deriv(cd z, int order) const = 0;  // plain derivative, no factorial
  Mat operator()(cd z) const { return deriv(z, 0); }
};

class MatPolyFn : public MatrixFn {
 public:
  explicit MatPolyFn(MatPoly poly) : poly_(std::move(poly)) {}
  int rows() const override { return poly_.rows(); }
  int cols() const override { return poly_.cols(); }
  Mat deriv(cd z, int order) const override { return poly_.deriv_eval(z, order); }
  const MatPoly& poly() const { return poly_; }

 private:
  MatPoly poly_;
};

/// One Jordan chain of length kappa at a fixed eigenvalue: Taylor
/// coefficients, about the eigenvalue, of the right and left root
/// polynomials.
struct JordanChain {
  int kappa = 0;
  std::vector<Vec> right;    // r_l, l = 0..kappa-1
  std::vector<RowVec> left;  // l_l
};

struct EigenvalueData {
  cd x;
  std::vector<JordanChain> chains;
  int alpha() const {
    int a = 0;
    for (const auto& c : chains) a += c.kappa;
    return a;
  }
};

/// Spectral data of a monic matrix polynomial: eigenvalues, Jordan chains,
/// the assembled Jordan pair (X, J) and the triple completion Y.
class SpectralData {
 public:
  SpectralData(int p, std::vector<EigenvalueData> eigs);

  int p() const { return p_; }
  int alpha_total() const { return alpha_total_; }
  const std::vector<EigenvalueData>& eigs() const { return eigs_; }

  Mat X() const;  // p x alpha_total
  Mat J() const;  // alpha_total x alpha_total, upper Jordan blocks

  /// Right root polynomial of chain (a, i) as a p x 1 MatPoly in x.
  MatPoly right_root_poly(int a, int i) const;
  /// Left root polynomial of chain (a, i) as a 1 x p MatPoly in x.
  MatPoly left_root_poly(int a, int i) const;

  /// Column offset of chain (a, i) inside alpha_total-wide jet matrices.
  int chain_offset(int a, int i) const;

 private:
  int p_;
  int alpha_total_;
  std::vector<EigenvalueData> eigs_;
};

/// Forward construction: synthesize the monic polynomial from user right
/// chains, then fill in left chains (unless supplied) by solving the left
/// Jordan-chain equations of the synthesized polynomial.
struct SpectralPair {
  MatPoly W;
  SpectralData data;
};
SpectralPair spectral_data_forward(int p, std::vector<EigenvalueData> eigs_right);

/// Backward construction from a matrix polynomial with well separated
/// eigenvalue clusters; only semisimple structure (all partial
/// multiplicities one) is recovered.
SpectralData spectral_data_from_poly(const MatPoly& W);

/// Max residual of the defining identities: A_0 X + ... + X J^N, left and
/// right root-polynomial annihilation orders.
double spectral_data_residual(const MatPoly& W, const SpectralData& sd);

/// Plain spectral jet: blocks [f(x_a), f'(x_a), ..., f^(k-1)(x_a)/(k-1)!]
/// over every eigenvalue and chain; p x (p * alpha_total).
Mat jet(const MatrixFn& f, const SpectralData& sd);

/// Root spectral jet: columns (1/m!) (f r_i)^(m)(x_a); p x alpha_total.
Mat root_jet(const MatrixFn& f, const SpectralData& sd);
Mat root_jet(const MatPoly& f, const SpectralData& sd);

/// Root jets of the monomial family: Q_n = root_jet(I x^n) = X J^n, and the
/// stacked matrices used by the n < N truncated formulas.
Mat monomial_root_jet(int n, const SpectralData& sd);

struct AuxMatrices {
  Mat B;     // Np x Np, built from A_1..A_N
  Mat Q;     // stacked [X; XJ; ...; XJ^{N-1}]
  Mat R;     // (B Q)^{-1} = [Y, JY, ..., J^{N-1} Y]
  Mat Y;     // triple completion
  Mat Wcal;  // coupling matrix of the w-polynomial blocks
};

/// B, Q, R = (BQ)^{-1} and the coupling matrix assembled from the
/// w-polynomials of the left/right root families.
AuxMatrices aux_matrices(const MatPoly& W, const SpectralData& sd);

/// R_n truncation [Y, JY, ..., J^{n-1} Y] of the inverted triple matrix.
Mat triple_R_truncation(const SpectralData& sd, const Mat& Y, int n);

/// Taylor coefficients about x_a of w_{i,j} = l_i W r_j / (x - x_a)^kmax;
/// throws NonzeroRemainder if the division leaves a residue.
std::vector<cd> w_poly(const MatPoly& W, const SpectralData& sd, int a, int i, int j);

/// Coupling matrix alone (the Wcal part of aux_matrices).
Mat w_coupling(const MatPoly& W, const SpectralData& sd);

/// V(x, y) = chi_N(y)^T B chi_N(x) as a polynomial in x whose coefficients
/// are polynomials in y: returns coefficient list over powers of x.
std::vector<MatPoly> bivariate_coupling_in_x(const MatPoly& W);

}  // namespace mbp
