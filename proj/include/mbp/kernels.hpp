#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "mbp/rational.hpp"

namespace mbp {

/// Finitely supported vector-valued functional: <P, xi> = sum_t P^(d_t)(c_t) b_t.
struct VecFunctional {
  struct Term {
    cd node;
    int order;
    Vec coef;
  };
  std::vector<Term> terms;

  Vec apply(const MatPoly& P) const;
  Vec apply(const MatrixFn& f) const;
  /// Action on the scalar monomial x^k, used by the independence probe.
  Vec apply_monomial(int k) const;
};

/// Finitely supported matrix-valued functional (Uvarov x-side).
struct MatFunctional {
  struct Term {
    cd node;
    int order;
    Mat coef;
  };
  std::vector<Term> terms;

  Mat apply(const MatPoly& P) const;
  Mat apply(const MatrixFn& f) const;
  Mat apply_monomial_id(int k, int p) const;  // action on x^k I_p
};

/// Geronimus-side mass term: indices into the perturbing polynomial's
/// spectral data plus the x-functional.
struct MassTerm {
  int eig_index = 0;    // a
  int chain_index = 0;  // j
  int order = 0;        // m in 0..kappa_j-1
  VecFunctional xi;
};

/// Hankel (diagonal) mass reduction: constant xi vectors per order produce
/// the equivalent Dirac-jet functionals at the eigenvalue.
std::vector<MassTerm> diagonal_masses(const SpectralData& sd, int eig_index, int chain_index,
                                      const std::vector<Vec>& xi_by_order);

/// Uvarov additive term: y-side Dirac jet at y_point of given order with a
/// matrix-valued x-functional.
struct UvarovTerm {
  cd y_point;
  int order = 0;
  MatFunctional beta;
};

/// Fully resolved Geronimus mass stored inside a kernel: the left root
/// polynomial is frozen at construction time.
struct ResolvedMass {
  cd y_point;        // eigenvalue of the Geronimus polynomial
  int order = 0;     // m
  MatPoly left;      // l_j^{(a)}(y), 1 x p
  VecFunctional xi;  // with any Christoffel factor already folded in
};

/// Exact resolvent moments of a Hankel kernel:
/// d^order/dz^order of integral x^k dmu(x) / (z - x).
class CauchyProvider {
 public:
  virtual ~CauchyProvider() = default;
  virtual int p() const = 0;
  virtual Mat resolvent_moment(int k, cd z, int order) const = 0;
  virtual double support_radius() const = 0;
};

/// Lebesgue measure on [0,1] (scalar): moments 1/(n+1), closed-form
/// resolvent moments with derivatives of every order.
class LebesgueProvider : public CauchyProvider {
 public:
  int p() const override { return 1; }
  Mat resolvent_moment(int k, cd z, int order) const override;
  double support_radius() const override { return 1.0; }
};

/// Concrete matrix of generalized kernels u_{x,y}: block-Hankel moment
/// sequences or discrete bivariate measures, plus attached Geronimus masses
/// and Uvarov terms.
class KernelRep {
 public:
  /// Hankel kernel from explicit moments; the optional generator extends the
  /// sequence on demand.
  static KernelRep hankel(std::vector<Mat> moments, double support_radius,
                          std::shared_ptr<CauchyProvider> provider = nullptr,
                          std::function<Mat(int)> generator = nullptr);

  /// Discrete bivariate kernel; weights are row-major over (i, j).
  static KernelRep discrete(std::vector<cd> nodes_x, std::vector<cd> nodes_y,
                            std::vector<Mat> weights);

  int p() const { return p_; }
  bool is_hankel() const { return variant_ == Variant::Hankel; }
  bool is_discrete() const { return variant_ == Variant::Discrete; }
  double rx() const;
  double ry() const;

  const std::vector<cd>& nodes_x() const { return nodes_x_; }
  const std::vector<cd>& nodes_y() const { return nodes_y_; }
  const Mat& weight(int i, int j) const;
  /// Hankel only; generator-backed moments are cached behind a lock so that
  /// concurrent reads of a shared kernel stay safe.
  Mat moment(int n) const;
  int moment_budget() const;
  const std::vector<ResolvedMass>& masses() const { return masses_; }
  const std::vector<UvarovTerm>& uvarov_terms() const { return uvarov_; }
  std::shared_ptr<CauchyProvider> provider() const { return provider_; }

  /// Gram block G_{k,l} including mass and Uvarov contributions.
  Mat gram_block(int k, int l) const;
  /// Truncated Gram matrix, np x np.
  Mat gram(int n) const;

  /// Sesquilinear pairing sum_k sum_l P_k G_{k,l} Q_l^T.
  Mat pairing(const MatPoly& P, const MatPoly& Q) const;

 private:
  enum class Variant { Hankel, Discrete };
  KernelRep() = default;

  Mat base_gram_block(int k, int l) const;

  struct MomentCache;

  Variant variant_ = Variant::Hankel;
  int p_ = 0;
  // Hankel state; the cache is shared across copies
  std::shared_ptr<MomentCache> moments_;
  std::function<Mat(int)> generator_;
  std::shared_ptr<CauchyProvider> provider_;
  double radius_ = 0.0;
  // Discrete state
  std::vector<cd> nodes_x_, nodes_y_;
  std::vector<Mat> weights_;

  std::vector<ResolvedMass> masses_;
  std::vector<UvarovTerm> uvarov_;

  friend KernelRep geronimus_kernel(const KernelRep&, const MatPoly&,
                                    const std::vector<MassTerm>&, const SpectralData*);
  friend KernelRep christoffel_kernel(const KernelRep&, const MatPoly&);
  friend KernelRep geronimus_uvarov_kernel(const KernelRep&, const MatPoly&, const MatPoly&,
                                           const std::vector<MassTerm>&, const SpectralData*);
  friend KernelRep uvarov_kernel(const KernelRep&, const std::vector<UvarovTerm>&);
  friend KernelRep toda_weights(const KernelRep&, const std::vector<double>&,
                                const std::vector<double>&);
  friend KernelRep miwa_shift(const KernelRep&, int, cd, int);
  friend KernelRep with_y_rational(const KernelRep&, const RationalMatrixFn&);
  friend KernelRep with_x_poly(const KernelRep&, const MatPoly&);
};

/// u W(y)^{-1} plus masses anchored at the spectrum of W; spectral data is
/// required whenever masses are present.
KernelRep geronimus_kernel(const KernelRep& k, const MatPoly& W_G,
                           const std::vector<MassTerm>& masses = {},
                           const SpectralData* sd = nullptr);

/// u W(y): right multiplication in the second variable.
KernelRep christoffel_kernel(const KernelRep& k, const MatPoly& W_C);

/// W_C(x) u W_G(y)^{-1} plus masses with the Christoffel factor folded into
/// the x-functionals.
KernelRep geronimus_uvarov_kernel(const KernelRep& k, const MatPoly& W_C, const MatPoly& W_G,
                                  const std::vector<MassTerm>& masses = {},
                                  const SpectralData* sd = nullptr);

/// u + finitely supported additive terms.
KernelRep uvarov_kernel(const KernelRep& k, const std::vector<UvarovTerm>& terms);

/// exp(t1(x) - t2(y)) reweighting of a discrete kernel.
KernelRep toda_weights(const KernelRep& k, const std::vector<double>& t1,
                       const std::vector<double>& t2);

/// Exact Miwa shift: var 1 minus-shift multiplies weights by (1 - x_i/z),
/// var 2 minus-shift divides by (1 - y_j/z); sign = +1 applies the inverse
/// factor.  Requires |z| above the support radius of the shifted variable.
KernelRep miwa_shift(const KernelRep& k, int var, cd z, int sign);

/// Cauchy transform of P against the kernel.  Side 1 pairs P in x against
/// I/(z-y); side 2 gives C with (C(z))^T = <I/(z-x), P(y)>.  Exact rational
/// for discrete kernels.
RationalMatrixFn cauchy_transform(const KernelRep& k, const MatPoly& P, int side);

/// Cauchy transform as an exact-derivative function handle; also covers
/// Hankel kernels with a provider (side 1).
std::shared_ptr<MatrixFn> cauchy_fn(const KernelRep& k, const MatPoly& P, int side);

/// W(y)^{-1} as polynomial part plus pole terms (matrix partial fractions).
RationalMatrixFn rational_inverse(const MatPoly& W);

/// Hard error unless the mass x-functionals are linearly independent when
/// probed against monomials up to the given degree.
void check_mass_independence(const std::vector<ResolvedMass>& masses, int p, int probe_degree);
void check_uvarov_independence(const std::vector<UvarovTerm>& terms, int p, int probe_degree);

}  // namespace mbp
