#include "mbp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace mbp {

struct KernelRep::MomentCache {
  std::mutex mu;
  std::vector<Mat> m;
};

namespace {

// scaled Taylor jet l^(s)(x0)/s! of a polynomial row/matrix
Mat poly_jet(const MatPoly& f, cd x0, int s) {
  double fact = 1.0;
  for (int i = 2; i <= s; ++i) fact *= i;
  return f.deriv_eval(x0, s) / fact;
}

}  // namespace

Vec VecFunctional::apply(const MatPoly& P) const {
  Vec out = Vec::Zero(P.rows());
  for (const auto& t : terms) out += P.deriv_eval(t.node, t.order) * t.coef;
  return out;
}

Vec VecFunctional::apply(const MatrixFn& f) const {
  Vec out = Vec::Zero(f.rows());
  for (const auto& t : terms) out += f.deriv(t.node, t.order) * t.coef;
  return out;
}

Vec VecFunctional::apply_monomial(int k) const {
  Vec out;
  bool init = false;
  for (const auto& t : terms) {
    if (!init) {
      out = Vec::Zero(t.coef.size());
      init = true;
    }
    out += falling(k, t.order) * std::pow(t.node, std::max(0, k - t.order)) * t.coef;
  }
  return out;
}

Mat MatFunctional::apply(const MatPoly& P) const {
  Mat out = Mat::Zero(P.rows(), terms.empty() ? P.rows() : terms[0].coef.cols());
  for (const auto& t : terms) out += P.deriv_eval(t.node, t.order) * t.coef;
  return out;
}

Mat MatFunctional::apply(const MatrixFn& f) const {
  Mat out = Mat::Zero(f.rows(), terms.empty() ? f.rows() : terms[0].coef.cols());
  for (const auto& t : terms) out += f.deriv(t.node, t.order) * t.coef;
  return out;
}

Mat MatFunctional::apply_monomial_id(int k, int p) const {
  Mat out = Mat::Zero(p, p);
  for (const auto& t : terms)
    out += falling(k, t.order) * std::pow(t.node, std::max(0, k - t.order)) * t.coef;
  return out;
}

std::vector<MassTerm> diagonal_masses(const SpectralData& sd, int eig_index, int chain_index,
                                      const std::vector<Vec>& xi_by_order) {
  const auto& e = sd.eigs()[eig_index];
  const int kappa = e.chains[chain_index].kappa;
  if (static_cast<int>(xi_by_order.size()) != kappa)
    fail(Err::DimensionMismatch, "diagonal_masses: one xi vector per order expected");
  std::vector<MassTerm> out;
  for (int m = 0; m < kappa; ++m) {
    MassTerm t;
    t.eig_index = eig_index;
    t.chain_index = chain_index;
    t.order = m;
    double fact = 1.0;
    for (int n = 0; n + m < kappa; ++n) {
      if (n > 0) fact *= n;
      t.xi.terms.push_back({e.x, n, xi_by_order[m + n] / fact});
    }
    out.push_back(std::move(t));
  }
  return out;
}

Mat LebesgueProvider::resolvent_moment(int k, cd z, int order) const {
  // d^order/dz^order int_0^1 x^k/(z-x) dx
  //   = (-1)^order order! int x^k/(z-x)^(order+1)
  //   = -order! sum_j binom(k,j) z^(k-j) int (x-z)^(j-order-1)
  const int s = order + 1;
  cd acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    int e = j - s;
    cd integral;
    if (e == -1)
      integral = std::log((z - 1.0) / z);
    else
      integral = (std::pow(1.0 - z, e + 1) - std::pow(-z, e + 1)) / double(e + 1);
    acc += binom(k, j) * std::pow(z, k - j) * integral;
  }
  double fact = 1.0;
  for (int i = 2; i <= order; ++i) fact *= i;
  return Mat::Constant(1, 1, -fact * acc);
}

KernelRep KernelRep::hankel(std::vector<Mat> moments, double support_radius,
                            std::shared_ptr<CauchyProvider> provider,
                            std::function<Mat(int)> generator) {
  if (moments.empty() && !generator)
    fail(Err::InsufficientMoments, "hankel kernel needs moments or a generator");
  KernelRep k;
  k.variant_ = Variant::Hankel;
  if (!moments.empty())
    k.p_ = static_cast<int>(moments[0].rows());
  else
    k.p_ = static_cast<int>(generator(0).rows());
  k.moments_ = std::make_shared<MomentCache>();
  k.moments_->m = std::move(moments);
  k.generator_ = std::move(generator);
  k.provider_ = std::move(provider);
  k.radius_ = support_radius;
  return k;
}

KernelRep KernelRep::discrete(std::vector<cd> nodes_x, std::vector<cd> nodes_y,
                              std::vector<Mat> weights) {
  if (nodes_x.empty() || nodes_y.empty())
    fail(Err::DimensionMismatch, "discrete kernel: empty node list");
  if (weights.size() != nodes_x.size() * nodes_y.size())
    fail(Err::DimensionMismatch, "discrete kernel: weight count mismatch");
  for (const auto& w : weights)
    if (!w.allFinite()) fail(Err::DimensionMismatch, "discrete kernel: nonfinite weight");
  KernelRep k;
  k.variant_ = Variant::Discrete;
  k.p_ = static_cast<int>(weights[0].rows());
  k.nodes_x_ = std::move(nodes_x);
  k.nodes_y_ = std::move(nodes_y);
  k.weights_ = std::move(weights);
  return k;
}

double KernelRep::rx() const {
  double r = radius_;
  if (is_discrete()) {
    r = 0.0;
    for (cd x : nodes_x_) r = std::max(r, std::abs(x));
  }
  for (const auto& m : masses_)
    for (const auto& t : m.xi.terms) r = std::max(r, std::abs(t.node));
  for (const auto& u : uvarov_)
    for (const auto& t : u.beta.terms) r = std::max(r, std::abs(t.node));
  return r;
}

double KernelRep::ry() const {
  double r = radius_;
  if (is_discrete()) {
    r = 0.0;
    for (cd y : nodes_y_) r = std::max(r, std::abs(y));
  }
  for (const auto& m : masses_) r = std::max(r, std::abs(m.y_point));
  for (const auto& u : uvarov_) r = std::max(r, std::abs(u.y_point));
  return r;
}

const Mat& KernelRep::weight(int i, int j) const {
  return weights_[i * nodes_y_.size() + j];
}

Mat KernelRep::moment(int n) const {
  if (!is_hankel()) fail(Err::HankelUnsupported, "moment(): not a Hankel kernel");
  std::lock_guard<std::mutex> lock(moments_->mu);
  while (static_cast<int>(moments_->m.size()) <= n) {
    if (!generator_)
      fail(Err::InsufficientMoments, "Hankel kernel: moment index beyond stored budget", n);
    moments_->m.push_back(generator_(static_cast<int>(moments_->m.size())));
  }
  return moments_->m[n];
}

int KernelRep::moment_budget() const {
  if (generator_) return 1 << 20;
  std::lock_guard<std::mutex> lock(moments_->mu);
  return static_cast<int>(moments_->m.size()) - 1;
}

Mat KernelRep::base_gram_block(int k, int l) const {
  if (is_hankel()) return moment(k + l);
  Mat out = Mat::Zero(p_, p_);
  for (size_t i = 0; i < nodes_x_.size(); ++i)
    for (size_t j = 0; j < nodes_y_.size(); ++j)
      out += std::pow(nodes_x_[i], k) * std::pow(nodes_y_[j], l) * weight(i, j);
  return out;
}

Mat KernelRep::gram_block(int k, int l) const {
  Mat out = base_gram_block(k, l);
  for (const auto& m : masses_) {
    // <x^k, xi> (1/m!) (l(y) y^l)^(m) at the mass point
    Vec left = m.xi.apply_monomial(k);
    RowVec row = RowVec::Zero(p_);
    for (int s = 0; s <= m.order; ++s)
      row += poly_jet(m.left, m.y_point, s).row(0) * binom(l, m.order - s) *
             std::pow(m.y_point, std::max(0, l - m.order + s));
    out += left * row;
  }
  for (const auto& u : uvarov_)
    out += u.beta.apply_monomial_id(k, p_) * binom(l, u.order) *
           std::pow(u.y_point, std::max(0, l - u.order));
  return out;
}

Mat KernelRep::gram(int n) const {
  Mat g(n * p_, n * p_);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) g.block(k * p_, l * p_, p_, p_) = gram_block(k, l);
  return g;
}

Mat KernelRep::pairing(const MatPoly& P, const MatPoly& Q) const {
  if (P.cols() != p_ || Q.cols() != p_)
    fail(Err::DimensionMismatch, "pairing: polynomial width must match kernel size");
  Mat out = Mat::Zero(P.rows(), Q.rows());
  for (int k = 0; k <= P.degree(); ++k)
    for (int l = 0; l <= Q.degree(); ++l)
      out += P.coeff(k) * gram_block(k, l) * Q.coeff(l).transpose();
  return out;
}

namespace {

// roots of a scalar polynomial with multiplicities, via companion + loose
// clustering (multiple companion roots scatter like eps^(1/m)) and Newton
// refinement on the (m-1)-th derivative
std::vector<EigenvalueCluster> scalar_roots(const MatPoly& det) {
  std::vector<cd> c;
  for (int k = 0; k <= det.degree(); ++k) c.push_back(det.coeff(k)(0, 0));
  while (c.size() > 1 && std::abs(c.back()) <= 1e-12 * det.norm()) c.pop_back();
  if (c.size() <= 1) return {};
  std::vector<Mat> mc;
  for (cd v : c) mc.push_back(Mat::Constant(1, 1, v));
  MatPoly poly(std::move(mc));
  auto roots = spectrum(poly, 2e-5, 3.0);
  for (auto& r : roots) {
    MatPoly g = poly;
    for (int m = 1; m < r.multiplicity; ++m) g = g.derivative();
    for (int it = 0; it < 8; ++it) {
      cd gv = g.eval(r.value)(0, 0);
      cd gp = g.derivative().eval(r.value)(0, 0);
      if (std::abs(gp) == 0.0) break;
      cd step = gv / gp;
      r.value -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(r.value))) break;
    }
  }
  return roots;
}

// scalar long division F / d with matrix numerator: F = Q d + R, deg R < deg d
void divide_by_scalar(const MatPoly& F, const MatPoly& d, MatPoly& quot, MatPoly& rem) {
  const int dd = d.degree();
  cd lead = d.coeff(dd)(0, 0);
  rem = F;
  quot = MatPoly(F.rows(), F.cols());
  for (int k = F.degree() - dd; k >= 0; --k) {
    Mat qk = rem.coeff(k + dd) / lead;
    quot.coeff_ref(k) = qk;
    for (int j = 0; j <= dd; ++j) rem.coeff_ref(k + j) -= d.coeff(j)(0, 0) * qk;
  }
  rem.trim(1e-12 * std::max(1.0, F.norm()));
  quot.trim();
}

}  // namespace

RationalMatrixFn rational_inverse(const MatPoly& W) {
  auto ad = adjugate_det(W);
  MatPoly quot(W.p(), W.p()), rem(W.p(), W.p());
  divide_by_scalar(ad.adj, ad.det, quot, rem);
  RationalMatrixFn out(std::move(quot));
  if (rem.is_zero()) return out;
  auto roots = scalar_roots(ad.det);
  for (const auto& root : roots) {
    const int alpha = root.multiplicity;
    // q_a(y) = det(y) / (y - x_a)^alpha by synthetic division
    std::vector<cd> q;
    for (int k = 0; k <= ad.det.degree(); ++k) q.push_back(ad.det.coeff(k)(0, 0));
    for (int rep = 0; rep < alpha; ++rep) {
      std::vector<cd> next(q.size() - 1);
      cd carry = 0.0;
      for (int k = static_cast<int>(q.size()) - 1; k >= 1; --k) {
        next[k - 1] = q[k] + carry;
        carry = next[k - 1] * root.value;
      }
      q = std::move(next);
    }
    // Taylor series of rem / q_a about the root, orders 0..alpha-1
    auto taylor = [&](const MatPoly& f, int m) {
      double fact = 1.0;
      for (int i = 2; i <= m; ++i) fact *= i;
      return Mat(f.deriv_eval(root.value, m) / fact);
    };
    MatPoly qpoly = MatPoly::scalar(q);
    std::vector<Mat> g(alpha);
    std::vector<cd> qt(alpha);
    for (int m = 0; m < alpha; ++m) qt[m] = qpoly.deriv_eval(root.value, m)(0, 0) / std::tgamma(m + 1.0);
    for (int m = 0; m < alpha; ++m) {
      Mat num = taylor(rem, m);
      for (int s = 1; s <= m; ++s) num -= qt[s] * g[m - s];
      g[m] = num / qt[0];
    }
    for (int s = 1; s <= alpha; ++s) out.add_pole(root.value, s, g[alpha - s]);
  }
  return out;
}

namespace {

// Resolvent moments of a y-rational-reweighted Hankel kernel, given the base
// provider and base moments: d^o/dz^o  int x^k dmu(x) F(x)/(z-x).
class DerivedHankelProvider : public CauchyProvider {
 public:
  DerivedHankelProvider(KernelRep base, RationalMatrixFn F)
      : base_(std::move(base)), F_(std::move(F)) {}

  int p() const override { return base_.p(); }
  double support_radius() const override {
    double r = base_.provider()->support_radius();
    for (const auto& t : F_.poles()) r = std::max(r, std::abs(t.z0));
    return r;
  }

  Mat resolvent_moment(int k, cd z, int o) const override {
    const auto prov = base_.provider();
    const int pp = p();
    Mat out = Mat::Zero(pp, pp);
    // polynomial part of F: x^j/(z-x) = -sum_{m<j} x^m z^{j-1-m} + z^j/(z-x)
    for (int j = 0; j <= F_.poly().degree(); ++j) {
      const Mat& fj = F_.poly().coeff(j);
      if (fj.norm() == 0.0) continue;
      Mat term = Mat::Zero(pp, pp);
      for (int r = 0; r <= o; ++r)
        term += binom(o, r) * prov->resolvent_moment(k, z, r) *
                falling(j, o - r) * std::pow(z, std::max(0, j - (o - r)));
      for (int m = 0; m < j; ++m)
        term -= base_.moment(k + m) * falling(j - 1 - m, o) *
                std::pow(z, std::max(0, j - 1 - m - o));
      out += term * fj;
    }
    // pole parts: 1/((x-a)^s (z-x)) = sum_i (z-a)^(i-s-1(x-a)^-i) + (z-a)^-s/(z-x)
    for (const auto& t : F_.poles()) {
      Mat term = Mat::Zero(pp, pp);
      for (int i = 1; i <= t.order; ++i) {
        Mat resmom = res_moment(k, t.z0, i);
        int e = i - t.order - 1;  // exponent of (z-a), always negative
        term += resmom * inv_power_deriv(z, t.z0, -e, o);
      }
      for (int r = 0; r <= o; ++r)
        term += binom(o, r) * prov->resolvent_moment(k, z, r) *
                inv_power_deriv(z, t.z0, t.order, o - r);
      out += term * t.coef;
    }
    return out;
  }

  // int x^k (x-a)^-i dmu = -provider(k, a, i-1)/(i-1)!
  Mat res_moment(int k, cd a, int i) const {
    double fact = 1.0;
    for (int m = 2; m < i; ++m) fact *= m;
    return -base_.provider()->resolvent_moment(k, a, i - 1) / fact;
  }

  const KernelRep& base() const { return base_; }
  const RationalMatrixFn& F() const { return F_; }

 private:
  KernelRep base_;
  RationalMatrixFn F_;
};

}  // namespace

KernelRep with_y_rational(const KernelRep& k, const RationalMatrixFn& F) {
  if (!k.masses_.empty() || !k.uvarov_.empty())
    fail(Err::HankelUnsupported, "y-side perturbation of a kernel with attached masses");
  if (k.is_discrete()) {
    KernelRep out = k;
    for (size_t i = 0; i < k.nodes_x_.size(); ++i)
      for (size_t j = 0; j < k.nodes_y_.size(); ++j) {
        cd y = k.nodes_y_[j];
        for (const auto& t : F.poles())
          if (std::abs(y - t.z0) < 1e-12)
            fail(Err::SpectrumHitsSupport, "perturbing spectrum touches a support node");
        out.weights_[i * k.nodes_y_.size() + j] = k.weight(static_cast<int>(i),
                                                           static_cast<int>(j)) *
                                                  F.deriv(y, 0);
      }
    return out;
  }
  if (!F.poles().empty() && !k.provider_)
    fail(Err::NoCauchyProvider,
         "Geronimus on bare Hankel moments needs a Cauchy provider");
  // derived Hankel kernel: new moments int x^n dmu F(x)
  KernelRep base = k;
  auto fetch = [base, F](int n) -> Mat {
    Mat out = Mat::Zero(base.p(), base.p());
    for (int j = 0; j <= F.poly().degree(); ++j)
      out += base.moment(n + j) * F.poly().coeff(j);
    if (!F.poles().empty()) {
      for (const auto& t : F.poles()) {
        double fact = 1.0;
        for (int m = 2; m < t.order; ++m) fact *= m;
        out += -base.provider()->resolvent_moment(n, t.z0, t.order - 1) / fact * t.coef;
      }
    }
    return out;
  };
  std::shared_ptr<CauchyProvider> provider;
  if (k.provider_) provider = std::make_shared<DerivedHankelProvider>(base, F);
  double radius = k.radius_;
  for (const auto& t : F.poles()) radius = std::max(radius, std::abs(t.z0));
  return KernelRep::hankel({}, radius, provider, fetch);
}

KernelRep with_x_poly(const KernelRep& k, const MatPoly& W) {
  KernelRep out = k;
  if (k.is_discrete()) {
    for (size_t i = 0; i < k.nodes_x_.size(); ++i) {
      Mat wx = W.eval(k.nodes_x_[i]);
      for (size_t j = 0; j < k.nodes_y_.size(); ++j)
        out.weights_[i * k.nodes_y_.size() + j] =
            wx * k.weight(static_cast<int>(i), static_cast<int>(j));
    }
  } else {
    KernelRep base = k;
    base.masses_.clear();
    base.uvarov_.clear();
    auto fetch = [base, W](int n) -> Mat {
      Mat out2 = Mat::Zero(base.p(), base.p());
      for (int j = 0; j <= W.degree(); ++j) out2 += W.coeff(j) * base.moment(n + j);
      return out2;
    };
    out = KernelRep::hankel({}, k.radius_, nullptr, fetch);
  }
  // fold W(x) into the x-functionals
  auto fold_vec = [&](const VecFunctional& xi) {
    VecFunctional nf;
    for (const auto& t : xi.terms)
      for (int s = 0; s <= t.order; ++s)
        nf.terms.push_back(
            {t.node, s, binom(t.order, s) * W.deriv_eval(t.node, t.order - s) * t.coef});
    return nf;
  };
  auto fold_mat = [&](const MatFunctional& beta) {
    MatFunctional nf;
    for (const auto& t : beta.terms)
      for (int s = 0; s <= t.order; ++s)
        nf.terms.push_back(
            {t.node, s, binom(t.order, s) * W.deriv_eval(t.node, t.order - s) * t.coef});
    return nf;
  };
  out.masses_.clear();
  out.uvarov_.clear();
  for (const auto& m : k.masses_) out.masses_.push_back({m.y_point, m.order, m.left, fold_vec(m.xi)});
  for (const auto& u : k.uvarov_) out.uvarov_.push_back({u.y_point, u.order, fold_mat(u.beta)});
  return out;
}

namespace {

std::vector<ResolvedMass> resolve_masses(const std::vector<MassTerm>& masses,
                                         const SpectralData* sd) {
  std::vector<ResolvedMass> out;
  if (masses.empty()) return out;
  if (!sd) fail(Err::DimensionMismatch, "mass terms require the perturbing spectral data");
  for (const auto& m : masses) {
    const auto& e = sd->eigs().at(m.eig_index);
    const auto& chain = e.chains.at(m.chain_index);
    if (m.order < 0 || m.order >= chain.kappa)
      fail(Err::DimensionMismatch, "mass order exceeds the partial multiplicity");
    ResolvedMass r;
    r.y_point = e.x;
    r.order = m.order;
    r.left = sd->left_root_poly(m.eig_index, m.chain_index);
    r.xi = m.xi;
    out.push_back(std::move(r));
  }
  return out;
}

void check_spectrum_off_support(const KernelRep& k, const MatPoly& W_G) {
  if (!k.is_discrete()) return;
  for (cd y : k.nodes_y()) {
    Mat w = W_G.eval(y);
    if (rcond(w) < tol::sing)
      fail(Err::SpectrumHitsSupport, "sigma(W_G) intersects the y-support");
  }
}

}  // namespace

void check_mass_independence(const std::vector<ResolvedMass>& masses, int p, int probe_degree) {
  if (masses.empty()) return;
  const int rows = static_cast<int>(masses.size());
  Mat probe(rows, (probe_degree + 1) * p);
  for (int r = 0; r < rows; ++r)
    for (int k = 0; k <= probe_degree; ++k)
      probe.block(r, k * p, 1, p) = masses[r].xi.apply_monomial(k).transpose();
  Eigen::JacobiSVD<Mat> svd(probe);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-10 * std::max(1.0, double(s(0))))
    fail(Err::DimensionMismatch, "mass functionals are linearly dependent");
}

void check_uvarov_independence(const std::vector<UvarovTerm>& terms, int p, int probe_degree) {
  if (terms.empty()) return;
  const int nt = static_cast<int>(terms.size());
  Mat probe(nt * p, (probe_degree + 1) * p);
  for (int r = 0; r < nt; ++r)
    for (int k = 0; k <= probe_degree; ++k)
      probe.block(r * p, k * p, p, p) = terms[r].beta.apply_monomial_id(k, p).transpose();
  Eigen::JacobiSVD<Mat> svd(probe);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-10 * std::max(1.0, double(s(0))))
    fail(Err::DimensionMismatch, "Uvarov functionals are linearly dependent");
}

KernelRep geronimus_kernel(const KernelRep& k, const MatPoly& W_G,
                           const std::vector<MassTerm>& masses, const SpectralData* sd) {
  check_spectrum_off_support(k, W_G);
  KernelRep out = with_y_rational(k, rational_inverse(W_G));
  out.masses_ = resolve_masses(masses, sd);
  check_mass_independence(out.masses_, k.p(), 2 * (40 + W_G.degree()));
  return out;
}

KernelRep christoffel_kernel(const KernelRep& k, const MatPoly& W_C) {
  KernelRep out;
  if (k.masses_.empty() && k.uvarov_.empty()) {
    out = with_y_rational(k, RationalMatrixFn(W_C));
    return out;
  }
  // keep attached terms, folding W_C into the y-side
  KernelRep base = k;
  auto saved_masses = k.masses_;
  auto saved_uvarov = k.uvarov_;
  base.masses_.clear();
  base.uvarov_.clear();
  out = with_y_rational(base, RationalMatrixFn(W_C));
  for (auto m : saved_masses) {
    m.left = m.left * W_C;
    out.masses_.push_back(std::move(m));
  }
  for (const auto& u : saved_uvarov) {
    // delta^(m)(y-a) W_C(y) splits into lower-order jets with W_C jets as
    // right factors on the beta coefficients
    for (int s = 0; s <= u.order; ++s) {
      UvarovTerm nt;
      nt.y_point = u.y_point;
      nt.order = u.order - s;
      Mat wjet = poly_jet(W_C, u.y_point, s);
      for (const auto& t : u.beta.terms)
        nt.beta.terms.push_back({t.node, t.order, t.coef * wjet.transpose()});
      out.uvarov_.push_back(std::move(nt));
    }
  }
  return out;
}

KernelRep geronimus_uvarov_kernel(const KernelRep& k, const MatPoly& W_C, const MatPoly& W_G,
                                  const std::vector<MassTerm>& masses, const SpectralData* sd) {
  KernelRep step = geronimus_kernel(k, W_G, masses, sd);
  return with_x_poly(step, W_C);
}

KernelRep uvarov_kernel(const KernelRep& k, const std::vector<UvarovTerm>& terms) {
  KernelRep out = k;
  for (const auto& t : terms) out.uvarov_.push_back(t);
  check_uvarov_independence(out.uvarov_, k.p(), 2 * (40 + static_cast<int>(terms.size())));
  return out;
}

namespace {

cd time_poly(const std::vector<double>& t, cd x) {
  cd acc = 0.0;
  cd pw = x;
  for (double v : t) {
    acc += v * pw;
    pw *= x;
  }
  return acc;
}

}  // namespace

KernelRep toda_weights(const KernelRep& k, const std::vector<double>& t1,
                       const std::vector<double>& t2) {
  if (!k.is_discrete()) fail(Err::HankelUnsupported, "toda_weights: discrete kernel required");
  if (!k.masses_.empty() || !k.uvarov_.empty())
    fail(Err::HankelUnsupported, "toda_weights: kernel has attached masses");
  if (t1.size() > 8 || t2.size() > 8)
    fail(Err::DimensionMismatch, "toda_weights: time vectors capped at length 8");
  KernelRep out = k;
  for (size_t i = 0; i < k.nodes_x_.size(); ++i)
    for (size_t j = 0; j < k.nodes_y_.size(); ++j) {
      cd factor = std::exp(time_poly(t1, k.nodes_x_[i]) - time_poly(t2, k.nodes_y_[j]));
      out.weights_[i * k.nodes_y_.size() + j] =
          factor * k.weight(static_cast<int>(i), static_cast<int>(j));
    }
  return out;
}

KernelRep miwa_shift(const KernelRep& k, int var, cd z, int sign) {
  if (!k.is_discrete()) fail(Err::HankelUnsupported, "miwa_shift: discrete kernel required");
  double r = (var == 1) ? k.rx() : k.ry();
  if (std::abs(z) <= r)
    fail(Err::RadiusTooSmall, "miwa_shift: |z| must exceed the support radius");
  KernelRep out = k;
  for (size_t i = 0; i < k.nodes_x_.size(); ++i)
    for (size_t j = 0; j < k.nodes_y_.size(); ++j) {
      cd factor;
      if (var == 1)
        factor = 1.0 - k.nodes_x_[i] / z;
      else
        factor = 1.0 / (1.0 - k.nodes_y_[j] / z);
      if (sign > 0) factor = 1.0 / factor;
      out.weights_[i * k.nodes_y_.size() + j] =
          factor * k.weight(static_cast<int>(i), static_cast<int>(j));
    }
  return out;
}

namespace {

// mass/uvarov pole contributions shared by both Cauchy sides
void add_side1_mass_poles(const KernelRep& k, const MatPoly& P, RationalMatrixFn& fn) {
  for (const auto& m : k.masses()) {
    Vec left = m.xi.apply(P);
    for (int j = 0; j <= m.order; ++j) {
      RowVec lj = poly_jet(m.left, m.y_point, m.order - j).row(0);
      fn.add_pole(m.y_point, j + 1, left * lj);
    }
  }
  for (const auto& u : k.uvarov_terms())
    fn.add_pole(u.y_point, u.order + 1, u.beta.apply(P));
}

}  // namespace

RationalMatrixFn cauchy_transform(const KernelRep& k, const MatPoly& P, int side) {
  if (!k.is_discrete())
    fail(Err::NoCauchyProvider, "cauchy_transform: exact rationals need a discrete kernel");
  const int p = k.p();
  if (side == 1) {
    RationalMatrixFn fn(MatPoly(P.rows(), p));
    for (size_t j = 0; j < k.nodes_y().size(); ++j) {
      Mat acc = Mat::Zero(P.rows(), p);
      for (size_t i = 0; i < k.nodes_x().size(); ++i)
        acc += P.eval(k.nodes_x()[i]) * k.weight(static_cast<int>(i), static_cast<int>(j));
      fn.add_pole(k.nodes_y()[j], 1, acc);
    }
    add_side1_mass_poles(k, P, fn);
    fn.merge_poles();
    return fn;
  }
  // side 2: build (C(z))^T, poles on the x-side, then transpose
  RationalMatrixFn fnt(MatPoly(p, P.rows()));
  for (size_t i = 0; i < k.nodes_x().size(); ++i) {
    Mat acc = Mat::Zero(p, P.rows());
    for (size_t j = 0; j < k.nodes_y().size(); ++j)
      acc += k.weight(static_cast<int>(i), static_cast<int>(j)) *
             P.eval(k.nodes_y()[j]).transpose();
    fnt.add_pole(k.nodes_x()[i], 1, acc);
  }
  for (const auto& m : k.masses()) {
    // <1/(z-x), xi> row expansion against (1/m!) (l P^T)^(m)
    RowVec row = RowVec::Zero(P.rows());
    MatPoly lpt = m.left * P.transpose();
    row = poly_jet(lpt, m.y_point, m.order).row(0);
    for (const auto& t : m.xi.terms) {
      double fact = 1.0;
      for (int i = 2; i <= t.order; ++i) fact *= i;
      fnt.add_pole(t.node, t.order + 1, fact * t.coef * row);
    }
  }
  for (const auto& u : k.uvarov_terms()) {
    Mat pjet = poly_jet(P, u.y_point, u.order).transpose();
    for (const auto& t : u.beta.terms) {
      double fact = 1.0;
      for (int i = 2; i <= t.order; ++i) fact *= i;
      fnt.add_pole(t.node, t.order + 1, fact * t.coef.transpose() * pjet);
    }
  }
  fnt.merge_poles();
  RationalMatrixFn out(fnt.poly().transpose());
  for (const auto& t : fnt.poles()) out.add_pole(t.z0, t.order, t.coef.transpose());
  return out;
}

namespace {

class ProviderCauchyFn : public MatrixFn {
 public:
  ProviderCauchyFn(const KernelRep& k, MatPoly P) : P_(std::move(P)) {
    prov_ = k.provider();
    rows_ = P_.rows();
    p_ = k.p();
    RationalMatrixFn mass_part(MatPoly(rows_, p_));
    add_side1_mass_poles(k, P_, mass_part);
    mass_ = std::move(mass_part);
  }
  int rows() const override { return rows_; }
  int cols() const override { return p_; }
  Mat deriv(cd z, int order) const override {
    Mat out = mass_.deriv(z, order);
    for (int j = 0; j <= P_.degree(); ++j)
      out += P_.coeff(j) * prov_->resolvent_moment(j, z, order);
    return out;
  }

 private:
  MatPoly P_;
  std::shared_ptr<CauchyProvider> prov_;
  RationalMatrixFn mass_;
  int rows_, p_;
};

}  // namespace

std::shared_ptr<MatrixFn> cauchy_fn(const KernelRep& k, const MatPoly& P, int side) {
  if (k.is_discrete())
    return std::make_shared<RationalMatrixFn>(cauchy_transform(k, P, side));
  if (side != 1) fail(Err::NoCauchyProvider, "cauchy_fn: side 2 needs a discrete kernel");
  if (!k.provider()) fail(Err::NoCauchyProvider, "cauchy_fn: Hankel kernel without provider");
  return std::make_shared<ProviderCauchyFn>(k, P);
}

}  // namespace mbp
