#pragma once

#include <random>
#include <string>

#include "mbp/factor.hpp"

namespace mbp {

/// Outcome of one transformation route: perturbed families 0..n and
/// quasitau blocks, tagged by the route that produced them.
struct TransformResult {
  std::string route;
  int n = 0;
  std::vector<MatPoly> P1;
  std::vector<MatPoly> P2;
  std::vector<Mat> H;
  /// Set when the second family could only be recovered as P2^T A_N with a
  /// singular leading coefficient (the stored P2 holds the product).
  bool p2_up_to_leading = false;

  /// Max relative deviation against another route over P1/P2 coefficients
  /// and H blocks for indices 0..upto.
  double deviation(const TransformResult& other, int upto, bool compare_p2 = true) const;
};

/// Perturb the kernel, refactorize; the canonical oracle for every route.
TransformResult geronimus_direct(const KernelRep& k, const MatPoly& W_G,
                                 const std::vector<MassTerm>& masses, const SpectralData* sd,
                                 int n);

/// Spectral Christoffel-Geronimus formulas, including the truncated branch
/// for n below the perturbing degree.
TransformResult geronimus_spectral(const Factorization& f, const KernelRep& k,
                                   const MatPoly& W_G, const SpectralData& sd,
                                   const std::vector<MassTerm>& masses, int n);

/// Nonspectral route via pairings against the perturbed kernel; works for
/// singular leading coefficients (then P2 is recovered up to A_N).
TransformResult geronimus_nonspectral(const Factorization& f, const KernelRep& k,
                                      const MatPoly& W_G, const std::vector<MassTerm>& masses,
                                      const SpectralData* sd, int n);

/// Polynomial inverse of a unimodular matrix polynomial.
MatPoly unimodular_inverse(const MatPoly& W);

enum class GURoute { Direct, Spectral, Mixed };

TransformResult geronimus_uvarov(const Factorization& f, const KernelRep& k, const MatPoly& W_C,
                                 const MatPoly& W_G, const std::vector<MassTerm>& masses,
                                 const SpectralData* sd_G, int n, GURoute route);

/// Uvarov additive perturbation via Christoffel-Darboux kernel jets.
TransformResult uvarov(const Factorization& f, const KernelRep& k,
                       const std::vector<UvarovTerm>& terms, int n);

/// Direct refactorization of the Uvarov-perturbed kernel.
TransformResult uvarov_direct(const KernelRep& k, const std::vector<UvarovTerm>& terms, int n);

/// Deterministic greedy poised-column search: returns scalar column indices
/// whose square submatrix is well conditioned.  The canonical leading set is
/// tried first.
std::vector<int> poised_set_search(const Mat& rows, int need);

struct ResolventReport {
  Mat omega;      // window of the resolvent
  int valid_rows; // rows with truncation-exact entries
  double band_residual = 0.0;
  double last_subdiag_residual = 0.0;  // omega_{N+k,k} = H'_{N+k} A_N H_k^{-1}
  double alternative_residual = 0.0;   // against H' S2'^{-T} W_G(L^T) S2^T H^{-1}
  double connection_P_residual = 0.0;  // P' W_C = omega P on polynomials
  double connection_C_residual = 0.0;  // second-kind connection with B chi correction
  double cd_connection_residual = 0.0; // CD kernel connection at random points
  double cd_mixed_residual = 0.0;      // mixed CD connection (discrete kernels)
};

/// Computes the resolvent from both factorizations and verifies band
/// structure, the last-subdiagonal identity and all connection formulas.
/// Pass W_C = I for a pure Geronimus transformation.
ResolventReport resolvent_and_connection(const Factorization& f, const Factorization& ft,
                                         const KernelRep& k, const KernelRep& kt,
                                         const MatPoly& W_C, const MatPoly& W_G,
                                         std::mt19937_64& rng);

}  // namespace mbp
