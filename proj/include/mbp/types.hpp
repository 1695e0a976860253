#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mbp {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RowVec = Eigen::RowVectorXcd;

// Tolerances used across the library; values documented in the README.
namespace tol {
inline constexpr double id = 1e-10;     // monic / identity detection (relative)
inline constexpr double res = 1e-10;    // residual acceptance (relative)
inline constexpr double clust = 1e-7;   // eigenvalue cluster radius
inline constexpr double sing = 1e-12;   // reciprocal-condition singularity threshold
inline constexpr double fac = 1e-9;     // factorization residual (relative Frobenius)
}  // namespace tol

enum class Err {
  NonMonic,
  ClusterAmbiguous,
  SingularQ,
  NonzeroRemainder,
  InsufficientMoments,
  NoCauchyProvider,
  SpectrumHitsSupport,
  HankelUnsupported,
  RadiusTooSmall,
  QuasidefinitenessFailure,
  SingularLeadingBlock,
  NoPoisedSet,
  SingularJetBlock,
  SingularPoisedCandidate,
  NonzeroDivisionRemainder,
  SingularUvarovMatrix,
  WindowTooSmall,
  NonzeroT2,
  UnknownSeries,
  DimensionMismatch,
  SchemaError,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what, int index = -1)
      : std::runtime_error(what), code_(code), index_(index) {}
  Err code() const { return code_; }
  // For QuasidefinitenessFailure this is the first singular truncation size.
  int index() const { return index_; }

 private:
  Err code_;
  int index_;
};

[[noreturn]] inline void fail(Err code, const std::string& what, int index = -1) {
  throw Error(code, what, index);
}

// Reciprocal condition number estimate from the full SVD.
double rcond(const Mat& a);

// Relative Frobenius deviation ||a-b|| / max(||a||, ||b||, 1e-300).
double rel_err(const Mat& a, const Mat& b);

double binom(int n, int k);
double falling(int n, int k);  // n (n-1) ... (n-k+1)

}  // namespace mbp
