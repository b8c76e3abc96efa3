#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <numeric>
#include <stdexcept>
#include <vector>

namespace iscvx {

/// Cone layout: nonnegative orthant of dimension n_lin followed by
/// second-order cones of the given dimensions.
struct ConeDims {
  int n_lin = 0;
  std::vector<int> soc;

  int total() const {
    return n_lin + std::accumulate(soc.begin(), soc.end(), 0);
  }
  /// Barrier degree: one per linear row, one per second-order cone.
  int degree() const { return n_lin + static_cast<int>(soc.size()); }
};

/// Conic quadratic program
///   minimize    (1/2) x'Px + c'x
///   subject to  A x = b
///               G x + s = h,  s in K.
struct ConeQpProblem {
  Eigen::SparseMatrix<double> P;  // n x n, symmetric PSD (full matrix stored)
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;  // p x n
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;  // m x n
  Eigen::VectorXd h;
  ConeDims dims;

  int n_vars() const { return static_cast<int>(c.size()); }
};

struct ConeQpOptions {
  int max_iters = 200;
  double feastol = 1e-8;
  double abstol = 1e-9;
  double reltol = 1e-9;
  // Fallback thresholds applied to the best iterate when the targets are not
  // reached within the iteration cap.
  double accept_feastol = 1e-7;
  double accept_abstol = 1e-7;
  double accept_reltol = 1e-6;
  double static_reg = 1e-9;
  int refine_steps = 1;
};

struct ConeQpStats {
  int iterations = 0;
  double pres = 0.0;
  double dres = 0.0;
  double gap = 0.0;
  double relgap = 0.0;
  bool reduced_tolerance = false;
};

struct ConeQpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  Eigen::VectorXd s;
  double objective = 0.0;
  ConeQpStats stats;
};

class ConeQpError : public std::runtime_error {
 public:
  ConeQpError(const std::string& msg, const ConeQpStats& st)
      : std::runtime_error(msg), stats(st) {}
  ConeQpStats stats;
};

/// Primal-dual interior-point solve with Nesterov-Todd scaling and a Mehrotra
/// predictor-corrector step; deterministic for identical inputs.
/// Throws ConeQpError (carrying the best residuals) on non-convergence.
ConeQpResult solve_cone_qp(const ConeQpProblem& qp, const ConeQpOptions& opts = {});

}  // namespace iscvx
