#pragma once

#include <functional>
#include <span>

#include <Eigen/Dense>

namespace spinone {

using Vector = Eigen::VectorXd;

// y = A x for a real symmetric operator A.
using LinearOp = std::function<void(const Vector& x, Vector& y)>;

struct LanczosOptions {
  int max_krylov = 100;      // Krylov dimension before an explicit restart
  int max_iterations = 500;  // total matvecs across restarts
  double tol = 1e-10;        // residual ||A x - theta x|| target, scaled by max(1, |theta|)
};

struct LanczosResult {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;  // true residual of the returned pair
  int iterations = 0;
  bool converged = false;
};

// Lowest eigenpair of A restricted to the orthogonal complement of
// `deflate` (each entry must be a unit vector). Full reorthogonalization.
// The returned value never exceeds the Rayleigh quotient of `start`.
LanczosResult lanczos_lowest(const LinearOp& apply, const Vector& start, const LanczosOptions& options,
                             std::span<const Vector> deflate = {});

}  // namespace spinone
