#include "spinone/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "spinone/errors.hpp"

namespace spinone {

namespace {

void project_out(Vector& w, std::span<const Vector> deflate) {
  for (const Vector& d : deflate) w -= d.dot(w) * d;
}

}  // namespace

LanczosResult lanczos_lowest(const LinearOp& apply, const Vector& start, const LanczosOptions& options,
                             std::span<const Vector> deflate) {
  const Eigen::Index n = start.size();
  if (n == 0) fail(ErrorCode::domain, "lanczos: empty operator");
  const Eigen::Index free_dim = n - static_cast<Eigen::Index>(deflate.size());
  if (free_dim <= 0) fail(ErrorCode::domain, "lanczos: deflation exhausts the space");

  Vector x = start;
  project_out(x, deflate);
  if (x.norm() == 0.0) fail(ErrorCode::domain, "lanczos: start vector vanishes after deflation");
  x.normalize();

  LanczosResult result;
  const int krylov_cap = static_cast<int>(std::min<Eigen::Index>(std::max(options.max_krylov, 2), free_dim));
  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(krylov_cap));
  std::vector<double> alpha, beta;
  Vector w(n);

  while (true) {
    basis.clear();
    alpha.clear();
    beta.clear();
    basis.push_back(x);
    double theta = 0.0;
    Eigen::VectorXd ritz;
    bool exhausted = false;
    double estimate = 0.0;

    for (int k = 0;; ++k) {
      apply(basis[static_cast<std::size_t>(k)], w);
      ++result.iterations;
      project_out(w, deflate);
      const double a = basis[static_cast<std::size_t>(k)].dot(w);
      alpha.push_back(a);
      w -= a * basis[static_cast<std::size_t>(k)];
      if (k > 0) w -= beta.back() * basis[static_cast<std::size_t>(k - 1)];
      for (int pass = 0; pass < 2; ++pass)
        for (const Vector& v : basis) w -= v.dot(w) * v;
      project_out(w, deflate);
      const double b = w.norm();

      const auto m = static_cast<Eigen::Index>(alpha.size());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), m - 1))
                                  : Eigen::VectorXd(0);
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      theta = tri.eigenvalues()(0);
      ritz = tri.eigenvectors().col(0);
      estimate = b * std::abs(ritz(m - 1));

      const double scale = std::max(1.0, std::abs(theta));
      exhausted = b <= 1e-14 * scale || m >= free_dim;
      if (exhausted || estimate <= options.tol * scale || m >= krylov_cap ||
          result.iterations >= options.max_iterations)
        break;
      beta.push_back(b);
      basis.push_back(w / b);
    }

    x.setZero();
    for (Eigen::Index i = 0; i < ritz.size(); ++i) x += ritz(i) * basis[static_cast<std::size_t>(i)];
    x.normalize();
    result.value = theta;

    const double scale = std::max(1.0, std::abs(theta));
    const bool done = exhausted || estimate <= options.tol * scale;
    if (done || result.iterations >= options.max_iterations) {
      apply(x, w);
      project_out(w, deflate);
      result.value = x.dot(w);
      result.residual = (w - result.value * x).norm();
      // The recurrence estimate can be optimistic; require the true residual too.
      result.converged = result.residual <= std::max(options.tol, 1e-13) * scale * 10.0 || exhausted;
      if (result.converged || result.iterations >= options.max_iterations) break;
    }
  }
  result.vector = std::move(x);
  return result;
}

}  // namespace spinone
