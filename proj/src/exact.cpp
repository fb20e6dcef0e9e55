#include "spinone/exact.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "spinone/errors.hpp"
#include "spinone/lanczos.hpp"

namespace spinone {

void apply_sign_convention(Eigen::VectorXd& v) {
  if (v.size() == 0) return;
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0.0) v = -v;
}

namespace {

Eigen::VectorXd embed(const Eigen::VectorXd& sector_vec, const std::vector<std::int64_t>& basis, std::int64_t dim) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < basis.size(); ++i) full(basis[i]) = sector_vec(static_cast<Eigen::Index>(i));
  return full;
}

}  // namespace

EDGroundState ed_ground_state(const ModelParams& params, int sector, const EDOptions& options) {
  params.validate();
  if (params.L > options.max_L)
    fail(ErrorCode::size, "ed_ground_state: L=" + std::to_string(params.L) + " exceeds guard " +
                              std::to_string(options.max_L));
  const auto basis = total_sz_sector_basis(params.L, sector);
  const SparseMatrix H = build_sector(params, basis);
  const auto n = static_cast<Eigen::Index>(basis.size());

  EDGroundState out;
  out.L = params.L;
  out.sector = sector;
  Eigen::VectorXd ground, excited;

  if (n <= options.dense_cutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(H.toDense()));
    out.energy = es.eigenvalues()(0);
    ground = es.eigenvectors().col(0);
    if (n > 1) {
      out.gap = es.eigenvalues()(1) - out.energy;
      excited = es.eigenvectors().col(1);
    }
    out.residual = (H * ground - out.energy * ground).norm();
  } else {
    const LinearOp op = [&H](const Vector& x, Vector& y) { y.noalias() = H * x; };
    std::mt19937_64 rng(0x5eedULL + static_cast<unsigned>(params.L));
    std::normal_distribution<double> gauss;
    Vector start(n);
    for (Eigen::Index i = 0; i < n; ++i) start(i) = gauss(rng);

    LanczosOptions lo;
    lo.tol = options.tol;
    lo.max_iterations = options.max_iterations;
    lo.max_krylov = static_cast<int>(std::min<std::int64_t>(n, n > 200000 ? 60 : 150));
    LanczosResult g = lanczos_lowest(op, start, lo);
    if (!g.converged)
      throw ConvergenceError("ed_ground_state: Lanczos did not converge (residual " + std::to_string(g.residual) + ")",
                             g.residual);
    out.energy = g.value;
    out.residual = g.residual;
    ground = std::move(g.vector);

    const Vector deflate[] = {ground};
    for (Eigen::Index i = 0; i < n; ++i) start(i) = gauss(rng);
    LanczosResult e = lanczos_lowest(op, start, lo, deflate);
    if (!e.converged)
      throw ConvergenceError("ed_ground_state: excited-state Lanczos did not converge", e.residual);
    out.gap = e.value - out.energy;
    excited = std::move(e.vector);
  }

  out.degenerate = out.gap < kDegeneracyGap;
  apply_sign_convention(ground);
  const std::int64_t dim = hilbert_dim(params.L);
  out.vector = embed(ground, basis, dim);
  if (excited.size() > 0) {
    apply_sign_convention(excited);
    out.excited = embed(excited, basis, dim);
  }
  return out;
}

EDGroundState ed_ground_state_global(const ModelParams& params, const EDOptions& options) {
  params.validate();
  // Spin-flip symmetry maps sector s onto -s, so only s >= 0 is diagonalized.
  EDGroundState best;
  bool have = false;
  for (int s = 0; s <= params.L; ++s) {
    EDGroundState g = ed_ground_state(params, s, options);
    const double slack = 1e-12 * std::max(1.0, std::abs(g.energy));
    if (!have || g.energy < best.energy - slack) {
      best = std::move(g);
      have = true;
    }
  }
  return best;
}

}  // namespace spinone
