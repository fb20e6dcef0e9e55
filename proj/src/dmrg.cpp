#include "spinone/dmrg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "environment.hpp"
#include "spinone/errors.hpp"
#include "spinone/lanczos.hpp"

namespace spinone {

void DmrgConfig::validate() const {
  if (chi_max < 1) fail(ErrorCode::domain, "chi_max must be >= 1");
  if (n_sweeps < 1) fail(ErrorCode::domain, "n_sweeps must be >= 1");
  if (!(trunc_target > 0.0) || !(energy_tol > 0.0) || !(local_tol > 0.0))
    fail(ErrorCode::domain, "DMRG tolerances must be > 0");
  if (local_max_iterations < 1 || local_krylov < 2) fail(ErrorCode::domain, "local solver caps too small");
  if (svd_cutoff < 0.0) fail(ErrorCode::domain, "svd_cutoff must be >= 0");
  if (init_chi < 1) fail(ErrorCode::domain, "init_chi must be >= 1");
  if (spin_flip_parity < -1 || spin_flip_parity > 1) fail(ErrorCode::domain, "spin_flip_parity must be -1, 0 or 1");
}

std::string DmrgConfig::to_json() const {
  nlohmann::json j{{"chi_max", chi_max},
                   {"n_sweeps", n_sweeps},
                   {"trunc_target", trunc_target},
                   {"energy_tol", energy_tol},
                   {"local_max_iterations", local_max_iterations},
                   {"local_krylov", local_krylov},
                   {"local_tol", local_tol},
                   {"svd_cutoff", svd_cutoff},
                   {"target_sz", target_sz},
                   {"init_chi", init_chi},
                   {"seed", seed},
                   {"spin_flip_parity", spin_flip_parity}};
  return j.dump();
}

namespace {

using detail::Env;
using detail::SparseSiteOp;

class TwoSiteEngine {
 public:
  TwoSiteEngine(const ModelParams& params, const DmrgConfig& config, Mps state)
      : config_(config), mpo_(build_mpo(params)), psi_(std::move(state)) {
    L_ = psi_.length();
    for (const auto& w : mpo_.sites) ops_.push_back(detail::sparse_op(w));
    channels_ = detail::channel_charges(mpo_);
    for (int j = 0; j + 1 < L_; ++j)
      fused_.push_back(detail::fuse_two_site(ops_[static_cast<std::size_t>(j)], ops_[static_cast<std::size_t>(j + 1)]));
    left_.assign(static_cast<std::size_t>(L_ + 1), Env::unit());
    right_.assign(static_cast<std::size_t>(L_ + 1), Env::unit());
    psi_.spectra.assign(static_cast<std::size_t>(L_ - 1), {});
    right_canonicalize(psi_);
    for (int j = L_ - 1; j >= 2; --j) rebuild_right(j);
  }

  // Returns the Ritz value of the final step.
  double half_sweep(bool to_right) {
    double e = 0.0;
    if (to_right)
      for (int j = 0; j + 1 < L_; ++j) e = step(j, true);
    else
      for (int j = L_ - 2; j >= 0; --j) e = step(j, false);
    return e;
  }

  void reset_sweep_diagnostics() { max_residual_ = 0.0; }
  double max_residual() const { return max_residual_; }
  double max_discarded() const { return max_discarded_; }
  Mps& state() { return psi_; }
  const HamiltonianMPO& mpo() const { return mpo_; }

 private:
  SiteTensor& site(int j) { return psi_.sites[static_cast<std::size_t>(j)]; }
  std::vector<int>& charges(int k) { return psi_.charges[static_cast<std::size_t>(k)]; }

  void rebuild_right(int j) {
    right_[static_cast<std::size_t>(j)] =
        detail::extend_right(right_[static_cast<std::size_t>(j + 1)], site(j), site(j), ops_[static_cast<std::size_t>(j)]);
  }
  void rebuild_left(int j) {
    left_[static_cast<std::size_t>(j + 1)] =
        detail::extend_left(left_[static_cast<std::size_t>(j)], site(j), site(j), ops_[static_cast<std::size_t>(j)]);
  }

  double step(int j, bool to_right) {
    SiteTensor& a = site(j);
    SiteTensor& b = site(j + 1);
    const int chi_l = a.left, chi_r = b.right;
    const Eigen::Index rows = 3 * chi_l, cols = 3 * chi_r;

    Eigen::VectorXd theta(rows * cols);
    Eigen::Map<Eigen::MatrixXd>(theta.data(), rows, cols).noalias() = a.left_grouped() * b.right_grouped();

    std::vector<int> row_q(static_cast<std::size_t>(rows)), col_q(static_cast<std::size_t>(cols));
    const auto& ql = charges(j);
    const auto& qr = charges(j + 2);
    for (int s = 0; s < 3; ++s)
      for (int x = 0; x < chi_l; ++x) row_q[static_cast<std::size_t>(x + chi_l * s)] = ql[static_cast<std::size_t>(x)] + local_sz(s);
    for (int y = 0; y < chi_r; ++y)
      for (int s = 0; s < 3; ++s) col_q[static_cast<std::size_t>(s + 3 * y)] = qr[static_cast<std::size_t>(y)] - local_sz(s);
    Eigen::VectorXd mask(theta.size());
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r)
        mask(r + rows * c) = row_q[static_cast<std::size_t>(r)] == col_q[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
    theta.array() *= mask.array();

    const Env& le = left_[static_cast<std::size_t>(j)];
    const Env& re = right_[static_cast<std::size_t>(j + 2)];
    const SparseSiteOp& op = fused_[static_cast<std::size_t>(j)];
    bool grouped_l = false, grouped_r = false;
    const auto lb = detail::ChargeBlocks::from(ql, grouped_l);
    const auto rb = detail::ChargeBlocks::from(qr, grouped_r);
    const auto& lchan = channels_[static_cast<std::size_t>(j)];
    const auto& rchan = channels_[static_cast<std::size_t>(j + 2)];
    const LinearOp apply = [&](const Vector& x, Vector& y) {
      if (grouped_l && grouped_r)
        detail::apply_two_site_blocked(le, re, op, lb, rb, lchan, rchan, x, y);
      else
        detail::apply_two_site(le, re, op, chi_l, chi_r, x, y);
      y.array() *= mask.array();
    };
    LanczosOptions lo;
    lo.max_krylov = config_.local_krylov;
    lo.max_iterations = config_.local_max_iterations;
    lo.tol = config_.local_tol;
    if (theta.norm() == 0.0) fail(ErrorCode::internal, "dmrg: two-site wavefunction vanished");
    LanczosResult res = lanczos_lowest(apply, theta, lo);
    if (!std::isfinite(res.value) || !res.vector.allFinite())
      throw ConvergenceError("dmrg: local eigensolver produced non-finite values at bond " + std::to_string(j),
                             res.residual);
    max_residual_ = std::max(max_residual_, res.residual);

    Eigen::Map<const Eigen::MatrixXd> tm(res.vector.data(), rows, cols);
    BlockSvd svd = block_svd(tm, row_q, col_q, config_.chi_max, config_.svd_cutoff);
    max_discarded_ = std::max(max_discarded_, svd.discarded_weight);
    svd.s /= svd.s.norm();
    auto& spectrum = psi_.spectra[static_cast<std::size_t>(j)];
    spectrum.assign(svd.s.data(), svd.s.data() + svd.s.size());
    std::sort(spectrum.begin(), spectrum.end(), std::greater<>());
    charges(j + 1) = svd.charges;

    const auto k = static_cast<int>(svd.s.size());
    if (to_right) {
      a = SiteTensor(chi_l, k);
      std::copy(svd.u.data(), svd.u.data() + svd.u.size(), a.data.begin());
      b = SiteTensor(k, chi_r);
      const Eigen::MatrixXd sv = svd.s.asDiagonal() * svd.vt;
      std::copy(sv.data(), sv.data() + sv.size(), b.data.begin());
      if (j + 2 < L_) rebuild_left(j);
      psi_.center = j + 1;
    } else {
      b = SiteTensor(k, chi_r);
      std::copy(svd.vt.data(), svd.vt.data() + svd.vt.size(), b.data.begin());
      a = SiteTensor(chi_l, k);
      const Eigen::MatrixXd us = svd.u * svd.s.asDiagonal();
      std::copy(us.data(), us.data() + us.size(), a.data.begin());
      if (j > 0) rebuild_right(j + 1);
      psi_.center = j;
    }
    return res.value;
  }

  DmrgConfig config_;
  HamiltonianMPO mpo_;
  Mps psi_;
  int L_ = 0;
  std::vector<SparseSiteOp> ops_;
  std::vector<SparseSiteOp> fused_;
  std::vector<std::vector<int>> channels_;
  std::vector<Env> left_;
  std::vector<Env> right_;
  double max_residual_ = 0.0;
  double max_discarded_ = 0.0;
};

}  // namespace

GroundStateResult dmrg_ground_state(const ModelParams& params, const DmrgConfig& config, const Mps* warm_start) {
  params.validate();
  config.validate();
  if (params.L < 4) fail(ErrorCode::size, "dmrg_ground_state requires L >= 4");
  if (std::abs(config.target_sz) > params.L) fail(ErrorCode::domain, "dmrg: target Sz sector is empty");

  GroundStateResult result;
  result.seed = config.seed;
  Mps init;
  if (warm_start != nullptr) {
    if (warm_start->length() != params.L) fail(ErrorCode::domain, "dmrg: warm start has the wrong length");
    if (warm_start->charges.size() != static_cast<std::size_t>(params.L + 1) ||
        warm_start->target_sz() != config.target_sz)
      fail(ErrorCode::domain, "dmrg: warm start is not labelled with the target Sz sector");
    init = *warm_start;
    result.warm_started = true;
  } else {
    init = random_mps(params.L, std::min(config.chi_max, config.init_chi), config.target_sz, config.seed);
  }

  double residual = 0.0, discarded = 0.0;
  auto run = [&](Mps start) {
    TwoSiteEngine engine(params, config, std::move(start));
    double previous = mpo_expectation(engine.state(), engine.mpo());
    for (int sweep = 0; sweep < config.n_sweeps; ++sweep) {
      engine.reset_sweep_diagnostics();
      result.energy_history.push_back(engine.half_sweep(true));
      const double e = engine.half_sweep(false);
      result.energy_history.push_back(e);
      ++result.sweeps_run;
      result.max_canonical_error = std::max(result.max_canonical_error, canonical_form_error(engine.state(), 0));
      if (std::abs(e - previous) < config.energy_tol) {
        result.converged = true;
        break;
      }
      previous = e;
    }
    residual = engine.max_residual();
    discarded = std::max(discarded, engine.max_discarded());
    constexpr double kLocalFailure = 1e-5;
    if (residual > kLocalFailure * std::max(1.0, std::abs(previous)))
      throw ConvergenceError("dmrg: local eigensolver residual " + std::to_string(residual) + " in the final sweep",
                             residual);
    return std::move(engine.state());
  };

  Mps psi = run(std::move(init));
  const int parity = config.target_sz == 0 ? config.spin_flip_parity : 0;
  if (parity != 0) {
    // Project onto the requested parity and relax; a final projection without
    // sweeps pins the returned state if the relaxation drifted.
    constexpr double kParityTol = 1e-9;
    auto project = [&](const Mps& m) {
      double w = 0.0;
      Mps out = project_spin_flip(m, parity, config.chi_max, config.svd_cutoff, &w);
      discarded = std::max(discarded, w);
      ++result.parity_projections;
      return out;
    };
    for (int round = 0; round < 2 && parity * spin_flip_expectation(psi) < 1.0 - kParityTol; ++round) {
      Mps start;
      try {
        start = project(psi);
      } catch (const Error&) {
        // The sweeps landed in the other parity sector; restart from a projected random state.
        start = project(random_mps(params.L, std::min(config.chi_max, config.init_chi), 0, config.seed + 1));
      }
      result.converged = false;
      psi = run(std::move(start));
    }
    if (parity * spin_flip_expectation(psi) < 1.0 - kParityTol) psi = project(psi);
    result.spin_flip = spin_flip_expectation(psi);
  } else if (config.target_sz == 0) {
    result.spin_flip = spin_flip_expectation(psi);
  }

  result.max_local_residual = residual;
  result.state = std::move(psi);
  result.energy = mpo_expectation(result.state, build_mpo(params));
  result.max_discarded_weight = discarded;
  result.truncation_warning = result.max_discarded_weight > config.trunc_target;
  return result;
}

}  // namespace spinone
