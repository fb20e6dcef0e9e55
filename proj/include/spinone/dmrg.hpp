#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinone/model.hpp"
#include "spinone/mps.hpp"

namespace spinone {

struct DmrgConfig {
  int chi_max = 300;
  int n_sweeps = 5;
  double trunc_target = 1e-10;  // discarded-weight alarm threshold
  double energy_tol = 1e-11;    // early stop on |dE| per full sweep
  int local_max_iterations = 100;
  int local_krylov = 40;
  double local_tol = 1e-11;
  double svd_cutoff = 1e-14;  // relative to the largest singular value
  int target_sz = 0;
  int init_chi = 8;
  std::uint64_t seed = 1;
  // In the Sz = 0 sector, restrict to the spin-flip eigenspace P = +1 or -1
  // (0 = off). Open chains have near-degenerate edge or Neel partners of
  // opposite parity that local sweeps cannot resolve; the exact Sz = 0
  // ground state is spin-flip even.
  int spin_flip_parity = 1;

  void validate() const;
  std::string to_json() const;
};

struct GroundStateResult {
  double energy = 0.0;
  Mps state;
  double max_discarded_weight = 0.0;
  int sweeps_run = 0;
  std::vector<double> energy_history;  // one entry per half-sweep
  std::uint64_t seed = 0;
  bool warm_started = false;
  bool truncation_warning = false;  // max_discarded_weight > trunc_target
  bool converged = false;           // early stop triggered
  double max_local_residual = 0.0;  // over the final sweep
  double max_canonical_error = 0.0; // isometry deviation checked after each sweep
  double spin_flip = 0.0;           // <P> of the returned state (Sz = 0 only)
  int parity_projections = 0;       // projections onto the requested parity
};

// Two-site finite-system DMRG in the Sz sector config.target_sz. Throws
// ConvergenceError if the local eigensolver fails in the final sweep.
GroundStateResult dmrg_ground_state(const ModelParams& params, const DmrgConfig& config,
                                    const Mps* warm_start = nullptr);

}  // namespace spinone
