#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spinone/dmrg.hpp"
#include "spinone/exact.hpp"
#include "spinone/model.hpp"
#include "spinone/mps.hpp"

namespace spinone {

// Full-basis amplitude vector (site 1 most significant digit).
struct DenseState {
  int L = 0;
  Eigen::VectorXd vector;
};

using StateHandle = std::variant<DenseState, Mps>;

int state_length(const StateHandle& a);
double state_norm(const StateHandle& a);

// |<a|b>|, clamped to [0, 1]. Exactly symmetric. Throws Error(domain) when
// the lengths differ or either state is off unit norm by more than 1e-10.
double fidelity(const StateHandle& a, const StateHandle& b);

// 2 (1 - F) / (L delta^2). Throws Error(domain) unless 0 <= F <= 1 and delta > 0.
double susceptibility_from_fidelity(double fidelity, int L, double delta);

// Normalized Schmidt coefficients across the bond with `cut` sites on the
// left, sorted descending. Dense states use an SVD of the reshaped amplitude
// matrix; MPS states move the orthogonality center onto the bond.
std::vector<double> schmidt_values(const StateHandle& a, int cut);

// Von Neumann entropy of p_i = s_i^2, dropping p_i < 1e-15.
double entropy_bits_from_schmidt(const std::vector<double>& s);
double entropy_nats_from_schmidt(const std::vector<double>& s);

// Half-chain default: cut = L/2. Throws Error(domain) unless 1 <= cut <= L-1.
double entanglement_entropy(const StateHandle& a, int cut);
double entanglement_entropy(const StateHandle& a);
double entanglement_entropy_nats(const StateHandle& a, int cut);

enum class SolverKind { ed, dmrg };

std::string to_string(SolverKind kind);
SolverKind solver_from_string(const std::string& name);

struct SolverSettings {
  SolverKind kind = SolverKind::ed;
  int sector = 0;  // total Sz sector used at both endpoints
  EDOptions ed;
  DmrgConfig dmrg;
};

// A ground state together with the diagnostics that travel into result rows.
struct SolvedState {
  StateHandle state;
  double energy = 0.0;
  double residual = 0.0;
  double max_discarded_weight = 0.0;
  bool degenerate = false;
  bool truncation_warning = false;
  bool warm_started = false;
  int sweeps = 0;
  int parity_projections = 0;  // DMRG states projected onto the spin-flip sector
};

// Ground state in settings.sector. For DMRG, `warm` (an Mps) seeds the sweep.
SolvedState solve_ground_state(const ModelParams& params, const SolverSettings& settings,
                               const StateHandle* warm = nullptr);

struct SusceptibilityResult {
  double fidelity = 1.0;
  double susceptibility = 0.0;
  bool reliability_warning = false;  // degeneracy flagged at either endpoint
  SolvedState at_d;
  SolvedState at_d_delta;
};

// S(D) = 2 [1 - F(D, D + delta)] / (L delta^2) with both ground states taken
// in the same sector and with the same settings. The D + delta state is warm
// started from the D state on the DMRG path.
SusceptibilityResult fidelity_susceptibility(const ModelParams& params, double delta, const SolverSettings& settings,
                                             const StateHandle* warm = nullptr);

// One sampled point of the sweep tables.
struct ObservablePoint {
  double lambda = 1.0;
  int L = 0;
  double D = 0.0;
  double delta = 1e-3;
  double fidelity = 1.0;
  double susceptibility = 0.0;
  double entropy_bits = 0.0;
  SolverKind solver = SolverKind::ed;
  double max_discarded_weight = 0.0;
  double residual = 0.0;
  std::string flags;  // ';'-separated markers, empty when clean

  // Throws Error(domain) when a range invariant is violated.
  void check_invariants() const;
};

// Full pipeline for one (L, D): both ground states, F, S and the half-chain
// entropy at D. `warm` seeds DMRG; the D + delta state is returned through
// `next_warm` when non-null so the caller can chain along increasing D.
ObservablePoint compute_point(const ModelParams& params, double delta, const SolverSettings& settings,
                              const StateHandle* warm = nullptr, StateHandle* next_warm = nullptr);

}  // namespace spinone
