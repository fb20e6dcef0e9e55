#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinone/dmrg.hpp"
#include "spinone/exact.hpp"
#include "spinone/observables.hpp"
#include "spinone/scaling.hpp"
#include "spinone/store.hpp"

namespace spinone {

// Sweep description. The config file is a JSON object with the keys of
// to_json(); any subset may be given and command-line flags override it.
struct SweepSpec {
  double lambda = 1.0;
  std::vector<int> sizes;
  double d_start = -0.6;
  double d_stop = 1.6;
  double d_step = 0.05;
  std::vector<double> d_list;  // explicit grid; replaces start/stop/step when non-empty
  double delta = 1e-3;
  std::string solver = "auto";  // ed | dmrg | auto (ED up to ed.max_L)
  int sector = 0;
  DmrgConfig dmrg;
  EDOptions ed;
  std::string out_dir = "spinone-store";
  std::uint64_t seed = 1;
  int threads = 1;
  // Bisection rounds around interior maxima of S after the main grid; 0 = off.
  int refine = 0;
  bool checkpoints = true;

  // Grid points rounded to 1e-12 so that keys are reproducible.
  std::vector<double> d_grid() const;
  SolverKind solver_for(int L) const;
  SolverSettings settings_for(int L) const;
  std::string config_hash(int L) const;
  void validate() const;
  nlohmann::json to_json() const;
  // Overlays the keys present in `j` onto `base`. Unknown keys are an
  // Error(usage).
  static SweepSpec from_json(const nlohmann::json& j, SweepSpec base);
  static SweepSpec from_json(const nlohmann::json& j) { return from_json(j, SweepSpec{}); }
};

SweepSpec load_sweep_spec(const std::string& path, SweepSpec base = SweepSpec{});

// Overlays the DMRG keys of `j` (the keys of DmrgConfig::to_json) onto `base`.
DmrgConfig dmrg_config_from_json(const nlohmann::json& j, DmrgConfig base = DmrgConfig{});

// Spec of the last run recorded in the manifest of `dir`, writing to `dir`.
// Throws Error(io) when there is no manifest.
SweepSpec spec_from_manifest(const std::string& dir);

struct SweepSummary {
  int computed = 0;
  int skipped = 0;
  int errors = 0;
  std::vector<std::string> shards;
  nlohmann::json to_json() const;
};

using SweepLog = std::function<void(const std::string&)>;

// Computes every missing (L, D) key of `spec`, appending rows to the store in
// spec.out_dir. Existing keys are never recomputed. DMRG chains are warm
// started along increasing D within a shard; shards run on up to
// spec.threads workers. Per-point failures become error rows.
SweepSummary run_sweep(const SweepSpec& spec, const SweepLog& log = {});

struct FitOptions {
  std::string transition = "gaussian";       // gaussian | ising
  std::string observable = "susceptibility";  // susceptibility | entropy
  std::optional<int> min_L;
  std::optional<double> window_lo, window_hi;
  std::optional<double> lambda, delta;
  std::optional<std::string> solver;
};

// Default D window of a transition, inclusive: gaussian [0.5, 1.5], ising
// [-0.6, 0.1].
std::pair<double, double> transition_window(const std::string& transition);

// Per-size curves from store rows (error rows and rows outside the filters are
// dropped). Throws Error(usage) if two rows collide on (L, D).
std::vector<ObservableCurve> curves_from_rows(const std::vector<StoreRow>& rows, const FitOptions& opts);

// find_peak per size, fit_fss, and for the susceptibility fit_power_law with
// Delta_V and K. Boundary or missing peaks exclude the size with a warning.
nlohmann::json fit_rows(const std::vector<StoreRow>& rows, const FitOptions& opts);
nlohmann::json fit_store(const std::string& dir, const FitOptions& opts);
FitOptions fit_options_from_json(const nlohmann::json& j);

struct OracleCheckOptions {
  int L_max = 8;
  double lambda = 1.0;
  std::vector<double> D{-0.4, 0.0, 0.5, 0.99, 1.5};
  int chi_max = 100;
  double delta = 1e-3;
  double energy_tol = 1e-8;
  double observable_tol = 1e-6;
  double closed_form_tol = 1e-10;
};

struct OracleCheckRow {
  std::string check;
  int L = 0;
  double D = 0.0;
  double value = 0.0;
  double reference = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Closed forms at L = 2 and ED vs DMRG energies, fidelities, overlaps and
// entropies for even 4 <= L <= L_max. Throws Error(size) if L_max exceeds the
// dense guard.
std::vector<OracleCheckRow> oracle_check(const OracleCheckOptions& opts);
OracleCheckOptions oracle_options_from_json(const nlohmann::json& j);
std::string format_oracle_table(const std::vector<OracleCheckRow>& rows);

// Closed-form L = 2 ground energy ((2D - lambda) - sqrt((2D - lambda)^2 + 8)) / 2
// and half-chain entropy in bits.
double two_site_ground_energy(double lambda, double D);
double two_site_entropy_bits(double lambda, double D);

}  // namespace spinone
