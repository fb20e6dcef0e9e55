#include "spinone/observables.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "spinone/errors.hpp"

namespace spinone {

namespace {

constexpr double kNormSlack = 1e-10;
constexpr double kDropWeight = 1e-15;

const Eigen::VectorXd& dense_of(const StateHandle& a, Eigen::VectorXd& storage) {
  if (const auto* d = std::get_if<DenseState>(&a)) return d->vector;
  storage = mps_to_dense(std::get<Mps>(a));
  return storage;
}

void require_normalized(const StateHandle& a, const char* what) {
  const double n = state_norm(a);
  if (std::abs(n - 1.0) > kNormSlack) fail(ErrorCode::domain, std::string(what) + ": state is not normalized");
}

double entropy_from_schmidt(const std::vector<double>& s, double log_base) {
  double e = 0.0;
  for (double v : s) {
    const double p = v * v;
    if (p < kDropWeight) continue;
    e -= p * std::log(p);
  }
  return std::max(0.0, e / log_base);
}

void add_flag(std::string& flags, const char* f) {
  if (!flags.empty()) flags += ';';
  flags += f;
}

}  // namespace

int state_length(const StateHandle& a) {
  if (const auto* d = std::get_if<DenseState>(&a)) return d->L;
  return std::get<Mps>(a).length();
}

double state_norm(const StateHandle& a) {
  if (const auto* d = std::get_if<DenseState>(&a)) return d->vector.norm();
  return mps_norm(std::get<Mps>(a));
}

double fidelity(const StateHandle& a, const StateHandle& b) {
  if (state_length(a) != state_length(b)) fail(ErrorCode::domain, "fidelity: states have different lengths");
  require_normalized(a, "fidelity");
  require_normalized(b, "fidelity");
  double f = 0.0;
  if (std::holds_alternative<Mps>(a) && std::holds_alternative<Mps>(b)) {
    f = mps_overlap(std::get<Mps>(a), std::get<Mps>(b));
  } else {
    Eigen::VectorXd sa, sb;
    const Eigen::VectorXd& va = dense_of(a, sa);
    const Eigen::VectorXd& vb = dense_of(b, sb);
    // Elementwise products commute, so the sum is identical for either order.
    f = std::abs(va.cwiseProduct(vb).sum());
  }
  return std::min(f, 1.0);
}

double susceptibility_from_fidelity(double f, int L, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::domain, "susceptibility: delta must be > 0");
  if (!(f >= 0.0 && f <= 1.0)) fail(ErrorCode::domain, "susceptibility: fidelity must lie in [0, 1]");
  if (L < 1) fail(ErrorCode::size, "susceptibility: L must be >= 1");
  return 2.0 * (1.0 - f) / (static_cast<double>(L) * delta * delta);
}

std::vector<double> schmidt_values(const StateHandle& a, int cut) {
  const int L = state_length(a);
  if (cut < 1 || cut > L - 1) fail(ErrorCode::domain, "schmidt_values: cut must lie in 1..L-1");
  std::vector<double> s;
  if (const auto* d = std::get_if<DenseState>(&a)) {
    const auto right = static_cast<Eigen::Index>(hilbert_dim(L - cut));
    const auto left = static_cast<Eigen::Index>(hilbert_dim(cut));
    if (d->vector.size() != left * right) fail(ErrorCode::domain, "schmidt_values: vector size does not match L");
    // Column index is the left-block configuration, row index the right one.
    Eigen::Map<const Eigen::MatrixXd> m(d->vector.data(), right, left);
    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
    s.assign(sv.data(), sv.data() + sv.size());
    const double n = d->vector.norm();
    for (double& v : s) v /= n;
  } else {
    s = mps_schmidt_values(std::get<Mps>(a), cut);
  }
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

double entropy_bits_from_schmidt(const std::vector<double>& s) { return entropy_from_schmidt(s, std::log(2.0)); }
double entropy_nats_from_schmidt(const std::vector<double>& s) { return entropy_from_schmidt(s, 1.0); }

double entanglement_entropy(const StateHandle& a, int cut) { return entropy_bits_from_schmidt(schmidt_values(a, cut)); }

double entanglement_entropy(const StateHandle& a) { return entanglement_entropy(a, state_length(a) / 2); }

double entanglement_entropy_nats(const StateHandle& a, int cut) {
  return entropy_nats_from_schmidt(schmidt_values(a, cut));
}

std::string to_string(SolverKind kind) { return kind == SolverKind::ed ? "ed" : "dmrg"; }

SolverKind solver_from_string(const std::string& name) {
  if (name == "ed" || name == "ED") return SolverKind::ed;
  if (name == "dmrg" || name == "DMRG") return SolverKind::dmrg;
  fail(ErrorCode::usage, "unknown solver '" + name + "'");
}

SolvedState solve_ground_state(const ModelParams& params, const SolverSettings& settings, const StateHandle* warm) {
  SolvedState out;
  if (settings.kind == SolverKind::ed) {
    EDGroundState gs = ed_ground_state(params, settings.sector, settings.ed);
    out.state = DenseState{params.L, std::move(gs.vector)};
    out.energy = gs.energy;
    out.residual = gs.residual;
    out.degenerate = gs.degenerate;
    return out;
  }
  DmrgConfig cfg = settings.dmrg;
  cfg.target_sz = settings.sector;
  const Mps* seed = nullptr;
  if (warm != nullptr) seed = std::get_if<Mps>(warm);
  GroundStateResult gs = dmrg_ground_state(params, cfg, seed);
  out.energy = gs.energy;
  out.residual = gs.max_local_residual;
  out.max_discarded_weight = gs.max_discarded_weight;
  out.truncation_warning = gs.truncation_warning;
  out.warm_started = gs.warm_started;
  out.sweeps = gs.sweeps_run;
  out.parity_projections = gs.parity_projections;
  out.state = std::move(gs.state);
  return out;
}

SusceptibilityResult fidelity_susceptibility(const ModelParams& params, double delta, const SolverSettings& settings,
                                             const StateHandle* warm) {
  if (!(delta > 0.0)) fail(ErrorCode::domain, "fidelity_susceptibility: delta must be > 0");
  SusceptibilityResult r;
  r.at_d = solve_ground_state(params, settings, warm);
  ModelParams shifted = params;
  shifted.D += delta;
  r.at_d_delta = solve_ground_state(shifted, settings, &r.at_d.state);
  r.fidelity = fidelity(r.at_d.state, r.at_d_delta.state);
  r.susceptibility = susceptibility_from_fidelity(r.fidelity, params.L, delta);
  r.reliability_warning = r.at_d.degenerate || r.at_d_delta.degenerate;
  return r;
}

void ObservablePoint::check_invariants() const {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) fail(ErrorCode::domain, "observable point: fidelity outside [0, 1]");
  if (!(susceptibility >= -1e-9)) fail(ErrorCode::domain, "observable point: negative susceptibility");
  const double emax = 0.5 * L * std::log2(3.0) + 1e-12;
  if (!(entropy_bits >= 0.0 && entropy_bits <= emax)) fail(ErrorCode::domain, "observable point: entropy out of range");
}

ObservablePoint compute_point(const ModelParams& params, double delta, const SolverSettings& settings,
                              const StateHandle* warm, StateHandle* next_warm) {
  params.validate();
  if (params.L < 2 || params.L % 2 != 0) fail(ErrorCode::size, "compute_point: L must be even and >= 2");
  SusceptibilityResult r = fidelity_susceptibility(params, delta, settings, warm);

  ObservablePoint p;
  p.lambda = params.lambda;
  p.L = params.L;
  p.D = params.D;
  p.delta = delta;
  p.fidelity = r.fidelity;
  p.susceptibility = r.susceptibility;
  p.entropy_bits = entanglement_entropy(r.at_d.state);
  p.solver = settings.kind;
  p.max_discarded_weight = std::max(r.at_d.max_discarded_weight, r.at_d_delta.max_discarded_weight);
  p.residual = std::max(r.at_d.residual, r.at_d_delta.residual);
  if (r.reliability_warning) add_flag(p.flags, "degenerate");
  if (r.at_d.truncation_warning || r.at_d_delta.truncation_warning) add_flag(p.flags, "truncation");
  if (r.at_d.parity_projections + r.at_d_delta.parity_projections > 0) add_flag(p.flags, "parity");
  if (r.at_d.warm_started) add_flag(p.flags, "warm");
  p.check_invariants();
  if (next_warm != nullptr) *next_warm = std::move(r.at_d_delta.state);
  return p;
}

}  // namespace spinone
