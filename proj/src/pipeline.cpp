#include "spinone/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include "spinone/errors.hpp"
#include "spinone/scaling.hpp"

#ifndef SPINONE_VERSION
#define SPINONE_VERSION "0.0.0"
#endif

namespace spinone {

namespace {

double round_grid(double d) { return std::round(d * 1e12) / 1e12; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Keeps flags a single CSV-safe token list.
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == ';' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::usage, where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(ErrorCode::usage, "unknown key '" + k + "' in " + where);
}

// The seed and target sector live at the top level of a sweep spec.
nlohmann::json dmrg_json(const DmrgConfig& c) {
  auto j = nlohmann::json::parse(c.to_json());
  j.erase("seed");
  j.erase("target_sz");
  return j;
}

nlohmann::json ed_json(const EDOptions& o) {
  return {{"tol", o.tol}, {"max_iterations", o.max_iterations}, {"max_L", o.max_L}, {"dense_cutoff", o.dense_cutoff}};
}

// Replaces the bare "warm" marker with its provenance.
void stamp_warm(std::string& flags, double from) {
  std::string out;
  std::size_t start = 0;
  while (start <= flags.size()) {
    const std::size_t end = std::min(flags.find(';', start), flags.size());
    std::string tok = flags.substr(start, end - start);
    if (tok == "warm") tok = "warm@" + fmt(from);
    if (!tok.empty()) {
      if (!out.empty()) out += ';';
      out += tok;
    }
    start = end + 1;
  }
  flags = out;
}

StoreRow error_row(const SweepSpec& spec, int L, double D, SolverKind kind, const std::string& hash,
                   const std::string& what, const char* code) {
  StoreRow r;
  const double nan = std::nan("");
  r.point = ObservablePoint{spec.lambda, L, D, spec.delta, nan, nan, nan, kind, nan, nan, {}};
  r.point.flags = std::string("error:") + code + ":" + sanitize(what);
  r.config_hash = hash;
  r.seed = spec.seed;
  return r;
}

// Midpoints on both sides of every interior maximum of S that are not yet
// sampled.
std::vector<double> refine_points(const std::vector<StoreRow>& rows, const std::string& hash, double delta) {
  std::map<double, double> curve;
  for (const auto& r : rows)
    if (r.config_hash == hash && r.point.delta == delta && !r.is_error() && std::isfinite(r.point.susceptibility))
      curve[r.point.D] = r.point.susceptibility;
  ObservableCurve c;
  for (const auto& [d, s] : curve) {
    c.D.push_back(d);
    c.value.push_back(s);
  }
  std::set<double> out;
  if (c.D.size() < 3) return {};
  for (std::size_t i : interior_local_maxima(c)) {
    out.insert(round_grid(0.5 * (c.D[i - 1] + c.D[i])));
    out.insert(round_grid(0.5 * (c.D[i] + c.D[i + 1])));
  }
  std::vector<double> v;
  for (double d : out)
    if (!curve.count(d)) v.push_back(d);
  return v;
}

class SweepRunner {
 public:
  SweepRunner(const SweepSpec& spec, const SweepLog& log) : spec_(spec), log_(log), store_(spec.out_dir) {}

  SweepSummary run() {
    init_manifest();
    std::vector<int> sizes = spec_.sizes;
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    // Largest shards first so the slowest chain starts immediately.
    std::reverse(sizes.begin(), sizes.end());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= sizes.size() || stop_.load()) return;
        try {
          run_shard(sizes[i]);
        } catch (...) {
          std::lock_guard lock(mutex_);
          if (!failure) failure = std::current_exception();
          stop_ = true;
        }
      }
    };
    const int nthreads = std::max(1, std::min<int>(spec_.threads, static_cast<int>(sizes.size())));
    if (nthreads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    for (int L : sizes) summary_.shards.push_back(store_.shard_path(spec_.lambda, L));
    std::sort(summary_.shards.begin(), summary_.shards.end());
    return summary_;
  }

 private:
  void say(const std::string& msg) {
    if (!log_) return;
    std::lock_guard lock(mutex_);
    log_(msg);
  }

  void init_manifest() {
    std::lock_guard lock(mutex_);
    if (store_.has_manifest()) manifest_ = store_.read_manifest();
    if (!manifest_.is_object() || manifest_.value("format", "") != "spinone-store")
      manifest_ = {{"format", "spinone-store"}, {"version", 1}, {"created", utc_now()}, {"shards", nlohmann::json::object()}};
    manifest_["code_version"] = SPINONE_VERSION;
    manifest_["spec"] = spec_.to_json();
    manifest_["updated"] = utc_now();
    if (!manifest_.contains("runs")) manifest_["runs"] = nlohmann::json::array();
    manifest_["runs"].push_back({{"started", utc_now()}, {"seed", spec_.seed}, {"spec", spec_.to_json()}});
    store_.write_manifest(manifest_);
  }

  void update_manifest(int L, const std::string& hash, SolverKind kind, const std::string& status) {
    const auto rows = store_.load_shard(spec_.lambda, L);
    int errors = 0;
    for (const auto& r : rows) errors += r.is_error() ? 1 : 0;
    std::lock_guard lock(mutex_);
    const std::string name = std::filesystem::path(store_.shard_path(spec_.lambda, L)).filename().string();
    manifest_["shards"][name] = {{"lambda", spec_.lambda}, {"L", L},           {"rows", rows.size()},
                                 {"errors", errors},       {"status", status}, {"solver", to_string(kind)},
                                 {"config_hash", hash},    {"seed", spec_.seed}, {"updated", utc_now()}};
    manifest_["updated"] = utc_now();
    store_.write_manifest(manifest_);
  }

  // Loads the shard's chain checkpoint if it belongs to this configuration and
  // lies at or below D.
  std::optional<std::pair<StateHandle, double>> checkpoint_before(int L, const std::string& hash, double D) {
    const std::string path = store_.checkpoint_path(spec_.lambda, L);
    if (!spec_.checkpoints || !std::filesystem::exists(path)) return std::nullopt;
    try {
      MpsCheckpoint ck = load_checkpoint(path);
      const auto cfg = nlohmann::json::parse(ck.config_json);
      const double at = cfg.at("D").get<double>();
      if (cfg.at("config_hash").get<std::string>() != hash || cfg.at("delta").get<double>() != spec_.delta || at > D)
        return std::nullopt;
      return std::make_pair(StateHandle(std::move(ck.state)), at);
    } catch (const std::exception& e) {
      say("ignoring unreadable checkpoint " + path + ": " + e.what());
      return std::nullopt;
    }
  }

  void run_chain(int L, const std::vector<double>& points, const SolverSettings& settings, const std::string& hash) {
    const ModelParams base{L, spec_.lambda, 0.0};
    std::optional<StateHandle> warm;
    double warm_at = 0.0;
    if (settings.kind == SolverKind::dmrg && !points.empty()) {
      if (auto ck = checkpoint_before(L, hash, points.front())) {
        warm = std::move(ck->first);
        warm_at = ck->second;
      }
    }
    for (double D : points) {
      if (stop_.load()) return;
      ModelParams p = base;
      p.D = D;
      const auto t0 = std::chrono::steady_clock::now();
      StoreRow row;
      StateHandle next;
      try {
        row.point = compute_point(p, spec_.delta, settings, warm ? &*warm : nullptr, &next);
        if (warm) stamp_warm(row.point.flags, warm_at);
        row.config_hash = hash;
        row.seed = spec_.seed;
        if (settings.kind == SolverKind::dmrg) {
          warm = std::move(next);
          warm_at = D + spec_.delta;
          if (spec_.checkpoints) {
            const nlohmann::json cfg{{"D", warm_at}, {"delta", spec_.delta}, {"config_hash", hash}, {"lambda", spec_.lambda}};
            save_checkpoint(store_.checkpoint_path(spec_.lambda, L), {std::get<Mps>(*warm), cfg.dump(), spec_.seed});
          }
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::io) throw;
        row = error_row(spec_, L, D, settings.kind, hash, e.what(), error_name(e.code()));
        warm.reset();
      } catch (const std::exception& e) {
        row = error_row(spec_, L, D, settings.kind, hash, e.what(), "internal");
        warm.reset();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      store_.append(row);
      {
        std::lock_guard lock(mutex_);
        ++summary_.computed;
        if (row.is_error()) ++summary_.errors;
      }
      char buf[256];
      std::snprintf(buf, sizeof buf, "L=%d D=%.6g F=%.15g S=%.9g E=%.9g disc=%.2g (%.1fs)%s%s", L, D, row.point.fidelity,
                    row.point.susceptibility, row.point.entropy_bits, row.point.max_discarded_weight, row.seconds,
                    row.point.flags.empty() ? "" : " ", row.point.flags.c_str());
      say(buf);
    }
  }

  std::vector<double> missing(int L, const std::string& hash, SolverKind kind, const std::vector<double>& grid) {
    std::unordered_set<std::string> have;
    for (const auto& r : store_.load_shard(spec_.lambda, L)) have.insert(r.key());
    std::vector<double> out;
    for (double D : grid)
      if (!have.count(row_key(spec_.lambda, L, D, spec_.delta, kind, hash))) out.push_back(D);
    {
      std::lock_guard lock(mutex_);
      summary_.skipped += static_cast<int>(grid.size() - out.size());
    }
    return out;
  }

  void run_shard(int L) {
    const std::string hash = spec_.config_hash(L);
    const SolverSettings settings = spec_.settings_for(L);
    update_manifest(L, hash, settings.kind, "running");
    const auto todo = missing(L, hash, settings.kind, spec_.d_grid());
    say("shard L=" + std::to_string(L) + " solver=" + to_string(settings.kind) + " config=" + hash + ": " +
        std::to_string(todo.size()) + " points to compute");
    run_chain(L, todo, settings, hash);
    for (int round = 0; round < spec_.refine && !stop_.load(); ++round) {
      const auto extra = refine_points(store_.load_shard(spec_.lambda, L), hash, spec_.delta);
      if (extra.empty()) break;
      say("shard L=" + std::to_string(L) + " refine round " + std::to_string(round + 1) + ": " +
          std::to_string(extra.size()) + " points");
      run_chain(L, extra, settings, hash);
    }
    update_manifest(L, hash, settings.kind, stop_.load() ? "interrupted" : "complete");
  }

  const SweepSpec& spec_;
  const SweepLog& log_;
  ResultStore store_;
  nlohmann::json manifest_;
  SweepSummary summary_;
  std::mutex mutex_;
  std::atomic<bool> stop_{false};
};

double two_site_mixing(double lambda, double D, double& b) {
  const double e = two_site_ground_energy(lambda, D);
  b = -(2.0 * D - lambda - e) / std::sqrt(2.0);
  return 1.0 + b * b;
}

}  // namespace

std::vector<double> SweepSpec::d_grid() const {
  std::vector<double> out;
  if (!d_list.empty()) {
    for (double d : d_list) out.push_back(round_grid(d));
  } else {
    const auto n = static_cast<long>(std::floor((d_stop - d_start) / d_step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(round_grid(d_start + static_cast<double>(i) * d_step));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SolverKind SweepSpec::solver_for(int L) const {
  if (solver == "auto") return L <= ed.max_L ? SolverKind::ed : SolverKind::dmrg;
  return solver_from_string(solver);
}

SolverSettings SweepSpec::settings_for(int L) const {
  SolverSettings s;
  s.kind = solver_for(L);
  s.sector = sector;
  s.ed = ed;
  s.dmrg = dmrg;
  s.dmrg.seed = seed;
  s.dmrg.target_sz = sector;
  return s;
}

std::string SweepSpec::config_hash(int L) const {
  const SolverSettings s = settings_for(L);
  nlohmann::json j{{"solver", to_string(s.kind)}, {"sector", s.sector}};
  if (s.kind == SolverKind::dmrg)
    j["dmrg"] = dmrg_json(s.dmrg);
  else
    j["ed"] = ed_json(s.ed);
  return stable_hash(j.dump());
}

void SweepSpec::validate() const {
  if (sizes.empty()) fail(ErrorCode::usage, "sweep: no sizes given");
  if (!(delta > 0.0)) fail(ErrorCode::usage, "sweep: delta must be > 0");
  if (d_list.empty()) {
    if (!(d_step > 0.0)) fail(ErrorCode::usage, "sweep: d_step must be > 0");
    if (!(d_stop >= d_start)) fail(ErrorCode::usage, "sweep: d_stop must be >= d_start");
  }
  if (solver != "auto" && solver != "ed" && solver != "dmrg") fail(ErrorCode::usage, "sweep: unknown solver " + solver);
  if (threads < 1) fail(ErrorCode::usage, "sweep: threads must be >= 1");
  if (refine < 0) fail(ErrorCode::usage, "sweep: refine must be >= 0");
  for (int L : sizes) {
    if (L < 2 || L % 2 != 0) fail(ErrorCode::usage, "sweep: sizes must be even and >= 2");
    const SolverKind k = solver_for(L);
    if (k == SolverKind::dmrg && L < 4) fail(ErrorCode::usage, "sweep: DMRG needs L >= 4");
    if (k == SolverKind::ed && L > ed.max_L)
      fail(ErrorCode::size, "sweep: L=" + std::to_string(L) + " exceeds the ED guard " + std::to_string(ed.max_L));
    if (std::abs(sector) > L) fail(ErrorCode::usage, "sweep: sector out of range");
  }
  dmrg.validate();
}

nlohmann::json SweepSpec::to_json() const {
  return {{"lambda", lambda},   {"sizes", sizes},     {"d_start", d_start},   {"d_stop", d_stop},
          {"d_step", d_step},   {"d_list", d_list},   {"delta", delta},       {"solver", solver},
          {"sector", sector},   {"out", out_dir},     {"seed", seed},         {"threads", threads},
          {"refine", refine},   {"checkpoints", checkpoints}, {"dmrg", dmrg_json(dmrg)}, {"ed", ed_json(ed)}};
}

SweepSpec SweepSpec::from_json(const nlohmann::json& j, SweepSpec s) {
  check_keys(j,
             {"lambda", "sizes", "d_start", "d_stop", "d_step", "d_list", "delta", "solver", "sector", "out", "seed",
              "threads", "refine", "checkpoints", "chi_max", "sweeps", "dmrg", "ed"},
             "sweep config");
  try {
    take(j, "lambda", s.lambda);
    take(j, "sizes", s.sizes);
    take(j, "d_start", s.d_start);
    take(j, "d_stop", s.d_stop);
    take(j, "d_step", s.d_step);
    take(j, "d_list", s.d_list);
    take(j, "delta", s.delta);
    take(j, "solver", s.solver);
    take(j, "sector", s.sector);
    take(j, "out", s.out_dir);
    take(j, "seed", s.seed);
    take(j, "threads", s.threads);
    take(j, "refine", s.refine);
    take(j, "checkpoints", s.checkpoints);
    if (j.contains("dmrg")) {
      const auto& d = j.at("dmrg");
      check_keys(d,
                 {"chi_max", "n_sweeps", "trunc_target", "energy_tol", "local_max_iterations", "local_krylov",
                  "local_tol", "svd_cutoff", "init_chi", "spin_flip_parity"},
                 "dmrg config");
      s.dmrg = dmrg_config_from_json(d, s.dmrg);
    }
    if (j.contains("ed")) {
      const auto& e = j.at("ed");
      check_keys(e, {"tol", "max_iterations", "max_L", "dense_cutoff"}, "ed config");
      take(e, "tol", s.ed.tol);
      take(e, "max_iterations", s.ed.max_iterations);
      take(e, "max_L", s.ed.max_L);
      take(e, "dense_cutoff", s.ed.dense_cutoff);
    }
    take(j, "chi_max", s.dmrg.chi_max);
    take(j, "sweeps", s.dmrg.n_sweeps);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::usage, std::string("sweep config: ") + e.what());
  }
  return s;
}

DmrgConfig dmrg_config_from_json(const nlohmann::json& j, DmrgConfig c) {
  check_keys(j,
             {"chi_max", "n_sweeps", "trunc_target", "energy_tol", "local_max_iterations", "local_krylov", "local_tol",
              "svd_cutoff", "target_sz", "init_chi", "seed", "spin_flip_parity"},
             "dmrg config");
  try {
    take(j, "chi_max", c.chi_max);
    take(j, "n_sweeps", c.n_sweeps);
    take(j, "trunc_target", c.trunc_target);
    take(j, "energy_tol", c.energy_tol);
    take(j, "local_max_iterations", c.local_max_iterations);
    take(j, "local_krylov", c.local_krylov);
    take(j, "local_tol", c.local_tol);
    take(j, "svd_cutoff", c.svd_cutoff);
    take(j, "target_sz", c.target_sz);
    take(j, "init_chi", c.init_chi);
    take(j, "seed", c.seed);
    take(j, "spin_flip_parity", c.spin_flip_parity);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::usage, std::string("dmrg config: ") + e.what());
  }
  c.validate();
  return c;
}

SweepSpec spec_from_manifest(const std::string& dir) {
  const ResultStore store(dir, false);
  if (!store.has_manifest()) fail(ErrorCode::io, "no manifest in " + dir + "; nothing to resume");
  const auto m = store.read_manifest();
  if (!m.contains("runs") || m.at("runs").empty()) fail(ErrorCode::io, "manifest in " + dir + " records no run");
  SweepSpec s = SweepSpec::from_json(m.at("runs").back().at("spec"));
  s.out_dir = dir;
  return s;
}

FitOptions fit_options_from_json(const nlohmann::json& j) {
  check_keys(j, {"transition", "observable", "min_L", "window_lo", "window_hi", "lambda", "delta", "solver"},
             "fit options");
  FitOptions o;
  try {
    take(j, "transition", o.transition);
    take(j, "observable", o.observable);
    if (j.contains("min_L")) o.min_L = j.at("min_L").get<int>();
    if (j.contains("window_lo")) o.window_lo = j.at("window_lo").get<double>();
    if (j.contains("window_hi")) o.window_hi = j.at("window_hi").get<double>();
    if (j.contains("lambda")) o.lambda = j.at("lambda").get<double>();
    if (j.contains("delta")) o.delta = j.at("delta").get<double>();
    if (j.contains("solver")) o.solver = j.at("solver").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::usage, std::string("fit options: ") + e.what());
  }
  return o;
}

OracleCheckOptions oracle_options_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"L_max", "lambda", "D", "chi_max", "delta", "energy_tol", "observable_tol", "closed_form_tol"},
             "oracle-check options");
  OracleCheckOptions o;
  try {
    take(j, "L_max", o.L_max);
    take(j, "lambda", o.lambda);
    take(j, "D", o.D);
    take(j, "chi_max", o.chi_max);
    take(j, "delta", o.delta);
    take(j, "energy_tol", o.energy_tol);
    take(j, "observable_tol", o.observable_tol);
    take(j, "closed_form_tol", o.closed_form_tol);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::usage, std::string("oracle-check options: ") + e.what());
  }
  return o;
}

SweepSpec load_sweep_spec(const std::string& path, SweepSpec base) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::usage, "cannot read config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::usage, "config file " + path + ": " + e.what());
  }
  return SweepSpec::from_json(j, std::move(base));
}

nlohmann::json SweepSummary::to_json() const {
  return {{"computed", computed}, {"skipped", skipped}, {"errors", errors}, {"shards", shards}};
}

SweepSummary run_sweep(const SweepSpec& spec, const SweepLog& log) {
  spec.validate();
  SweepRunner runner(spec, log);
  return runner.run();
}

std::pair<double, double> transition_window(const std::string& transition) {
  if (transition == "gaussian") return {0.5, 1.5};
  if (transition == "ising") return {-0.6, 0.1};
  fail(ErrorCode::usage, "unknown transition '" + transition + "' (gaussian | ising)");
}

std::vector<ObservableCurve> curves_from_rows(const std::vector<StoreRow>& rows, const FitOptions& opts) {
  if (opts.observable != "susceptibility" && opts.observable != "entropy")
    fail(ErrorCode::usage, "unknown observable '" + opts.observable + "' (susceptibility | entropy)");
  auto [lo, hi] = transition_window(opts.transition);
  if (opts.window_lo) lo = *opts.window_lo;
  if (opts.window_hi) hi = *opts.window_hi;
  const std::optional<SolverKind> solver =
      opts.solver ? std::optional<SolverKind>(solver_from_string(*opts.solver)) : std::nullopt;

  std::map<int, std::map<double, double>> by_size;
  for (const auto& r : rows) {
    const ObservablePoint& p = r.point;
    if (r.is_error()) continue;
    if (opts.lambda && p.lambda != *opts.lambda) continue;
    if (opts.delta && p.delta != *opts.delta) continue;
    if (solver && p.solver != *solver) continue;
    if (p.D < lo || p.D > hi) continue;
    const double v = opts.observable == "susceptibility" ? p.susceptibility : p.entropy_bits;
    if (!std::isfinite(v)) continue;
    auto [it, inserted] = by_size[p.L].emplace(p.D, v);
    if (!inserted)
      fail(ErrorCode::usage, "fit: several rows at L=" + std::to_string(p.L) + ", D=" + fmt(p.D) +
                                 "; restrict with lambda/delta/solver filters");
  }
  std::vector<ObservableCurve> out;
  for (const auto& [L, pts] : by_size) {
    ObservableCurve c{L, {}, {}};
    for (const auto& [d, v] : pts) {
      c.D.push_back(d);
      c.value.push_back(v);
    }
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::json fit_rows(const std::vector<StoreRow>& rows, const FitOptions& opts) {
  const auto curves = curves_from_rows(rows, opts);
  auto [lo, hi] = transition_window(opts.transition);
  if (opts.window_lo) lo = *opts.window_lo;
  if (opts.window_hi) hi = *opts.window_hi;

  nlohmann::json report;
  report["transition"] = opts.transition;
  report["observable"] = opts.observable;
  report["window"] = {std::isfinite(lo) ? nlohmann::json(lo) : nlohmann::json(nullptr),
                      std::isfinite(hi) ? nlohmann::json(hi) : nlohmann::json(nullptr)};
  report["code_version"] = SPINONE_VERSION;
  nlohmann::json peaks = nlohmann::json::array(), warnings = nlohmann::json::array();
  std::vector<PeakEstimate> good;
  for (const auto& c : curves) {
    try {
      const PeakEstimate p = find_peak(c);
      good.push_back(p);
      peaks.push_back(to_json(p));
    } catch (const Error& e) {
      warnings.push_back("L=" + std::to_string(c.L) + " excluded (" + error_name(e.code()) + "): " + e.what());
    }
  }
  report["peaks"] = peaks;
  if (good.size() < 3) {
    fail(ErrorCode::insufficient_data, "fit: " + std::to_string(good.size()) +
                                           " sizes with interior peaks in the window; need at least 3");
  }
  const FssFit fss = fit_fss(good, opts.min_L);
  if (fss.bracket_warning) warnings.push_back("nu search ended on the bracket edge");
  report["fss"] = to_json(fss);
  report["D_c"] = fss.D_c;
  report["nu"] = fss.nu;
  std::optional<double> dv;
  if (opts.observable == "susceptibility") {
    const PowerLawFit pl = fit_power_law(good, opts.min_L);
    report["power_law"] = to_json(pl);
    report["delta_q"] = pl.exponent;
    dv = delta_v_from_delta_q(pl.exponent);
    report["delta_v"] = *dv;
  } else {
    report["delta_q"] = nullptr;
    report["delta_v"] = nullptr;
  }
  const LuttingerK k = luttinger_k(fss.nu, dv);
  report["K_from_nu"] = k.from_nu ? nlohmann::json(*k.from_nu) : nlohmann::json(nullptr);
  report["K_from_delta_v"] = k.from_delta_v ? nlohmann::json(*k.from_delta_v) : nlohmann::json(nullptr);
  report["conventions"] = {{"power_law", "S_max ~ L^(-Delta_Q)"},
                           {"delta_v", "(Delta_Q + 2z + d) / 2"},
                           {"z", kDynamicalZ},
                           {"d", kSpatialD},
                           {"K_from_nu", "2 - 1/nu"},
                           {"K_from_delta_v", "Delta_V"},
                           {"entropy_base", 2}};
  report["warnings"] = warnings;
  return report;
}

nlohmann::json fit_store(const std::string& dir, const FitOptions& opts) {
  const ResultStore store(dir, false);
  auto report = fit_rows(store.load_all(), opts);
  report["store"] = dir;
  return report;
}

double two_site_ground_energy(double lambda, double D) {
  const double b = 2.0 * D - lambda;
  return (b - std::sqrt(b * b + 8.0)) / 2.0;
}

double two_site_entropy_bits(double lambda, double D) {
  // Ground state a (|+-> + |-+>)/sqrt2 + b |00> with a = 1.
  double b = 0.0;
  const double n2 = two_site_mixing(lambda, D, b);
  const double p_side = 0.5 / n2, p_mid = b * b / n2;
  double e = 0.0;
  for (double p : {p_side, p_side, p_mid})
    if (p >= 1e-15) e -= p * std::log2(p);
  return e;
}

std::vector<OracleCheckRow> oracle_check(const OracleCheckOptions& opts) {
  if (opts.L_max > kDenseGuardDefault)
    fail(ErrorCode::size, "oracle-check: L_max=" + std::to_string(opts.L_max) + " exceeds the dense guard " +
                              std::to_string(kDenseGuardDefault));
  if (opts.L_max < 2) fail(ErrorCode::size, "oracle-check: L_max must be >= 2");
  std::vector<OracleCheckRow> rows;
  auto add = [&](const std::string& check, int L, double D, double value, double ref, double tol) {
    const double err = std::abs(value - ref);
    rows.push_back({check, L, D, value, ref, err, tol, err <= tol});
  };

  std::set<double> two_site_d(opts.D.begin(), opts.D.end());
  two_site_d.insert({-1.0, 0.0, 1.0, 10.0});
  for (double D : two_site_d) {
    const auto gs = ed_ground_state({2, opts.lambda, D}, 0);
    add("energy_closed_form", 2, D, gs.energy, two_site_ground_energy(opts.lambda, D), opts.closed_form_tol);
    add("entropy_closed_form", 2, D, entanglement_entropy(DenseState{2, gs.vector}),
        two_site_entropy_bits(opts.lambda, D), opts.closed_form_tol);
  }

  SolverSettings dmrg;
  dmrg.kind = SolverKind::dmrg;
  dmrg.dmrg.chi_max = opts.chi_max;
  dmrg.dmrg.n_sweeps = 10;
  SolverSettings ed;
  for (int L = 4; L <= opts.L_max; L += 2) {
    for (double D : opts.D) {
      const ModelParams p{L, opts.lambda, D};
      const auto e = fidelity_susceptibility(p, opts.delta, ed);
      const auto m = fidelity_susceptibility(p, opts.delta, dmrg);
      add("energy", L, D, m.at_d.energy, e.at_d.energy, opts.energy_tol);
      add("overlap", L, D, fidelity(m.at_d.state, e.at_d.state), 1.0, opts.observable_tol);
      add("fidelity", L, D, m.fidelity, e.fidelity, opts.observable_tol);
      add("entropy", L, D, entanglement_entropy(m.at_d.state), entanglement_entropy(e.at_d.state),
          opts.observable_tol);
    }
  }
  return rows;
}

std::string format_oracle_table(const std::vector<OracleCheckRow>& rows) {
  std::string out = "check\tL\tD\tvalue\treference\terror\ttolerance\tresult\n";
  int failed = 0;
  for (const auto& r : rows) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s\t%d\t%.12g\t%.15g\t%.15g\t%.3e\t%.1e\t%s\n", r.check.c_str(), r.L, r.D, r.value,
                  r.reference, r.error, r.tolerance, r.pass ? "PASS" : "FAIL");
    out += buf;
    failed += r.pass ? 0 : 1;
  }
  out += "summary\t" + std::to_string(rows.size() - static_cast<std::size_t>(failed)) + " passed\t" +
         std::to_string(failed) + " failed\n";
  return out;
}

}  // namespace spinone
