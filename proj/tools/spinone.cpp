// Command-line front end. Talks to the library only through spinone.h.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinone/spinone.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kSolver = 2, kTolerance = 3 };

int exit_code(s1_status s) {
  switch (s) {
    case S1_OK: return kOk;
    case S1_CONVERGENCE:
    case S1_IO:
    case S1_INTERNAL: return kSolver;
    case S1_TOLERANCE: return kTolerance;
    default: return kUsage;
  }
}

int report(s1_status s) {
  if (s != S1_OK) std::cerr << "spinone: " << s1_status_name(s) << ": " << s1_last_error() << "\n";
  return exit_code(s);
}

// Owns a string returned by the library.
struct Text {
  char* p = nullptr;
  ~Text() { s1_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

bool write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return true;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  return static_cast<bool>(f);
}

void log_line(const char* line, void*) { std::cerr << line << std::endl; }

template <typename T>
void put(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-1 XXZ chain: fidelity susceptibility and entanglement sweeps"};
  app.set_version_flag("--version", std::string(s1_version()));
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "compute missing (L, D) points into a store");
  std::string config;
  std::optional<double> lambda, d_start, d_stop, d_step, delta;
  std::optional<std::string> solver, out;
  std::optional<int> chi_max, sweeps, threads, refine, sector;
  std::optional<std::uint64_t> seed;
  std::vector<int> sizes;
  std::vector<double> d_list;
  bool resume = false, quiet = false;
  sweep->add_option("--config", config, "JSON sweep config; flags override its keys")->check(CLI::ExistingFile);
  sweep->add_option("--lambda", lambda, "Sz-Sz exchange anisotropy");
  sweep->add_option("--sizes", sizes, "chain lengths, e.g. 32,64")->delimiter(',');
  sweep->add_option("--d-start", d_start);
  sweep->add_option("--d-stop", d_stop);
  sweep->add_option("--d-step", d_step);
  sweep->add_option("--d-list", d_list, "explicit D values; replaces the start/stop/step grid")->delimiter(',');
  sweep->add_option("--delta", delta, "fidelity step in D");
  sweep->add_option("--solver", solver, "ed | dmrg | auto")->check(CLI::IsMember({"ed", "dmrg", "auto"}));
  sweep->add_option("--sector", sector, "total Sz sector");
  sweep->add_option("--chi-max", chi_max, "DMRG bond dimension");
  sweep->add_option("--sweeps", sweeps, "maximum DMRG sweeps per solve");
  sweep->add_option("--out", out, "store directory");
  sweep->add_option("--seed", seed, "DMRG initial-state seed");
  sweep->add_option("--threads", threads, "workers across L shards");
  sweep->add_option("--refine", refine, "midpoint refinement rounds around susceptibility maxima");
  sweep->add_flag("--resume", resume, "continue the last run recorded in the --out manifest");
  sweep->add_flag("-q,--quiet", quiet, "no per-point progress lines");

  // fit
  auto* fit = app.add_subcommand("fit", "finite-size scaling fit of a store");
  std::string store = "spinone-store", report_path, transition = "gaussian", observable = "susceptibility";
  std::optional<int> min_l;
  std::optional<double> window_lo, window_hi, fit_lambda, fit_delta;
  std::optional<std::string> fit_solver;
  fit->add_option("--out,--store", store, "store directory");
  fit->add_option("--transition", transition)->check(CLI::IsMember({"gaussian", "ising"}));
  fit->add_option("--observable", observable)->check(CLI::IsMember({"susceptibility", "entropy"}));
  fit->add_option("--min-l", min_l, "smallest L entering the fit");
  fit->add_option("--window-lo", window_lo);
  fit->add_option("--window-hi", window_hi);
  fit->add_option("--lambda", fit_lambda, "use rows with this lambda only");
  fit->add_option("--delta", fit_delta, "use rows with this delta only");
  fit->add_option("--solver", fit_solver, "use rows of this solver only")->check(CLI::IsMember({"ed", "dmrg"}));
  fit->add_option("--report", report_path, "write the JSON report here instead of stdout");

  // oracle-check
  auto* oracle = app.add_subcommand("oracle-check", "ED vs DMRG and closed-form checks");
  int l_max = 8;
  std::optional<double> o_lambda, o_delta;
  std::optional<int> o_chi;
  std::vector<double> o_d;
  oracle->add_option("--l-max", l_max, "largest even L compared");
  oracle->add_option("--lambda", o_lambda);
  oracle->add_option("--chi-max", o_chi);
  oracle->add_option("--delta", o_delta);
  oracle->add_option("--d-list", o_d, "D values checked")->delimiter(',');

  // export
  auto* exp = app.add_subcommand("export", "write the store as a CSV or JSON table");
  std::string format = "csv", file;
  exp->add_option("--out,--store", store, "store directory");
  exp->add_option("--format", format, "csv | json");
  exp->add_option("--file", file, "output path; stdout by default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (*sweep) {
    nlohmann::json o = nlohmann::json::object();
    put(o, "lambda", lambda);
    if (!sizes.empty()) o["sizes"] = sizes;
    put(o, "d_start", d_start);
    put(o, "d_stop", d_stop);
    put(o, "d_step", d_step);
    if (!d_list.empty()) o["d_list"] = d_list;
    put(o, "delta", delta);
    put(o, "solver", solver);
    put(o, "sector", sector);
    put(o, "chi_max", chi_max);
    put(o, "sweeps", sweeps);
    put(o, "out", out);
    put(o, "seed", seed);
    put(o, "threads", threads);
    put(o, "refine", refine);
    Text summary;
    const std::string overrides = o.dump();
    const s1_log_fn log = quiet ? nullptr : log_line;
    s1_status s;
    if (resume) {
      if (!out) {
        std::cerr << "spinone: usage: --resume needs --out\n";
        return kUsage;
      }
      o.erase("out");
      s = s1_sweep_resume(out->c_str(), o.dump().c_str(), log, nullptr, &summary.p);
    } else {
      s = s1_sweep(config.empty() ? nullptr : config.c_str(), overrides.c_str(), log, nullptr, &summary.p);
    }
    if (summary.p) std::cout << summary.str() << "\n";
    return report(s);
  }

  if (*fit) {
    nlohmann::json o{{"transition", transition}, {"observable", observable}};
    put(o, "min_L", min_l);
    put(o, "window_lo", window_lo);
    put(o, "window_hi", window_hi);
    put(o, "lambda", fit_lambda);
    put(o, "delta", fit_delta);
    put(o, "solver", fit_solver);
    Text text;
    const s1_status s = s1_fit(store.c_str(), o.dump().c_str(), &text.p);
    if (s == S1_OK && !write_text(report_path, text.str() + "\n")) {
      std::cerr << "spinone: io: cannot write " << report_path << "\n";
      return kSolver;
    }
    return report(s);
  }

  if (*oracle) {
    nlohmann::json o{{"L_max", l_max}};
    put(o, "lambda", o_lambda);
    put(o, "chi_max", o_chi);
    put(o, "delta", o_delta);
    if (!o_d.empty()) o["D"] = o_d;
    Text table;
    int failures = 0;
    const s1_status s = s1_oracle_check(o.dump().c_str(), &table.p, &failures);
    std::cout << table.str();
    return report(s);
  }

  if (*exp) {
    Text text;
    const s1_status s = s1_export(store.c_str(), format.c_str(), &text.p);
    if (s == S1_OK && !write_text(file, text.str())) {
      std::cerr << "spinone: io: cannot write " << file << "\n";
      return kSolver;
    }
    return report(s);
  }
  return kUsage;
}
