#include "spinone/spinone.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "spinone/errors.hpp"
#include "spinone/observables.hpp"
#include "spinone/pipeline.hpp"

struct s1_state {
  spinone::StateHandle handle;
};

namespace {

using spinone::Error;
using spinone::ErrorCode;

static_assert(S1_USAGE == static_cast<int>(ErrorCode::usage) && S1_CONVERGENCE == static_cast<int>(ErrorCode::convergence) &&
              S1_TOLERANCE == static_cast<int>(ErrorCode::tolerance) && S1_INTERNAL == static_cast<int>(ErrorCode::internal));

thread_local std::string last_error;

s1_status record(s1_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `fn`, translating exceptions into a status and the thread-local message.
template <typename Fn>
s1_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return record(static_cast<s1_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(S1_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(S1_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_object(const char* text, const char* what) {
  if (!text || !*text) return nlohmann::json::object();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    spinone::fail(ErrorCode::usage, std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) spinone::fail(ErrorCode::usage, std::string(what) + " must be a JSON object");
  return j;
}

void require(const void* p, const char* name) {
  if (!p) spinone::fail(ErrorCode::usage, std::string(name) + " is null");
}

spinone::SweepLog make_log(s1_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

s1_status finish_sweep(const spinone::SweepSpec& spec, s1_log_fn log, void* user, char** summary_json) {
  const auto summary = spinone::run_sweep(spec, make_log(log, user));
  if (summary_json) *summary_json = dup_string(summary.to_json().dump(2));
  if (summary.errors > 0)
    return record(S1_CONVERGENCE, std::to_string(summary.errors) + " point(s) failed; see error rows in the store");
  return S1_OK;
}

}  // namespace

extern "C" {

const char* s1_version(void) { return SPINONE_VERSION; }

const char* s1_last_error(void) { return last_error.c_str(); }

const char* s1_status_name(s1_status status) {
  if (status == S1_OK) return "ok";
  if (status < S1_USAGE || status > S1_INTERNAL) return "unknown";
  return spinone::error_name(static_cast<ErrorCode>(status));
}

void s1_string_free(char* text) { std::free(text); }

s1_status s1_ground_state_ed(int L, double lambda, double D, int sector, s1_state** out, double* energy) {
  return guarded([&] {
    require(out, "out");
    spinone::SolverSettings settings;
    settings.kind = spinone::SolverKind::ed;
    settings.sector = sector;
    auto solved = spinone::solve_ground_state({L, lambda, D}, settings, nullptr);
    if (energy) *energy = solved.energy;
    *out = new s1_state{std::move(solved.state)};
    return S1_OK;
  });
}

s1_status s1_ground_state_dmrg(int L, double lambda, double D, const char* config_json, const s1_state* warm,
                               s1_state** out, double* energy, double* max_discarded_weight) {
  return guarded([&] {
    require(out, "out");
    spinone::SolverSettings settings;
    settings.kind = spinone::SolverKind::dmrg;
    settings.dmrg = spinone::dmrg_config_from_json(parse_object(config_json, "dmrg config"));
    settings.sector = settings.dmrg.target_sz;
    if (warm && !std::holds_alternative<spinone::Mps>(warm->handle))
      spinone::fail(ErrorCode::usage, "warm start must be an MPS state");
    auto solved = spinone::solve_ground_state({L, lambda, D}, settings, warm ? &warm->handle : nullptr);
    if (energy) *energy = solved.energy;
    if (max_discarded_weight) *max_discarded_weight = solved.max_discarded_weight;
    *out = new s1_state{std::move(solved.state)};
    return S1_OK;
  });
}

void s1_state_free(s1_state* state) { delete state; }

s1_status s1_state_length(const s1_state* state, int* L) {
  return guarded([&] {
    require(state, "state");
    require(L, "L");
    *L = spinone::state_length(state->handle);
    return S1_OK;
  });
}

s1_status s1_state_is_mps(const s1_state* state, int* is_mps) {
  return guarded([&] {
    require(state, "state");
    require(is_mps, "is_mps");
    *is_mps = std::holds_alternative<spinone::Mps>(state->handle) ? 1 : 0;
    return S1_OK;
  });
}

s1_status s1_fidelity(const s1_state* a, const s1_state* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = spinone::fidelity(a->handle, b->handle);
    return S1_OK;
  });
}

s1_status s1_susceptibility(double fidelity, int L, double delta, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = spinone::susceptibility_from_fidelity(fidelity, L, delta);
    return S1_OK;
  });
}

s1_status s1_entropy(const s1_state* state, int cut, double* bits) {
  return guarded([&] {
    require(state, "state");
    require(bits, "bits");
    *bits = cut <= 0 ? spinone::entanglement_entropy(state->handle) : spinone::entanglement_entropy(state->handle, cut);
    return S1_OK;
  });
}

s1_status s1_checkpoint_save(const s1_state* state, const char* path, const char* config_json,
                             unsigned long long seed) {
  return guarded([&] {
    require(state, "state");
    require(path, "path");
    const auto* mps = std::get_if<spinone::Mps>(&state->handle);
    if (!mps) spinone::fail(ErrorCode::usage, "only MPS states can be checkpointed");
    spinone::save_checkpoint(path, {*mps, parse_object(config_json, "checkpoint config").dump(), seed});
    return S1_OK;
  });
}

s1_status s1_checkpoint_load(const char* path, s1_state** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto ck = spinone::load_checkpoint(path);
    *out = new s1_state{std::move(ck.state)};
    return S1_OK;
  });
}

s1_status s1_sweep(const char* config_path, const char* overrides_json, s1_log_fn log, void* user,
                   char** summary_json) {
  return guarded([&] {
    spinone::SweepSpec spec;
    if (config_path && *config_path) spec = spinone::load_sweep_spec(config_path);
    spec = spinone::SweepSpec::from_json(parse_object(overrides_json, "overrides"), spec);
    return finish_sweep(spec, log, user, summary_json);
  });
}

s1_status s1_sweep_resume(const char* store_dir, const char* overrides_json, s1_log_fn log, void* user,
                          char** summary_json) {
  return guarded([&] {
    require(store_dir, "store_dir");
    auto spec = spinone::SweepSpec::from_json(parse_object(overrides_json, "overrides"),
                                              spinone::spec_from_manifest(store_dir));
    spec.out_dir = store_dir;
    return finish_sweep(spec, log, user, summary_json);
  });
}

s1_status s1_fit(const char* store_dir, const char* options_json, char** report_json) {
  return guarded([&] {
    require(store_dir, "store_dir");
    require(report_json, "report_json");
    const auto opts = spinone::fit_options_from_json(parse_object(options_json, "fit options"));
    *report_json = dup_string(spinone::fit_store(store_dir, opts).dump(2));
    return S1_OK;
  });
}

s1_status s1_oracle_check(const char* options_json, char** table, int* failures) {
  return guarded([&] {
    const auto opts = spinone::oracle_options_from_json(parse_object(options_json, "oracle-check options"));
    const auto rows = spinone::oracle_check(opts);
    int failed = 0;
    for (const auto& r : rows) failed += r.pass ? 0 : 1;
    if (table) *table = dup_string(spinone::format_oracle_table(rows));
    if (failures) *failures = failed;
    if (failed > 0) return record(S1_TOLERANCE, std::to_string(failed) + " oracle check(s) out of tolerance");
    return S1_OK;
  });
}

s1_status s1_export(const char* store_dir, const char* format, char** text) {
  return guarded([&] {
    require(store_dir, "store_dir");
    require(format, "format");
    require(text, "text");
    *text = dup_string(spinone::export_store(store_dir, format));
    return S1_OK;
  });
}

}  // extern "C"
