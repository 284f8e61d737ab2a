#include "stratwave/stratwave.h"

#include <exception>
#include <string>

#include "stratwave/commands.hpp"

using namespace stratwave;

struct sw_session {
  Session session;
};

namespace {

thread_local std::string last_error;

sw_status set_error(sw_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class Fn>
sw_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return SW_OK;
  } catch (const Error& e) {
    return set_error(static_cast<sw_status>(e.code()), e.what());
  } catch (const Json::exception& e) {
    return set_error(SW_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return set_error(SW_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SW_ERR_INTERNAL, "unknown exception");
  }
}

}  // namespace

extern "C" {

const char* sw_version(void) { return "1.0.0"; }

const char* sw_last_error(void) { return last_error.c_str(); }

int sw_run_command(const char* command, const char* config_path, const char* out_dir, int64_t seed, int threads) {
  if (!command || !config_path || !out_dir) {
    set_error(SW_ERR_NULL_ARGUMENT, "null argument");
    return 2;
  }
  RunOptions opt;
  if (seed >= 0) opt.seed = static_cast<std::uint64_t>(seed);
  opt.threads = threads;
  RunResult r = run_command_file(command, config_path, out_dir, opt);
  last_error = r.exit_code == 0 ? std::string() : r.message;
  return r.exit_code;
}

sw_status sw_session_create(const char* config_json, sw_session** out) {
  if (!config_json || !out) return set_error(SW_ERR_NULL_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    Json config = Json::parse(config_json);
    *out = new sw_session{load_session(config)};
  });
}

void sw_session_free(sw_session* session) { delete session; }

sw_status sw_session_dims(const sw_session* s, int* nx, int* ns1, int* ns2) {
  if (!s || !nx || !ns1 || !ns2) return set_error(SW_ERR_NULL_ARGUMENT, "null argument");
  *nx = s->session.state.nx();
  *ns1 = s->session.state.grids.layer1.ns();
  *ns2 = s->session.state.grids.layer2.ns();
  return SW_OK;
}

sw_status sw_session_energy(const sw_session* s, double* out) {
  if (!s || !out) return set_error(SW_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] { *out = eval_H(s->session.state, s->session.maps, s->session.refs); });
}

sw_status sw_session_residual(const sw_session* s, double* out) {
  if (!s || !out) return set_error(SW_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    *out = pde_residual(s->session.state, *s->session.profiles1, *s->session.profiles2).max_norm();
  });
}

sw_status sw_session_audit(const sw_session* s, uint64_t seed, int n_trials, int include_surfaces,
                           double* max_normalized) {
  if (!s || !max_normalized) return set_error(SW_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    AuditOptions o;
    o.seed = seed;
    o.n_trials = n_trials;
    o.random.include_surfaces = include_surfaces != 0;
    *max_normalized = audit_criticality(s->session.state, s->session.maps, s->session.refs, o).max_normalized;
  });
}

sw_status sw_session_stability(const sw_session* s, int threads, double* lambda_min, int* verdict) {
  if (!s || !lambda_min || !verdict) return set_error(SW_ERR_NULL_ARGUMENT, "null argument");
  return guarded([&] {
    StabilityOptions o;
    o.threads = threads < 1 ? 1 : threads;
    StabilityVerdict v = stability_verdict(s->session.state, s->session.maps, s->session.refs, o);
    *lambda_min = v.lambda_min;
    *verdict = static_cast<int>(v.verdict);
  });
}

sw_status sw_session_field(const sw_session* s, int layer, double* buffer, size_t capacity, size_t* written) {
  if (!s || !buffer || !written) return set_error(SW_ERR_NULL_ARGUMENT, "null argument");
  if (layer != 1 && layer != 2) return set_error(SW_ERR_CONFIG, "layer must be 1 or 2");
  const Field& f = s->session.state.psi(layer);
  if (capacity < static_cast<size_t>(f.size())) return set_error(SW_ERR_SIZE, "buffer too small");
  for (Eigen::Index i = 0; i < f.size(); ++i) buffer[i] = f[i];
  *written = static_cast<size_t>(f.size());
  return SW_OK;
}

}  // extern "C"
