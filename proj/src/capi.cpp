#include "detform/detform.h"

#include <cstring>
#include <new>
#include <string>

#include "detform/bounds.hpp"
#include "detform/experiment.hpp"
#include "detform/io.hpp"
#include "detform/parallel.hpp"

using namespace detform;

struct df_config {
  ExperimentConfig cfg;
  std::string scratch;
};

struct df_run {
  RunManifest manifest;
  std::string summary;
  std::string manifest_path;
};

struct df_flow {
  FlowConfig flow;
};

struct df_field {
  SpectralField u;
};

namespace {

thread_local std::string last_error;

df_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return DF_INVALID_ARGUMENT;
    case ErrorCode::GridMismatch: return DF_GRID_MISMATCH;
    case ErrorCode::Precondition: return DF_PRECONDITION;
    case ErrorCode::BlowUp: return DF_BLOW_UP;
    case ErrorCode::NonConvergence: return DF_NON_CONVERGENCE;
    case ErrorCode::UndefinedBound: return DF_UNDEFINED_BOUND;
    case ErrorCode::Config: return DF_CONFIG;
    case ErrorCode::Io: return DF_IO;
  }
  return DF_INTERNAL;
}

// Runs body, turning exceptions into a status and the thread's message.
template <class F>
df_status guarded(F&& body) {
  try {
    body();
    return DF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return DF_INTERNAL;
}

df_status null_arg(const char* what) {
  last_error = std::string(what) + " is NULL";
  return DF_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* df_version(void) { return version_string(); }
const char* df_last_error(void) { return last_error.c_str(); }

const char* df_status_name(df_status s) {
  switch (s) {
    case DF_OK: return "ok";
    case DF_INVALID_ARGUMENT: return "invalid argument";
    case DF_GRID_MISMATCH: return "grid mismatch";
    case DF_PRECONDITION: return "precondition";
    case DF_BLOW_UP: return "blow-up";
    case DF_NON_CONVERGENCE: return "non-convergence";
    case DF_UNDEFINED_BOUND: return "undefined bound";
    case DF_CONFIG: return "configuration error";
    case DF_IO: return "i/o error";
    case DF_INTERNAL: return "internal error";
  }
  return "unknown status";
}

df_status df_set_threads(int n) {
  return guarded([&] { set_thread_count(n); });
}

df_status df_config_parse(const char* text, df_config** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new df_config{parse_config(text, false), {}}; });
}

df_status df_config_load(const char* path, df_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new df_config{load_config(path, false), {}}; });
}

df_status df_config_set(df_config* c, const char* key, const char* value) {
  if (!c) return null_arg("config");
  if (!key || !value) return null_arg("key or value");
  return guarded([&] { c->cfg.set(key, value); });
}

df_status df_config_finalize(df_config* c) {
  if (!c) return null_arg("config");
  return guarded([&] { c->cfg.finalize(); });
}

const char* df_config_get(const df_config* c, const char* key) {
  if (!c || !key || !c->cfg.has(key)) return nullptr;
  auto* self = const_cast<df_config*>(c);
  self->scratch = c->cfg.text(key);
  return self->scratch.c_str();
}

void df_config_free(df_config* c) { delete c; }

df_status df_experiment_run(const df_config* c, df_run** out) {
  if (!c) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto* r = new df_run;
    try {
      r->manifest = run_experiment(c->cfg);
    } catch (...) {
      delete r;
      throw;
    }
    r->summary = r->manifest.summary();
    r->manifest_path = (r->manifest.output_dir.empty() ? std::string(".") : r->manifest.output_dir) +
                       "/manifest.json";
    *out = r;
  });
}

int df_run_passed(const df_run* r) { return r && r->manifest.passed() ? 1 : 0; }
const char* df_run_summary(const df_run* r) { return r ? r->summary.c_str() : ""; }
const char* df_run_manifest_path(const df_run* r) { return r ? r->manifest_path.c_str() : ""; }
size_t df_run_note_count(const df_run* r) { return r ? r->manifest.notes.size() : 0; }

const char* df_run_note(const df_run* r, size_t i) {
  if (!r || i >= r->manifest.notes.size()) return nullptr;
  return r->manifest.notes[i].c_str();
}

void df_run_free(df_run* r) { delete r; }

df_status df_manifest_verify(const char* manifest_path, int* ok) {
  if (!manifest_path) return null_arg("manifest_path");
  if (!ok) return null_arg("ok");
  return guarded([&] {
    const ManifestCheck m = verify_manifest(manifest_path);
    *ok = m.ok ? 1 : 0;
    if (!m.ok) {
      last_error.clear();
      for (const auto& p : m.problems) last_error += p + "\n";
    }
  });
}

df_status df_flow_new(const df_config* c, df_flow** out) {
  if (!c) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new df_flow{build_flow(c->cfg)}; });
}

double df_flow_grashof(const df_flow* f) { return f ? grashof(f->flow) : 0.0; }
void df_flow_free(df_flow* f) { delete f; }

df_status df_field_zero(const df_flow* f, df_field** out) {
  if (!f) return null_arg("flow");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new df_field{SpectralField(f->flow.grid)}; });
}

df_status df_field_random(const df_flow* f, uint64_t seed, double decay, df_field** out) {
  if (!f) return null_arg("flow");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new df_field{random_divfree_field(f->flow.grid, seed, decay)}; });
}

df_status df_field_load(const char* path, df_field** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new df_field{load_snapshot(path)}; });
}

df_status df_field_save(const df_field* u, const char* path) {
  if (!u) return null_arg("field");
  if (!path) return null_arg("path");
  return guarded([&] { save_snapshot(path, u->u); });
}

df_status df_field_norms(const df_field* u, double* l2, double* h1, double* h2) {
  if (!u) return null_arg("field");
  return guarded([&] {
    const Norms n = norms(u->u);
    if (l2) *l2 = n.l2;
    if (h1) *h1 = n.h1;
    if (h2) *h2 = n.h2;
  });
}

void df_field_free(df_field* u) { delete u; }

df_status df_step(const df_flow* f, df_field* u, int steps) {
  if (!f) return null_arg("flow");
  if (!u) return null_arg("field");
  if (steps < 0) {
    last_error = "steps must be >= 0";
    return DF_INVALID_ARGUMENT;
  }
  return guarded([&] {
    require_same_grid(u->u, f->flow.force, "df_step");
    SpectralField x = u->u;
    for (int i = 0; i < steps; ++i) x = step_nse(x, f->flow, i * f->flow.dt);
    u->u = std::move(x);
  });
}

df_status df_steady_state(const df_flow* f, df_field** out, double* residual) {
  if (!f) return null_arg("flow");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    SteadyState s = steady_state_solve(f->flow);
    if (residual) *residual = s.residual;
    *out = new df_field{std::move(s.u)};
  });
}

df_status df_bounds_text(double G, int64_t N, double ratio_hf, char* buf, size_t len,
                         size_t* needed) {
  return guarded([&] {
    BoundsInput in;
    in.G = G;
    in.N = N;
    in.ratio_hf = ratio_hf;
    const std::string text = check_conditions(in).to_text();
    if (needed) *needed = text.size() + 1;
    if (buf && len > 0) {
      const size_t n = std::min(len - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

}  // extern "C"
