#include "sddelab/sddelab.h"

#include "sddelab/delay_measure.hpp"
#include "sddelab/experiment.hpp"

#include <string>
#include <vector>

struct sdl_config {
  sddelab::Config config;
};

struct sdl_result {
  sddelab::RunOutcome outcome;
  std::vector<std::string> files;
};

struct sdl_measure {
  sddelab::DelayMeasure mu;
};

namespace {

thread_local std::string g_last_error;

sdl_status status_of(sddelab::ErrorKind kind) {
  switch (kind) {
    case sddelab::ErrorKind::InvalidArgument: return SDL_ERR_INVALID_ARGUMENT;
    case sddelab::ErrorKind::Config: return SDL_ERR_CONFIG;
    case sddelab::ErrorKind::Numerical: return SDL_ERR_NUMERICAL;
    case sddelab::ErrorKind::Io: return SDL_ERR_IO;
  }
  return SDL_ERR_INTERNAL;
}

sdl_status fail(sdl_status s, std::string what) {
  g_last_error = std::move(what);
  return s;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
sdl_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SDL_OK;
  } catch (const sddelab::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SDL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SDL_ERR_INTERNAL, e.what());
  }
}

}  // namespace

extern "C" {

const char* sdl_version(void) { return SDDELAB_VERSION; }

const char* sdl_last_error(void) { return g_last_error.c_str(); }

const char* sdl_status_name(sdl_status status) {
  switch (status) {
    case SDL_OK: return "ok";
    case SDL_ERR_IO: return "io error";
    case SDL_ERR_CONFIG: return "config error";
    case SDL_ERR_NUMERICAL: return "numerical failure";
    case SDL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SDL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

size_t sdl_command_count(void) { return sddelab::experiment_commands().size(); }

const char* sdl_command_name(size_t index) {
  const auto& names = sddelab::experiment_commands();
  return index < names.size() ? names[index].c_str() : nullptr;
}

sdl_status sdl_config_parse(const char* text, const char* base_dir, sdl_config** out) {
  if (!text || !out) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_config_parse: null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new sdl_config{sddelab::Config::parse(text, base_dir ? std::filesystem::path(base_dir) : std::filesystem::path())};
  });
}

sdl_status sdl_config_load(const char* path, sdl_config** out) {
  if (!path || !out) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_config_load: null argument");
  *out = nullptr;
  return guarded([&] { *out = new sdl_config{sddelab::Config::load(path)}; });
}

sdl_status sdl_config_set(sdl_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_config_set: null argument");
  return guarded([&] { config->config.set(key, value); });
}

void sdl_config_free(sdl_config* config) { delete config; }

sdl_status sdl_run(const char* command, const sdl_config* config, const sdl_run_options* options, sdl_result** out) {
  if (!command || !config || !out) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_run: null argument");
  *out = nullptr;
  return guarded([&] {
    sddelab::RunRequest req;
    req.command = command;
    req.config = config->config;
    if (options) {
      if (options->has_seed) req.seed = options->seed;
      if (options->threads > 0) req.threads = options->threads;
      if (options->out_dir) req.out_dir = options->out_dir;
    }
    auto* r = new sdl_result{sddelab::run_experiment(req), {}};
    for (const auto& f : r->outcome.files) r->files.push_back(f.string());
    *out = r;
    if (r->outcome.status != sddelab::kExitOk) {
      g_last_error = r->outcome.error;
      throw sddelab::Error(r->outcome.status == sddelab::kExitConfig      ? sddelab::ErrorKind::Config
                           : r->outcome.status == sddelab::kExitNumerical ? sddelab::ErrorKind::Numerical
                                                                          : sddelab::ErrorKind::Io,
                           r->outcome.error);
    }
  });
}

sdl_status sdl_result_status(const sdl_result* result) {
  if (!result) return SDL_ERR_INVALID_ARGUMENT;
  return static_cast<sdl_status>(result->outcome.status);
}

const char* sdl_result_summary(const sdl_result* result) { return result ? result->outcome.summary.c_str() : ""; }

const char* sdl_result_error(const sdl_result* result) { return result ? result->outcome.error.c_str() : ""; }

size_t sdl_result_file_count(const sdl_result* result) { return result ? result->files.size() : 0; }

const char* sdl_result_file(const sdl_result* result, size_t index) {
  if (!result || index >= result->files.size()) return nullptr;
  return result->files[index].c_str();
}

void sdl_result_free(sdl_result* result) { delete result; }

sdl_status sdl_measure_create(double alpha, sdl_measure** out) {
  if (!out) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_measure_create: null argument");
  *out = nullptr;
  return guarded([&] { *out = new sdl_measure{sddelab::DelayMeasure(alpha)}; });
}

sdl_status sdl_measure_add_atom(sdl_measure* measure, double location, double weight) {
  if (!measure) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_measure_add_atom: null measure");
  return guarded([&] { measure->mu.add_atom(location, weight); });
}

void sdl_measure_free(sdl_measure* measure) { delete measure; }

sdl_status sdl_measure_characteristic(const sdl_measure* measure, double re, double im, double* out_re,
                                      double* out_im) {
  if (!measure || !out_re || !out_im) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_measure_characteristic: null argument");
  return guarded([&] {
    const auto z = sddelab::char_function(measure->mu, {re, im});
    *out_re = z.real();
    *out_im = z.imag();
  });
}

sdl_status sdl_measure_stability(const sdl_measure* measure, double tol, double* v0) {
  if (!measure || !v0) return fail(SDL_ERR_INVALID_ARGUMENT, "sdl_measure_stability: null argument");
  return guarded([&] { *v0 = sddelab::stability_abscissa(measure->mu, tol).v0; });
}

}  // extern "C"
