/* C interface of the sddelab shared library. All objects are opaque handles created and
 * released by the library. Functions return an sdl_status; on failure the message is
 * available from sdl_last_error() on the calling thread until its next API call. */
#ifndef SDDELAB_H
#define SDDELAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(SDDELAB_BUILDING_LIBRARY)
#define SDL_API __attribute__((visibility("default")))
#else
#define SDL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 0-3 double as process exit codes. */
typedef enum sdl_status {
  SDL_OK = 0,
  SDL_ERR_IO = 1,
  SDL_ERR_CONFIG = 2,
  SDL_ERR_NUMERICAL = 3,
  SDL_ERR_INVALID_ARGUMENT = 4,
  SDL_ERR_INTERNAL = 5
} sdl_status;

typedef struct sdl_config sdl_config;
typedef struct sdl_result sdl_result;
typedef struct sdl_measure sdl_measure;

SDL_API const char* sdl_version(void);
SDL_API const char* sdl_last_error(void);
SDL_API const char* sdl_status_name(sdl_status status);

/* Experiment commands, in a fixed order. */
SDL_API size_t sdl_command_count(void);
SDL_API const char* sdl_command_name(size_t index);

/* key = value text; relative file paths resolve against base_dir (may be NULL). */
SDL_API sdl_status sdl_config_parse(const char* text, const char* base_dir, sdl_config** out);
SDL_API sdl_status sdl_config_load(const char* path, sdl_config** out);
SDL_API sdl_status sdl_config_set(sdl_config* config, const char* key, const char* value);
SDL_API void sdl_config_free(sdl_config* config);

typedef struct sdl_run_options {
  int has_seed;     /* nonzero: `seed` overrides the config */
  uint64_t seed;
  int threads;      /* 0: config value or all cores */
  const char* out_dir;
} sdl_run_options;

/* Runs an experiment command. A result handle is produced even on failure (holding the
 * error text) unless the arguments themselves are invalid. */
SDL_API sdl_status sdl_run(const char* command, const sdl_config* config, const sdl_run_options* options,
                           sdl_result** out);
SDL_API sdl_status sdl_result_status(const sdl_result* result);
SDL_API const char* sdl_result_summary(const sdl_result* result);
SDL_API const char* sdl_result_error(const sdl_result* result);
SDL_API size_t sdl_result_file_count(const sdl_result* result);
SDL_API const char* sdl_result_file(const sdl_result* result, size_t index);
SDL_API void sdl_result_free(sdl_result* result);

/* Delay measure made of point atoms on [-alpha, 0]. */
SDL_API sdl_status sdl_measure_create(double alpha, sdl_measure** out);
SDL_API sdl_status sdl_measure_add_atom(sdl_measure* measure, double location, double weight);
SDL_API void sdl_measure_free(sdl_measure* measure);
/* chi(z) = z - int e^{zu} mu(du) */
SDL_API sdl_status sdl_measure_characteristic(const sdl_measure* measure, double re, double im, double* out_re,
                                              double* out_im);
SDL_API sdl_status sdl_measure_stability(const sdl_measure* measure, double tol, double* v0);

#ifdef __cplusplus
}
#endif

#endif /* SDDELAB_H */
