/* Exercises the C interface from plain C. */
#include "sddelab/sddelab.h"

#include <math.h>
#include <stdio.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

int main(int argc, char** argv) {
  const char* out_dir = argc > 1 ? argv[1] : "capi_out";

  EXPECT(strlen(sdl_version()) > 0);
  EXPECT(sdl_command_count() >= 10);
  EXPECT(strcmp(sdl_command_name(0), "stability") == 0);
  EXPECT(sdl_command_name(sdl_command_count()) == NULL);
  EXPECT(strcmp(sdl_status_name(SDL_ERR_CONFIG), "config error") == 0);

  /* measure handle */
  sdl_measure* mu = NULL;
  EXPECT(sdl_measure_create(1.0, &mu) == SDL_OK);
  EXPECT(sdl_measure_add_atom(mu, 0.0, -2.0) == SDL_OK);
  double re = 0, im = 0, v0 = 0;
  EXPECT(sdl_measure_characteristic(mu, 0.5, 1.0, &re, &im) == SDL_OK);
  EXPECT(fabs(re - 2.5) < 1e-14 && fabs(im - 1.0) < 1e-14);
  EXPECT(sdl_measure_stability(mu, 1e-10, &v0) == SDL_OK);
  EXPECT(fabs(v0 + 2.0) < 1e-8);
  EXPECT(sdl_measure_add_atom(mu, -3.0, 1.0) == SDL_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(sdl_last_error()) > 0);
  sdl_measure_free(mu);
  EXPECT(sdl_measure_create(-1.0, &mu) == SDL_ERR_INVALID_ARGUMENT);
  EXPECT(mu == NULL);

  /* config handle */
  sdl_config* cfg = NULL;
  EXPECT(sdl_config_parse("mu.alpha = 1\nbogus = 2\n", NULL, &cfg) == SDL_ERR_CONFIG);
  EXPECT(strstr(sdl_last_error(), "bogus") != NULL);
  EXPECT(sdl_config_parse("mu.alpha = 1\nmu.atoms = 0:-1\n", NULL, &cfg) == SDL_OK);
  EXPECT(sdl_config_set(cfg, "stability.tol", "1e-10") == SDL_OK);
  EXPECT(sdl_config_set(cfg, "nope", "1") == SDL_ERR_CONFIG);
  sdl_config* missing = NULL;
  EXPECT(sdl_config_load("/nonexistent/x.cfg", &missing) == SDL_ERR_IO);
  EXPECT(missing == NULL);
  EXPECT(sdl_config_parse(NULL, NULL, &missing) == SDL_ERR_INVALID_ARGUMENT);

  /* run */
  sdl_run_options opts;
  memset(&opts, 0, sizeof opts);
  opts.threads = 1;
  opts.out_dir = out_dir;
  sdl_result* res = NULL;
  EXPECT(sdl_run("stability", cfg, &opts, &res) == SDL_OK);
  EXPECT(res != NULL);
  EXPECT(sdl_result_status(res) == SDL_OK);
  EXPECT(strstr(sdl_result_summary(res), "v0=-1.0000000000") != NULL);
  EXPECT(sdl_result_file_count(res) >= 2);
  EXPECT(sdl_result_file(res, 1000) == NULL);
  sdl_result_free(res);

  res = NULL;
  EXPECT(sdl_run("no-such-command", cfg, &opts, &res) == SDL_ERR_CONFIG);
  EXPECT(res != NULL && sdl_result_status(res) == SDL_ERR_CONFIG);
  EXPECT(res != NULL && strlen(sdl_result_error(res)) > 0);
  sdl_result_free(res);

  /* unstable measure: covariance needs a decaying fundamental solution */
  EXPECT(sdl_config_set(cfg, "mu.atoms", "0:0.5") == SDL_OK);
  EXPECT(sdl_config_set(cfg, "levy.sigma2", "1") == SDL_OK);
  EXPECT(sdl_config_set(cfg, "F.kind", "constant") == SDL_OK);
  EXPECT(sdl_config_set(cfg, "F.m", "1") == SDL_OK);
  EXPECT(sdl_config_set(cfg, "h", "0.01") == SDL_OK);
  EXPECT(sdl_config_set(cfg, "kb.horizon", "100") == SDL_OK);
  res = NULL;
  EXPECT(sdl_run("covariance", cfg, &opts, &res) == SDL_ERR_NUMERICAL);
  sdl_result_free(res);
  sdl_config_free(cfg);

  EXPECT(sdl_run("stability", NULL, &opts, &res) == SDL_ERR_INVALID_ARGUMENT);
  sdl_result_free(NULL);
  sdl_config_free(NULL);
  sdl_measure_free(NULL);

  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
