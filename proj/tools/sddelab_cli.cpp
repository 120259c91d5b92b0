// Batch experiment runner. Talks to the library through the C interface only.
#include "sddelab/sddelab.h"

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

int exit_code(sdl_status s) {
  switch (s) {
    case SDL_OK: return 0;
    case SDL_ERR_CONFIG:
    case SDL_ERR_INVALID_ARGUMENT: return 2;
    case SDL_ERR_NUMERICAL: return 3;
    default: return 1;
  }
}

int report(sdl_status s, const char* context) {
  std::fprintf(stderr, "sddelab: %s: %s\n", context, sdl_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic delay differential equation experiments"};
  app.set_version_flag("--version", std::string("sddelab ") + sdl_version());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory for CSV files and manifest.txt");
  app.add_option("--threads", threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--set", overrides, "extra key=value entries, applied after the config file");

  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < sdl_command_count(); ++i) subs.push_back(app.add_subcommand(sdl_command_name(i)));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  std::string command;
  for (auto* s : subs) {
    if (s->parsed()) command = s->get_name();
  }

  sdl_config* cfg = nullptr;
  sdl_status st = config_path.empty() ? sdl_config_parse("", nullptr, &cfg) : sdl_config_load(config_path.c_str(), &cfg);
  if (st != SDL_OK) return report(st, "config");
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "sddelab: --set expects key=value, got '%s'\n", kv.c_str());
      sdl_config_free(cfg);
      return 2;
    }
    st = sdl_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != SDL_OK) {
      sdl_config_free(cfg);
      return report(st, "--set");
    }
  }

  sdl_run_options opts{};
  opts.has_seed = seed_opt->count() > 0;
  opts.seed = seed;
  opts.threads = threads;
  opts.out_dir = out_dir.c_str();
  sdl_result* res = nullptr;
  st = sdl_run(command.c_str(), cfg, &opts, &res);
  sdl_config_free(cfg);
  if (res) std::fputs(sdl_result_summary(res), stdout);
  sdl_result_free(res);
  if (st != SDL_OK) return report(st, command.c_str());
  return 0;
}
