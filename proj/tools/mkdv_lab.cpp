#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "mkdv/cli.hpp"

int main(int argc, char** argv) {
  using namespace mkdv::cli;
  CLI::App app{"Numerical laboratory for higher-order mKdV breathers"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  for (const char* name : {"verify", "spectrum", "evolve", "stability"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat key = value file")->required();
    sub->add_option("--out", out_dir, "existing output directory")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kAllPass : kUsage;
  }

  try {
    const Command cmd = command_from_string(app.get_subcommands().front()->get_name());
    RunConfig cfg = load_config(config_path, cmd);
    if (seed) cfg.seed = *seed;
    const mkdv::SuiteReport rep = run(cfg, out_dir, worker_count());
    std::printf("%s: %d/%zu checks passed\n", to_string(cmd).c_str(), rep.passed(), rep.records.size());
    for (const auto& r : rep.records)
      if (!r.pass)
        std::printf("FAIL %s %s measured=%s budget=%s\n", r.id.c_str(), r.params.dump().c_str(),
                    mkdv::format_double(r.measured).c_str(), mkdv::format_double(r.budget).c_str());
    return rep.all_pass() ? kAllPass : kCheckFailure;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
