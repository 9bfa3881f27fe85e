#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ebk/config.hpp"
#include "ebk/error.hpp"
#include "ebk/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bohr-Sommerfeld spectra of one-dimensional Hamiltonians"};
  app.set_version_flag("--version", std::string(ebk::toolkit_version));
  app.require_subcommand(1);

  std::string run_config;
  std::string output_dir;
  unsigned threads = 1;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "execute the configured pipeline");
  run->add_option("--config", run_config, "run configuration (JSON)")->required();
  run->add_option("--output-dir", output_dir, "override the configured output directory");
  run->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  run->add_flag("--verbose", verbose, "print stage progress");

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "check a configuration and print it canonically");
  validate->add_option("--config", validate_config, "run configuration (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ebk::exit_config;
  }

  try {
    if (*validate) {
      const ebk::RunConfig c = ebk::load_config(validate_config);
      std::cout << ebk::canonical_json(c);
      return ebk::exit_ok;
    }
    const ebk::RunConfig c = ebk::load_config(run_config);
    ebk::RunOptions opts;
    if (!output_dir.empty()) opts.output_dir = output_dir;
    opts.threads = threads;
    if (verbose) opts.log = &std::cerr;
    const ebk::RunResult r = ebk::run(c, opts);
    std::cout << "output: " << r.output_dir.string() << "\n";
    for (const auto& check : r.manifest["checks"]) {
      std::cout << (check["pass"].get<bool>() ? "pass " : "FAIL ")
                << check["name"].get<std::string>() << "\n";
    }
    for (const auto& stage : r.manifest["stages"]) {
      if (stage["status"] != "ok") {
        std::cout << stage["status"].get<std::string>() << " " << stage["name"].get<std::string>()
                  << ": " << stage["error"].get<std::string>() << "\n";
      }
    }
    return r.exit_code;
  } catch (const ebk::Error& e) {
    std::cerr << "ebk: " << e.what() << "\n";
    if (e.code() == ebk::ErrorCode::ConfigError) return ebk::exit_config;
    return ebk::is_hypothesis_violation(e.code()) ? ebk::exit_hypothesis : ebk::exit_verification;
  } catch (const std::exception& e) {
    std::cerr << "ebk: " << e.what() << "\n";
    return ebk::exit_verification;
  }
}
