// Command-line front end: `setquant run CONFIG` and `setquant compare A B`.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "setquant/config.hpp"
#include "setquant/dispatch.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw setquant::ConfigError("E-PARSE", "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based safe-set validation and quantification"};
  app.require_subcommand(1);

  std::string config_path;
  unsigned workers = 1;
  bool timing = false;
  std::string output;
  auto* run = app.add_subcommand("run", "run the algorithm named in a config");
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_option("--workers", workers, "worker threads (1 = reference mode)")
      ->check(CLI::Range(1u, 1024u));
  run->add_flag("--timing", timing, "add wall_time to report.json");
  run->add_option("--output", output, "output directory");

  std::string dir_a, dir_b, compare_out;
  bool force = false;
  auto* compare = app.add_subcommand("compare", "compare two run directories");
  compare->add_option("a", dir_a, "first run directory")->required();
  compare->add_option("b", dir_b, "second run directory (e.g. an oracle run)")
      ->required();
  compare->add_flag("--force", force, "compare despite digest mismatch");
  compare->add_option("--out", compare_out, "write the comparison JSON here");

  std::string show_path;
  auto* show = app.add_subcommand("show-config", "print a config with defaults");
  show->add_option("config", show_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : setquant::kExitUsage;
  }

  try {
    if (*run) {
      const auto cfg = setquant::parse_config(slurp(config_path));
      setquant::DispatchOptions opts;
      opts.workers = workers;
      opts.timing = timing;
      if (!output.empty()) opts.output_dir = output;
      return setquant::dispatch(cfg, opts, std::cerr);
    }
    if (*compare) {
      const auto text = setquant::compare_runs(dir_a, dir_b, force);
      if (compare_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(compare_out) << text;
      }
      return setquant::kExitTrue;
    }
    if (*show) {
      std::cout << setquant::serialize_config(
          setquant::parse_config(slurp(show_path)));
      return setquant::kExitTrue;
    }
  } catch (const setquant::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return setquant::kExitUsage;
  } catch (const setquant::CompareError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return setquant::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return setquant::kExitUsage;
  }
  return setquant::kExitUsage;
}
