// ryam <experiment> --config <file> [--out <dir>]
//
// Exit codes: 0 every applicable verdict holds, 2 some verdict fails, 1 bad config or
// runtime error. Nothing is written unless the run completes.

#include "ryam/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << text;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yamabe-quotient experiments on gridded manifolds with boundary"};
  std::string experiment, config, out_dir = ".";
  app.add_option("experiment", experiment,
                 "curvature | cutoff | approx-study | variation | glue | eigen | yamabe | "
                 "sandwich | double-check | psc-path")
      ->required();
  app.add_option("--config", config, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory (default: current directory)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const auto which = ryam::parse_experiment(experiment);
    if (!which) throw ryam::ConfigError("unknown experiment '" + experiment + "'");
    std::ifstream in(config, std::ios::binary);
    if (!in) throw ryam::ConfigError("cannot read config " + config);
    std::stringstream text;
    text << in.rdbuf();

    const ryam::RunOutput out = ryam::run_experiment(*which, text.str());

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / (out.name + ".csv"), out.csv);
    write_file(fs::path(out_dir) / (out.name + ".json"), out.json);
    for (const auto& v : out.verdicts)
      if (v.applicable && !v.holds)
        std::cerr << "verdict failed: " << v.name << " (lhs " << ryam::format_double(v.lhs)
                  << ", rhs " << ryam::format_double(v.rhs) << ", tolerance "
                  << ryam::format_double(v.tolerance) << ")\n";
    return out.all_hold() ? 0 : 2;
  } catch (const ryam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
