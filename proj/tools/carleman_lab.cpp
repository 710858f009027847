#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "carleman_lab/experiments.hpp"

namespace cl = carleman_lab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string subcommand;
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> levels;
  std::optional<std::string> variant;
  std::optional<unsigned> jobs;
};

cl::ExperimentConfig resolve(const Options& o) {
  cl::ExperimentConfig cfg = o.config.empty() ? cl::ExperimentConfig{} : cl::load_config(o.config);
  if (const char* env = std::getenv("CARLEMAN_LAB_OUT"); env && *env) cfg.run.out = env;
  if (o.out) cfg.run.out = *o.out;
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.levels) cfg.grid.levels = *o.levels;
  if (o.jobs) cfg.run.jobs = *o.jobs;
  if (o.variant) {
    const auto v = cl::parse_variant(*o.variant);
    if (!v) throw cl::Error(cl::ErrorKind::invalid_argument, "run.variant", "unknown variant '" + *o.variant + "'");
    cfg.run.variant = *v;
  }
  cl::validate_config(cfg);
  return cfg;
}

void print(const cl::RunSummary& s, const std::filesystem::path& summary) {
  for (const auto& r : s.results) {
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.2f", r.wall_seconds);
    std::cout << r.name << ": " << r.status() << " (" << r.checked.size() << " checks, " << wall << " s)\n";
    for (const auto& f : r.failures) std::cerr << "  " << r.name << " FAILED " << f.invariant << ": " << f.detail << "\n";
  }
  for (const auto& a : s.artifacts()) std::cout << "wrote " << a << "\n";
  std::cout << "wrote " << summary.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carleman estimate and inverse-potential stability experiments"};
  app.set_version_flag("--version", std::string("carleman_lab ") + cl::kVersion);
  Options o;
  app.add_option("subcommand", o.subcommand, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(cl::subcommand_names()));
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory (overrides CARLEMAN_LAB_OUT and run.out)");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--levels", o.levels, "Number of refinement levels")->check(CLI::Range(2, 8));
  app.add_option("--variant", o.variant, "Carleman variant: full, remark, remark_t0_only");
  app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1, 256));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  cl::ExperimentConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const cl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == cl::ErrorKind::io ? kExitIo : kExitConfig;
  }

  const std::filesystem::path out = cfg.run.out;
  const cl::Experiment exp(cfg, out);
  const cl::RunSummary summary = exp.run(o.subcommand);
  std::filesystem::path written;
  try {
    written = exp.write_summary(summary);
  } catch (const cl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  print(summary, written);
  return summary.exit_code();
}
