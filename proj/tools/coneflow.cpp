#include <iostream>

#include <CLI11.hpp>

#include "app.hpp"
#include "coneflow/exemplars.hpp"

using namespace coneflow::app;

int main(int argc, char** argv) {
  CLI::App cli{"Mean curvature flow in Riemannian cones: runs, verification cases and spectra."};
  cli.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = cli.add_subcommand("run", "Run the pipeline named in a config file");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config; CONEFLOW_OUT overrides both)");

  std::string case_name;
  double lambda = 3.0;
  auto* verify = cli.add_subcommand("verify", "Run one built-in verification case");
  verify->add_option("--case", case_name, "Case name (see list-cases)")->required();
  verify->add_option("--lambda", lambda, "Rescaling factor for rescale-identities");
  verify->add_option("--out", out_dir, "Output directory");

  SlagOptions slag_opt;
  auto* slag = cli.add_subcommand("slag", "Sample and certify a special Lagrangian level set in C^n");
  slag->add_option("--n", slag_opt.n, "Complex dimension");
  slag->add_option("--c", slag_opt.c, "Moment map level, one value or n - 1 values")->delimiter(',');
  slag->add_option("--cprime", slag_opt.c_prime, "Angle level");
  slag->add_option("--count", slag_opt.count, "Number of samples");
  slag->add_option("--seed", slag_opt.seed, "RNG seed");
  slag->add_option("--kind", slag_opt.kind, "Angle part: parity, re or im");
  slag->add_option("--out", out_dir, "Output directory");

  SpectrumOptions spec_opt;
  auto* spectrum = cli.add_subcommand("spectrum", "dim Ker(Laplacian - 2n) on a Legendrian link");
  spectrum->add_option("--sigma", spec_opt.sigma, "circle:L=<len>:nodes=<k>, icosphere:<k> or an OFF file");
  spectrum->add_option("--n", spec_opt.n, "Complex dimension of the cone");
  spectrum->add_option("--tolerance", spec_opt.tolerance, "Relative cluster tolerance");
  spectrum->add_option("--window", spec_opt.window, "Eigenvalues computed around 2n");
  spectrum->add_flag("--lumped", spec_opt.lumped, "Lumped mass matrix");
  spectrum->add_option("--out", out_dir, "Output directory");

  auto* list = cli.add_subcommand("list-cases", "List exemplars and verification cases");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  const auto out_for = [&](const std::string& fallback) {
    return resolve_output(out_dir.empty() ? std::filesystem::path(fallback) : std::filesystem::path(out_dir));
  };

  if (*list) {
    std::cout << "exemplars:\n";
    for (const auto& n : coneflow::exemplar_names()) std::cout << "  " << n << "\n";
    std::cout << "verify cases:\n";
    for (const auto& n : verify_case_names()) std::cout << "  " << n << "\n";
    return 0;
  }
  return guarded(std::cerr, [&]() -> int {
    if (*run) {
      const auto cfg = Config::load(config_path);
      const auto out = resolve_output(out_dir.empty() ? cfg.output_dir() : std::filesystem::path(out_dir));
      const int code = run_experiment(cfg, out, std::cout);
      std::cout << "artifacts in " << out.string() << "\n";
      return code;
    }
    if (*verify) return run_verify(case_name, lambda, out_for("coneflow_out"), std::cout);
    if (*slag) return run_slag(slag_opt, out_for("coneflow_out"), std::cout);
    return run_spectrum(spec_opt, out_for("coneflow_out"), std::cout);
  });
}
