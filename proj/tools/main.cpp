#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aniso/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic proximal point and augmented Lagrangian experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool flip_sign = false;
  bool paper_scale = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "INI config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--seed", seed, "Problem seed (overrides the config)");
  run->add_option("--tol", tol, "Stopping tolerance: dual norm for PPA runs, gap for ALM runs");
  run->add_flag("--paper-scale", paper_scale, "ALM problems at n=150, m=160 (game) or n=145, m=150 (regression)");

  auto* verify = app.add_subcommand("verify", "Check the resolvent and Bregman identities");
  verify->add_option("--out", out_dir, "Also write the table to DIR/verify.txt");
  verify->add_option("--seed", seed, "Seed for the random sample points");
  verify->add_option("--tol", tol, "Replace every check tolerance");
  verify->add_flag("--mutate-flip-grad-star", flip_sign, "Break the Moreau check on purpose")->group("");

  auto* rate = app.add_subcommand("rate-study", "Estimate convergence order and rate over a kernel grid");
  rate->add_option("--config", config_path, "INI config file")->required();
  rate->add_option("--out", out_dir, "Output directory (overrides the config)");
  rate->add_option("--seed", seed, "Seed (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return aniso::cmd_run(config_path, {out_dir, seed, tol, paper_scale}, std::cout, std::cerr);
  if (verify->parsed()) {
    aniso::VerifyOptions opts;
    opts.tol = tol;
    if (seed) opts.seed = *seed;
    opts.mutation.flip_grad_phi_star_sign = flip_sign;
    return aniso::cmd_verify(opts, out_dir, std::cout, std::cerr);
  }
  return aniso::cmd_rate_study(config_path, out_dir, seed, std::cout, std::cerr);
}
