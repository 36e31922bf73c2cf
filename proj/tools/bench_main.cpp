// bench: CS-MRI reconstruction benchmark CLI.
//   bench run     --config cfg.json --out dir [--seed N] [--jobs K]
//   bench mask    --scheme radial --rate 0.3 --size 64 --out m.pgm
//   bench metrics --rec a.mbt --gt b.mbt

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "mrigan/bench.hpp"
#include "mrigan/io.hpp"

using namespace mrigan;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            long long seed, int jobs) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  if (jobs > 0) cfg.jobs = static_cast<size_t>(jobs);
  GridResult grid = run_grid(cfg);
  std::cout << grid.table_text;
  size_t failed = 0;
  for (const CellOutcome& c : grid.cells)
    if (c.failed) {
      ++failed;
      std::cerr << "cell failed: " << c.scheme << " " << target_label(
                       mask_scheme_from_string(c.scheme), c.target)
                << " " << c.method << ": " << c.error << "\n";
    }
  std::cout << "wrote " << cfg.out_dir << "/table.csv and table.txt ("
            << grid.cells.size() - failed << "/" << grid.cells.size()
            << " cells ok)\n";
  return failed == 0 ? 0 : 1;
}

int cmd_mask(const std::string& scheme_name, double rate, double af, size_t size,
             double center_fraction, uint64_t seed, const std::string& out_path) {
  MaskScheme scheme = mask_scheme_from_string(scheme_name);
  double target;
  if (scheme == MaskScheme::cartesian) {
    if (af <= 0) throw ParamError("cartesian mask needs --af");
    target = af;
  } else if (scheme == MaskScheme::full) {
    target = 1.0;
  } else {
    if (rate <= 0) throw ParamError(scheme_name + " mask needs --rate");
    target = rate;
  }
  Mask m = make_mask(scheme, size, size, target, center_fraction, seed);
  if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".mbt")
    save_mbt(m.grid, out_path);
  else
    save_mask_pgm(m, out_path);
  std::cout << "scheme=" << to_string(m.scheme) << " target=" << m.target
            << " achieved_rate=" << fmt_fixed(m.achieved_rate, 6) << " -> "
            << out_path << "\n";
  return 0;
}

int cmd_metrics(const std::string& rec_path, const std::string& gt_path) {
  Tensor rec = abs(load_mbt(rec_path));
  Tensor gt = abs(load_mbt(gt_path));
  double p = psnr(rec, gt);
  std::cout << "psnr_db=" << fmt_fixed(std::min(p, kPsnrCap), 4) << "\n";
  std::cout << "ssim=" << fmt_fixed(ssim(rec, gt), 6) << "\n";
  std::cout << "rmse=" << fmt_fixed(rmse(rec, gt), 6) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN-powered CS-MRI reconstruction benchmark"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute an experiment grid");
  std::string config_path, out_dir;
  long long seed_override = -1;
  int jobs = 0;
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed_override, "seed override");
  run->add_option("--jobs", jobs, "parallel cell workers");

  auto* mask = app.add_subcommand("mask", "generate an undersampling mask");
  std::string scheme = "cartesian", mask_out = "mask.pgm";
  double rate = 0, af = 0, cf = 0.08;
  size_t size = 64;
  uint64_t mask_seed = 0;
  mask->add_option("--scheme", scheme, "cartesian | radial | spiral | full");
  mask->add_option("--rate", rate, "sampling rate for radial/spiral");
  mask->add_option("--af", af, "acceleration factor for cartesian");
  mask->add_option("--size", size, "grid side length");
  mask->add_option("--center-fraction", cf, "fully sampled central band fraction");
  mask->add_option("--seed", mask_seed, "mask seed");
  mask->add_option("--out", mask_out, "output file (.pgm or .mbt)");

  auto* metrics = app.add_subcommand("metrics", "compare a reconstruction to ground truth");
  std::string rec_path, gt_path;
  metrics->add_option("--rec", rec_path, "reconstruction (MBT1)")->required();
  metrics->add_option("--gt", gt_path, "ground truth (MBT1)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed_override, jobs);
    if (mask->parsed())
      return cmd_mask(scheme, rate, af, size, cf, mask_seed, mask_out);
    if (metrics->parsed()) return cmd_metrics(rec_path, gt_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
