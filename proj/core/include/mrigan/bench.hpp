#pragma once

#include <map>
#include <string>
#include <vector>

#include "mrigan/classical.hpp"
#include "mrigan/trainer.hpp"

namespace mrigan {

// Ordered stack of same-shaped complex slices with magnitude in [0,1].
struct Volume {
  std::vector<Tensor> slices;
  std::string subject_id;
  std::string anatomy = "other";  // brain | knee | phantom | other
};

// MBT1 files or a directory of PGM slices. Magnitudes are normalized to the
// per-volume maximum; real inputs are complexified with zero phase. Mixed
// shapes raise IoError listing the offending files.
Volume ingest(const std::vector<std::string>& paths);

// Smoothly jittered phantom family: slice 0 is the standard phantom, later
// slices random-walk the soft-tissue ellipses so neighbours stay correlated.
Volume phantom_volume(size_t n_slices, size_t size, uint64_t seed);

struct MaskSet {
  MaskScheme scheme;
  std::vector<double> targets;  // AF for cartesian, SR otherwise
};

struct ExperimentConfig {
  // dataset source: phantom spec or explicit volume files
  std::string dataset_type = "phantom";  // "phantom" | "files"
  size_t phantom_size = 64;
  size_t train_slices = 20;
  size_t test_slices = 5;
  std::vector<std::string> train_files, test_files;

  std::vector<MaskSet> masks;
  std::vector<std::string> methods;  // zf tv dict dagan kigan recon refine
  double center_fraction = 0.08;
  uint64_t seed = 0;
  bool with_fid = false;
  std::string out_dir = "out";
  size_t jobs = 1;

  TvConfig tv;
  DictConfig dict;
  ModelSpec model;    // shared scale defaults; image_size 0 = dataset size
  TrainConfig train;  // shared training defaults
  std::map<std::string, ModelSpec> model_overrides;   // keyed by family name
  std::map<std::string, TrainConfig> train_overrides;
};

// JSON config document (schema documented in the README; one canonical
// example ships under configs/).
ExperimentConfig load_experiment_config(const std::string& path);

struct CellOutcome {
  std::string scheme;
  double target = 0;
  std::string method;
  bool failed = false;
  std::string error;
  MetricsReport report;  // valid when !failed
};

struct GridResult {
  std::vector<CellOutcome> cells;  // canonical (mask, target, method) order
  std::string table_text;
};

// Executes every (mask scheme x target x method) cell: builds the mask,
// undersamples, trains or solves, evaluates, and writes per-cell CSVs,
// reconstructions and |rec-gt| error maps as PGM plus the merged CSV/text
// tables. Cell failures are isolated and marked "failed". Output is a pure
// function of (config, seed).
GridResult run_grid(const ExperimentConfig& cfg);

// |rec - gt| scaled so 0 is black and vmax white, clipped.
Tensor error_map(const Tensor& rec, const Tensor& gt, double vmax = 0.2);

// ---- table formatting -----------------------------------------------------------

struct TableCellValue {
  double mean = 0, stdev = 0;
  bool present = false;
  bool failed = false;
};

struct TableRow {
  std::string mask_label;    // printed on the first row of a group only
  std::string target_label;  // "2X" or "50%"
  std::string metric;        // PSNR / SSIM / RMSE / FID
  std::vector<TableCellValue> values;  // parallel to the method headers
  bool lower_is_better = false;
  bool scalar = false;  // print mean without the ±std part (FID)
};

// Aligned plain-text table mirroring the published layout; the best value per
// row is starred (ties all starred) since plain text has no bold.
std::string format_table(const std::vector<std::string>& method_headers,
                         const std::vector<TableRow>& rows);

// Merged "mask,target,method,metric,mean,std" CSV (RMSE kept unscaled here;
// the text table prints the x1e-2 convention).
void write_metrics_csv(const std::vector<CellOutcome>& cells, const std::string& path);

// Display label helpers shared by the table and the CLI.
std::string method_label(const std::string& method);
std::string target_label(MaskScheme scheme, double target);
std::string scheme_label(MaskScheme scheme);

}  // namespace mrigan
