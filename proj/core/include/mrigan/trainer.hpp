#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrigan/gan_models.hpp"
#include "mrigan/metrics.hpp"

namespace mrigan {

struct TrainConfig {
  int steps = 2000;
  size_t batch_size = 4;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  int d_steps_per_g_step = 1;
  uint64_t seed = 0;
  int checkpoint_every = 0;        // 0 disables checkpoint files
  std::string checkpoint_dir;      // required when checkpoint_every > 0
  std::string resume_from;         // checkpoint path to continue from
  LossWeights weights;
  bool weights_set = false;        // config file marked the weights explicit
  bool saturating_adv = false;     // classic minimax generator loss
  uint64_t fx_seed = 17;           // perceptual extractor stream (dagan)
  int eval_every = 0;              // validation cadence; 0 disables early stop
  int patience = 10;               // evaluations without improvement
};

// Bias-corrected Adam over the trainable parameters; moments are kept in
// parallel vectors so they can round-trip through checkpoints.
class Adam {
public:
  Adam(std::vector<ad::ParamPtr> params, double lr, double beta1, double beta2,
       double eps);
  void step();  // consumes param->grad; parameters with empty grads are skipped
  int t() const { return t_; }
  void save_into(std::map<std::string, Tensor>& out) const;
  void load_from(const std::map<std::string, Tensor>& in);

private:
  std::vector<ad::ParamPtr> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

// One Adam update with moment vectors m/v parallel to `params`; t is the
// 1-based step count used for bias correction.
void adam_step(const std::vector<ad::ParamPtr>& params, std::vector<Tensor>& m,
               std::vector<Tensor>& v, int t, double lr, double beta1,
               double beta2, double eps);

struct LossRow {
  int step;
  double imse, fmse, perc, adv_g, adv_d, total;
};

struct TrainState {
  int step = 0;
  std::vector<LossRow> curve;
  double best_val_psnr = 0.0;
  int best_val_step = -1;
  bool early_stopped = false;
};

// Alternating adversarial optimization: per step, d_steps_per_g_step
// discriminator updates on (real, detached fake) followed by one generator
// update on the weighted total loss. Batches are drawn by a counter-based
// seeded stream, so interrupted runs resume bit-exactly from a checkpoint.
// A non-finite loss aborts with a diagnostic state dump.
TrainState train(GanModel& gan, const std::vector<AcqPair>& data,
                 const TrainConfig& cfg,
                 const std::vector<AcqPair>* validation = nullptr);

// "step,l_imse,l_fmse,l_perc,l_adv_g,l_adv_d,l_total" CSV.
void write_loss_csv(const TrainState& state, const std::string& path);

void save_checkpoint(GanModel& gan, const Adam& opt_g, const Adam& opt_d,
                     int step, const std::string& path);
int load_checkpoint(GanModel& gan, Adam& opt_g, Adam& opt_d,
                    const std::string& path);

struct EvalConfig {
  bool with_fid = false;
  uint64_t fx_seed = 17;
  bool mid_checkpoint = false;  // ReconGAN output of the chained family
};

// Eval-mode inference (batch-norm running stats), per-image metrics on [0,1]
// magnitude images, optional FID over the set.
MetricsReport evaluate(GanModel& gan, const std::vector<AcqPair>& test,
                       const EvalConfig& cfg = {});

// Mean over the set of 0.5*||target - recon||^2 in the network representation
// (eval mode); the training-progress yardstick.
double validation_imse(GanModel& gan, const std::vector<AcqPair>& data,
                       bool mid_checkpoint = false);

}  // namespace mrigan
