#include "mrigan/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "mrigan/io.hpp"

namespace fs = std::filesystem;

namespace mrigan {

namespace {

const std::vector<std::string> kMethodOrder = {"zf",    "tv",    "dict", "dagan",
                                               "kigan", "recon", "refine"};

bool known_method(const std::string& m) {
  return std::find(kMethodOrder.begin(), kMethodOrder.end(), m) != kMethodOrder.end();
}

}  // namespace

std::string method_label(const std::string& method) {
  if (method == "zf") return "ZF";
  if (method == "tv") return "TV";
  if (method == "dict") return "DICT";
  if (method == "dagan") return "DAGAN";
  if (method == "kigan") return "KIGAN";
  if (method == "recon") return "ReconGAN";
  if (method == "refine") return "RefineGAN";
  return method;
}

std::string scheme_label(MaskScheme scheme) {
  switch (scheme) {
    case MaskScheme::cartesian: return "Cartesian";
    case MaskScheme::radial: return "Radial";
    case MaskScheme::spiral: return "Spiral";
    case MaskScheme::full: return "Full";
  }
  return "?";
}

std::string target_label(MaskScheme scheme, double target) {
  if (scheme == MaskScheme::cartesian) {
    return (target == std::floor(target) ? fmt_fixed(target, 0) : fmt_fixed(target, 1)) + "X";
  }
  double pct = target * 100.0;
  return (pct == std::floor(pct) ? fmt_fixed(pct, 0) : fmt_fixed(pct, 1)) + "%";
}

// ---- dataset -------------------------------------------------------------------------

Volume ingest(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const std::string& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        std::string ext = e.path().extension().string();
        if (ext == ".pgm" || ext == ".mbt") files.push_back(e.path().string());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ParamError("ingest: no input files");

  Volume v;
  std::vector<std::string> bad;
  std::vector<size_t> shape;
  for (const std::string& f : files) {
    Tensor t = f.size() > 4 && f.substr(f.size() - 4) == ".pgm" ? read_pgm(f)
                                                                : load_mbt(f);
    if (t.rank() != 2) {
      bad.push_back(f + " (rank " + std::to_string(t.rank()) + ")");
      continue;
    }
    if (shape.empty()) shape = t.shape();
    if (t.shape() != shape) {
      bad.push_back(f);
      continue;
    }
    v.slices.push_back(t.is_complex() ? t : to_complex(t));
  }
  if (!bad.empty()) {
    std::string msg = "ingest: mixed shapes or bad files:";
    for (const auto& f : bad) msg += " " + f;
    throw IoError(msg);
  }
  double vmax = 0.0;
  for (const Tensor& s : v.slices) vmax = std::max(vmax, max_abs(s));
  if (vmax > 0)
    for (Tensor& s : v.slices) s = scale(s, 1.0 / vmax);
  v.subject_id = files.front();
  return v;
}

Volume phantom_volume(size_t n_slices, size_t size, uint64_t seed) {
  if (n_slices == 0 || size == 0) throw ParamError("phantom_volume: empty spec");
  Volume v;
  v.anatomy = "phantom";
  v.subject_id = "phantom-" + std::to_string(seed);
  Rng rng = Rng(seed).derive("phantom");
  std::vector<Ellipse> cur = shepp_logan_ellipses();
  for (size_t s = 0; s < n_slices; ++s) {
    if (s > 0) {
      // random-walk jitter of the soft-tissue ellipses; skull stays put
      for (size_t e = 2; e < cur.size(); ++e) {
        cur[e].x0 += 0.004 * rng.normal();
        cur[e].y0 += 0.004 * rng.normal();
        cur[e].ax = std::max(0.01, cur[e].ax * (1.0 + 0.02 * rng.normal()));
        cur[e].ay = std::max(0.01, cur[e].ay * (1.0 + 0.02 * rng.normal()));
        cur[e].phi += 0.01 * rng.normal();
      }
    }
    v.slices.push_back(to_complex(render_phantom(cur, size, size)));
  }
  return v;
}

// ---- config --------------------------------------------------------------------------

namespace {

using nlohmann::json;

LossWeights parse_weights(const json& j, LossWeights base) {
  if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
  if (j.contains("beta")) base.beta = j.at("beta").get<double>();
  if (j.contains("gamma")) base.gamma = j.at("gamma").get<double>();
  if (j.contains("adv")) base.adv = j.at("adv").get<double>();
  return base;
}

TrainConfig parse_train(const json& j, TrainConfig base) {
  if (j.contains("steps")) base.steps = j.at("steps").get<int>();
  if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<size_t>();
  if (j.contains("lr")) base.lr = j.at("lr").get<double>();
  if (j.contains("beta1")) base.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) base.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) base.eps = j.at("eps").get<double>();
  if (j.contains("d_steps_per_g_step"))
    base.d_steps_per_g_step = j.at("d_steps_per_g_step").get<int>();
  if (j.contains("checkpoint_every"))
    base.checkpoint_every = j.at("checkpoint_every").get<int>();
  if (j.contains("saturating_adv")) base.saturating_adv = j.at("saturating_adv").get<bool>();
  if (j.contains("weights")) {
    base.weights = parse_weights(j.at("weights"), base.weights);
    base.weights_set = true;
  }
  return base;
}

ModelSpec parse_model(const json& j, ModelSpec base) {
  if (j.contains("depth")) base.depth = j.at("depth").get<size_t>();
  if (j.contains("base_channels")) base.base_channels = j.at("base_channels").get<size_t>();
  if (j.contains("image_size")) base.image_size = j.at("image_size").get<size_t>();
  return base;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParamError("config parse error in " + path + ": " + e.what());
  }
  ExperimentConfig c;
  try {
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      c.dataset_type = d.value("type", std::string("phantom"));
      if (c.dataset_type == "phantom") {
        c.phantom_size = d.value("size", size_t{64});
        c.train_slices = d.value("train_slices", size_t{20});
        c.test_slices = d.value("test_slices", size_t{5});
      } else if (c.dataset_type == "files") {
        for (const auto& f : d.at("train")) c.train_files.push_back(f.get<std::string>());
        for (const auto& f : d.at("test")) c.test_files.push_back(f.get<std::string>());
      } else {
        throw ParamError("config: dataset.type must be phantom or files");
      }
    }
    for (const auto& m : j.at("masks")) {
      MaskSet ms;
      ms.scheme = mask_scheme_from_string(m.at("scheme").get<std::string>());
      for (const auto& t : m.at("targets")) ms.targets.push_back(t.get<double>());
      c.masks.push_back(std::move(ms));
    }
    for (const auto& m : j.at("methods")) {
      std::string name = m.get<std::string>();
      if (!known_method(name)) throw ParamError("config: unknown method " + name);
      c.methods.push_back(name);
    }
    c.center_fraction = j.value("center_fraction", 0.08);
    c.seed = j.value("seed", uint64_t{0});
    c.with_fid = j.value("fid", false);
    c.out_dir = j.value("out", std::string("out"));
    c.jobs = j.value("jobs", size_t{1});
    if (j.contains("tv")) {
      const json& t = j.at("tv");
      c.tv.lambda = t.value("lambda", c.tv.lambda);
      c.tv.step = t.value("step", c.tv.step);
      c.tv.iters = t.value("iters", c.tv.iters);
      c.tv.tol = t.value("tol", c.tv.tol);
    }
    if (j.contains("dict")) {
      const json& d = j.at("dict");
      c.dict.patch = d.value("patch", c.dict.patch);
      c.dict.atoms = d.value("atoms", c.dict.atoms);
      c.dict.sparsity = d.value("sparsity", c.dict.sparsity);
      c.dict.outer_iters = d.value("outer_iters", c.dict.outer_iters);
    }
    if (j.contains("model")) c.model = parse_model(j.at("model"), c.model);
    if (j.contains("train")) c.train = parse_train(j.at("train"), c.train);
    if (j.contains("overrides")) {
      for (const auto& [fam, sub] : j.at("overrides").items()) {
        if (sub.contains("model"))
          c.model_overrides[fam] = parse_model(sub.at("model"), c.model);
        if (sub.contains("train"))
          c.train_overrides[fam] = parse_train(sub.at("train"), c.train);
      }
    }
  } catch (const json::exception& e) {
    throw ParamError("config error in " + path + ": " + e.what());
  }
  if (c.masks.empty() || c.methods.empty())
    throw ParamError("config: at least one mask set and one method required");
  for (const auto& f : c.train_files)
    if (!fs::exists(f)) throw ParamError("config: missing train file " + f);
  for (const auto& f : c.test_files)
    if (!fs::exists(f)) throw ParamError("config: missing test file " + f);
  return c;
}

// ---- error map -----------------------------------------------------------------------

Tensor error_map(const Tensor& rec, const Tensor& gt, double vmax) {
  if (!rec.same_shape(gt)) throw ShapeError("error_map: shape mismatch");
  if (vmax <= 0) throw ParamError("error_map: vmax must be positive");
  Tensor out = Tensor::zeros(rec.shape());
  for (size_t i = 0; i < out.numel(); ++i)
    out.r(i) = std::min(1.0, std::abs(rec.val(i) - gt.val(i)) / vmax);
  return out;
}

// ---- table ----------------------------------------------------------------------------

namespace {

size_t display_width(const std::string& s) {
  size_t n = 0;
  for (unsigned char b : s)
    if ((b & 0xC0) != 0x80) ++n;  // count UTF-8 code points
  return n;
}

std::string pad(const std::string& s, size_t width) {
  std::string out = s;
  size_t w = display_width(s);
  if (w < width) out.append(width - w, ' ');
  return out;
}

std::string entry_text(const TableCellValue& v, bool scalar, bool starred) {
  if (v.failed) return "failed";
  if (!v.present) return "--";
  std::string s = scalar ? fmt_fixed(v.mean, 2)
                         : fmt_fixed(v.mean, 2) + "±" + fmt_fixed(v.stdev, 2);
  if (starred) s += "*";
  return s;
}

}  // namespace

std::string format_table(const std::vector<std::string>& method_headers,
                         const std::vector<TableRow>& rows) {
  const size_t ncols = 3 + method_headers.size();
  std::vector<std::string> headers = {"Mask", "AF/SR", "Metric"};
  headers.insert(headers.end(), method_headers.begin(), method_headers.end());

  // Resolve per-row stars before measuring column widths.
  std::vector<std::vector<std::string>> body;
  for (const TableRow& row : rows) {
    std::vector<std::string> cells(ncols);
    cells[0] = row.mask_label;
    cells[1] = row.target_label;
    cells[2] = row.metric;
    double best = row.lower_is_better ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const TableCellValue& v : row.values)
      if (v.present && !v.failed) {
        any = true;
        best = row.lower_is_better ? std::min(best, v.mean) : std::max(best, v.mean);
      }
    for (size_t m = 0; m < row.values.size(); ++m) {
      const TableCellValue& v = row.values[m];
      bool star = any && v.present && !v.failed && v.mean == best;
      cells[3 + m] = entry_text(v, row.scalar, star);
    }
    body.push_back(std::move(cells));
  }

  std::vector<size_t> width(ncols);
  for (size_t c = 0; c < ncols; ++c) width[c] = display_width(headers[c]);
  for (const auto& cells : body)
    for (size_t c = 0; c < ncols; ++c)
      width[c] = std::max(width[c], display_width(cells[c]));

  size_t total = 0;
  for (size_t c = 0; c < ncols; ++c) total += width[c];
  total += 3 * (ncols - 1);
  const std::string rule(total, '-');

  auto emit_row = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (size_t c = 0; c < ncols; ++c) {
      if (c) line += " | ";
      line += pad(cells[c], width[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + "\n";
  };

  std::string out = emit_row(headers) + rule + "\n";
  for (size_t r = 0; r < body.size(); ++r) {
    // blank repeated group labels so each (mask, target) group reads as one block
    if (r > 0 && body[r][0] == body[r - 1][0] && body[r][1] == body[r - 1][1]) {
      auto cells = body[r];
      cells[0].clear();
      cells[1].clear();
      out += emit_row(cells);
    } else {
      if (r > 0) out += rule + "\n";
      out += emit_row(body[r]);
    }
  }
  out += rule + "\n";
  return out;
}

void write_metrics_csv(const std::vector<CellOutcome>& cells, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "mask,target,method,metric,mean,std\n";
  for (const CellOutcome& c : cells) {
    std::string tgt = c.target == std::floor(c.target) && c.scheme == "cartesian"
                          ? fmt_fixed(c.target, 0)
                          : fmt_fixed(c.target, 2);
    auto emit = [&](const std::string& metric, const std::string& mean,
                    const std::string& stdev) {
      out << c.scheme << ',' << tgt << ',' << c.method << ',' << metric << ','
          << mean << ',' << stdev << '\n';
    };
    if (c.failed) {
      emit("psnr", "nan", "nan");
      emit("ssim", "nan", "nan");
      emit("rmse", "nan", "nan");
      continue;
    }
    Aggregate p = c.report.psnr(), s = c.report.ssim(), r = c.report.rmse();
    emit("psnr", fmt_fixed(p.mean, 6), fmt_fixed(p.stdev, 6));
    emit("ssim", fmt_fixed(s.mean, 6), fmt_fixed(s.stdev, 6));
    emit("rmse", fmt_fixed(r.mean, 6), fmt_fixed(r.stdev, 6));
    if (c.report.fid_value)
      emit("fid", fmt_fixed(*c.report.fid_value, 6), fmt_fixed(0.0, 6));
  }
}

// ---- grid execution ---------------------------------------------------------------------

namespace {

std::string cell_dir_name(MaskScheme scheme, double target) {
  std::string t = target_label(scheme, target);
  std::string out = to_string(scheme) + "_";
  for (char ch : t) {
    if (ch == '%') out += "pct";
    else out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

MetricsReport eval_image_set(const std::vector<Tensor>& recs,
                             const std::vector<Tensor>& gts, bool with_fid,
                             uint64_t fx_seed) {
  MetricsReport rep;
  for (size_t i = 0; i < recs.size(); ++i)
    rep.add_image(psnr(recs[i], gts[i]), ssim(recs[i], gts[i]), rmse(recs[i], gts[i]));
  if (with_fid) {
    std::vector<Tensor> ra, rb;
    for (size_t i = 0; i < recs.size(); ++i) {
      ra.push_back(recs[i].reshaped({1, 1, recs[i].extent(0), recs[i].extent(1)}));
      rb.push_back(gts[i].reshaped({1, 1, gts[i].extent(0), gts[i].extent(1)}));
    }
    rep.fid_value = fid(ra, rb, FeatureExtractor::random_conv(1, fx_seed));
  }
  return rep;
}

void write_cell_artifacts(const std::string& dir, const std::vector<Tensor>& recs,
                          const std::vector<Tensor>& gts, const MetricsReport& rep) {
  fs::create_directories(dir);
  for (size_t i = 0; i < recs.size(); ++i) {
    write_pgm(recs[i], dir + "/rec_" + std::to_string(i) + ".pgm");
    write_pgm(error_map(recs[i], gts[i]), dir + "/err_" + std::to_string(i) + ".pgm");
  }
  std::ofstream out(dir + "/metrics.csv", std::ios::trunc);
  out << "image,psnr,ssim,rmse\n";
  for (size_t i = 0; i < rep.psnr_values.size(); ++i)
    out << i << ',' << fmt_fixed(std::min(rep.psnr_values[i], kPsnrCap), 6) << ','
        << fmt_fixed(rep.ssim_values[i], 6) << ',' << fmt_fixed(rep.rmse_values[i], 6)
        << '\n';
  if (rep.fid_value) out << "fid," << fmt_fixed(*rep.fid_value, 6) << ",,\n";
}

GanFamily family_of(const std::string& method) {
  if (method == "dagan") return GanFamily::dagan;
  if (method == "kigan") return GanFamily::kigan;
  return GanFamily::recon_refine;
}

struct CellContext {
  const ExperimentConfig* cfg;
  MaskScheme scheme;
  double target;
  uint64_t cell_seed;
  Mask mask;
  std::vector<AcqPair> train_pairs, test_pairs;
  std::vector<Tensor> gts;  // [0,1] magnitude ground truths
  std::string dir;
};

ModelSpec model_spec_for(const CellContext& ctx, GanFamily fam) {
  std::string key = to_string(fam);
  auto it = ctx.cfg->model_overrides.find(key);
  ModelSpec s = it != ctx.cfg->model_overrides.end() ? it->second : ctx.cfg->model;
  s.family = fam;
  if (s.image_size == 0) s.image_size = ctx.mask.height();
  s.seed = Rng(ctx.cell_seed).derive(key + "/init").seed();
  return s;
}

TrainConfig train_config_for(const CellContext& ctx, GanFamily fam) {
  std::string key = to_string(fam);
  auto it = ctx.cfg->train_overrides.find(key);
  TrainConfig t = it != ctx.cfg->train_overrides.end() ? it->second : ctx.cfg->train;
  t.seed = Rng(ctx.cell_seed).derive(key + "/train").seed();
  if (!t.weights_set) t.weights = default_weights(fam);
  return t;
}

std::vector<Tensor> learned_method_recs(const CellContext& ctx, const std::string& method,
                                        GanModel& model, bool mid) {
  std::vector<Tensor> recs;
  for (size_t i = 0; i < ctx.test_pairs.size(); ++i) {
    Batch b = assemble_batch(model.family(), ctx.test_pairs, {i});
    recs.push_back(model.reconstruct(b, mid)[0]);
  }
  (void)method;
  return recs;
}

std::vector<CellOutcome> run_cell(const ExperimentConfig& cfg, MaskScheme scheme,
                                  double target, const Volume& train_vol,
                                  const Volume& test_vol) {
  CellContext ctx;
  ctx.cfg = &cfg;
  ctx.scheme = scheme;
  ctx.target = target;
  std::string cell_id = to_string(scheme) + "/" + fmt_fixed(target, 4);
  ctx.cell_seed = cfg.seed ^ splitmix64(fnv1a64(cell_id));
  ctx.dir = cfg.out_dir + "/cells/" + cell_dir_name(scheme, target);

  std::vector<CellOutcome> outcomes;
  auto fail_all = [&](const std::string& why) {
    for (const std::string& m : cfg.methods) {
      CellOutcome o;
      o.scheme = to_string(scheme);
      o.target = target;
      o.method = m;
      o.failed = true;
      o.error = why;
      outcomes.push_back(std::move(o));
    }
    return outcomes;
  };

  try {
    const size_t h = train_vol.slices[0].extent(0), w = train_vol.slices[0].extent(1);
    ctx.mask = make_mask(scheme, h, w, target, cfg.center_fraction, ctx.cell_seed);
    fs::create_directories(ctx.dir);
    save_mask_pgm(ctx.mask, ctx.dir + "/mask.pgm");
    for (const Tensor& s : train_vol.slices) ctx.train_pairs.push_back(acquire(s, ctx.mask));
    for (const Tensor& s : test_vol.slices) {
      ctx.test_pairs.push_back(acquire(s, ctx.mask));
      ctx.gts.push_back(clamp(abs(s), 0.0, 1.0));
    }
  } catch (const std::exception& e) {
    return fail_all(e.what());
  }

  std::unique_ptr<GanModel> rr_model;  // shared by recon and refine
  for (const std::string& method : cfg.methods) {
    CellOutcome o;
    o.scheme = to_string(scheme);
    o.target = target;
    o.method = method;
    std::string mdir = ctx.dir + "/" + method;
    try {
      std::vector<Tensor> recs;
      if (method == "zf") {
        for (const AcqPair& p : ctx.test_pairs)
          recs.push_back(clamp(abs(zero_fill(p.y_u)), 0.0, 1.0));
      } else if (method == "tv") {
        for (size_t i = 0; i < ctx.test_pairs.size(); ++i) {
          TvResult r = tv_reconstruct(ctx.test_pairs[i].y_u, ctx.mask, cfg.tv);
          if (i == 0) {
            fs::create_directories(mdir);
            write_objective_csv(r, mdir + "/trace_0.csv");
          }
          recs.push_back(clamp(r.image, 0.0, 1.0));
        }
      } else if (method == "dict") {
        DictConfig dc = cfg.dict;
        dc.seed = ctx.cell_seed;
        for (const AcqPair& p : ctx.test_pairs)
          recs.push_back(clamp(dict_reconstruct(p.y_u, ctx.mask, dc), 0.0, 1.0));
      } else if (method == "dagan" || method == "kigan") {
        GanFamily fam = family_of(method);
        auto model = build_gan(model_spec_for(ctx, fam));
        TrainState st = train(*model, ctx.train_pairs, train_config_for(ctx, fam));
        fs::create_directories(mdir);
        write_loss_csv(st, mdir + "/loss.csv");
        recs = learned_method_recs(ctx, method, *model, false);
      } else {  // recon | refine
        if (!rr_model) {
          rr_model = build_gan(model_spec_for(ctx, GanFamily::recon_refine));
          TrainState st = train(*rr_model, ctx.train_pairs,
                                train_config_for(ctx, GanFamily::recon_refine));
          fs::create_directories(mdir);
          write_loss_csv(st, mdir + "/loss.csv");
        }
        recs = learned_method_recs(ctx, method, *rr_model, method == "recon");
      }
      o.report = eval_image_set(recs, ctx.gts, cfg.with_fid,
                                Rng(cfg.seed).derive("fid").seed());
      write_cell_artifacts(mdir, recs, ctx.gts, o.report);
    } catch (const std::exception& e) {
      o.failed = true;
      o.error = e.what();
    }
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

}  // namespace

GridResult run_grid(const ExperimentConfig& cfg) {
  if (cfg.masks.empty() || cfg.methods.empty())
    throw ParamError("run_grid: at least one mask cell and one method required");
  for (const std::string& m : cfg.methods)
    if (!known_method(m)) throw ParamError("run_grid: unknown method " + m);

  // canonical method order, duplicates dropped
  ExperimentConfig c = cfg;
  c.methods.clear();
  for (const std::string& m : kMethodOrder)
    if (std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end())
      c.methods.push_back(m);

  Volume train_vol, test_vol;
  if (c.dataset_type == "phantom") {
    train_vol = phantom_volume(c.train_slices, c.phantom_size,
                               Rng(c.seed).derive("dataset/train").seed());
    test_vol = phantom_volume(c.test_slices, c.phantom_size,
                              Rng(c.seed).derive("dataset/test").seed());
  } else {
    train_vol = ingest(c.train_files);
    test_vol = ingest(c.test_files);
  }
  const bool wants_kigan =
      std::find(c.methods.begin(), c.methods.end(), "kigan") != c.methods.end();
  if (wants_kigan && (train_vol.slices.size() < 3 || test_vol.slices.size() < 3))
    throw ParamError("run_grid: kigan needs at least 3 adjacent slices per volume");

  struct Job {
    MaskScheme scheme;
    double target;
  };
  std::vector<Job> jobs;
  for (const MaskSet& ms : c.masks)
    for (double t : ms.targets) jobs.push_back({ms.scheme, t});

  fs::create_directories(c.out_dir + "/cells");
  std::vector<std::vector<CellOutcome>> results(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      results[i] = run_cell(c, jobs[i].scheme, jobs[i].target, train_vol, test_vol);
    }
  };
  size_t nthreads = std::max<size_t>(1, std::min(c.jobs, jobs.size()));
  std::vector<std::thread> pool;
  for (size_t i = 0; i + 1 < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  GridResult grid;
  for (auto& r : results)
    for (auto& o : r) grid.cells.push_back(std::move(o));

  // merged outputs
  std::vector<std::string> headers;
  for (const std::string& m : c.methods) headers.push_back(method_label(m));
  std::vector<TableRow> rows;
  for (size_t ji = 0; ji < jobs.size(); ++ji) {
    struct MetricDef {
      const char* name;
      bool lower;
      bool scalar;
    };
    std::vector<MetricDef> defs = {{"PSNR", false, false},
                                   {"SSIM", false, false},
                                   {"RMSE", true, false}};
    if (c.with_fid) defs.push_back({"FID", true, true});
    for (const MetricDef& def : defs) {
      TableRow row;
      row.mask_label = scheme_label(jobs[ji].scheme);
      row.target_label = target_label(jobs[ji].scheme, jobs[ji].target);
      row.metric = def.name;
      row.lower_is_better = def.lower;
      row.scalar = def.scalar;
      for (size_t mi = 0; mi < c.methods.size(); ++mi) {
        const CellOutcome& o = grid.cells[ji * c.methods.size() + mi];
        TableCellValue v;
        if (o.failed) {
          v.failed = true;
        } else {
          v.present = true;
          std::string metric = def.name;
          if (metric == "PSNR") {
            Aggregate a = o.report.psnr();
            v.mean = a.mean;
            v.stdev = a.stdev;
          } else if (metric == "SSIM") {
            Aggregate a = o.report.ssim();
            v.mean = a.mean;
            v.stdev = a.stdev;
          } else if (metric == "RMSE") {
            Aggregate a = o.report.rmse();
            v.mean = a.mean * 100.0;  // published x1e-2 convention
            v.stdev = a.stdev * 100.0;
          } else {
            if (o.report.fid_value)
              v.mean = *o.report.fid_value;
            else
              v.present = false;
          }
        }
        row.values.push_back(v);
      }
      rows.push_back(std::move(row));
    }
  }
  grid.table_text = format_table(headers, rows);

  write_metrics_csv(grid.cells, c.out_dir + "/table.csv");
  std::ofstream tt(c.out_dir + "/table.txt", std::ios::trunc);
  tt << grid.table_text;
  return grid;
}

}  // namespace mrigan
