// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "lfnr/image.hpp"

namespace lfnr {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (views < 1 || views > 6)
    throw ConfigError("config: views must be in 1..6");
  if (size < 8 || size % 8 != 0)
    throw ConfigError("config: size must be a positive multiple of 8");
  if (n_coarse < 1) throw ConfigError("config: n_coarse must be >= 1");
  if (n_fine < 0) throw ConfigError("config: n_fine must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("config: lr must be positive");
  if (steps < 0) throw ConfigError("config: steps must be >= 0");
  if (ckpt_every < 1) throw ConfigError("config: ckpt_every must be >= 1");
  if (precision != "f32" && precision != "f64")
    throw ConfigError("config: precision must be f32 or f64");
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig mc;
  mc.enc.channels = channels;
  mc.enc.depth = depth;
  mc.enc.base2d = base2d;
  mc.hidden = hidden;
  mc.baseline_hidden = baseline_hidden;
  mc.n_coarse = n_coarse;
  mc.n_fine = n_fine;
  mc.dtype = precision == "f64" ? DType::F64 : DType::F32;
  return mc;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["data"] = data;
  j["views"] = views;
  j["size"] = size;
  j["n_coarse"] = n_coarse;
  j["n_fine"] = n_fine;
  j["lr"] = lr;
  j["steps"] = steps;
  j["seed"] = seed;
  j["ckpt_every"] = ckpt_every;
  j["precision"] = precision;
  j["channels"] = channels;
  j["depth"] = depth;
  j["base2d"] = base2d;
  j["hidden"] = hidden;
  j["baseline_hidden"] = baseline_hidden;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  try {
    c.data = j.at("data").get<std::string>();
    c.views = j.at("views").get<int>();
    c.size = j.at("size").get<int>();
    c.n_coarse = j.at("n_coarse").get<int>();
    c.n_fine = j.at("n_fine").get<int>();
    c.lr = j.at("lr").get<double>();
    c.steps = j.at("steps").get<int64_t>();
    c.seed = j.at("seed").get<uint64_t>();
    c.ckpt_every = j.at("ckpt_every").get<int64_t>();
    c.precision = j.at("precision").get<std::string>();
    c.channels = j.at("channels").get<int>();
    c.depth = j.at("depth").get<int>();
    c.base2d = j.at("base2d").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.baseline_hidden = j.at("baseline_hidden").get<int>();
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ConfigError(std::string("config snapshot: ") + e.what());
  }
  return c;
}

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

double parse_float(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

}  // namespace

void apply_override(TrainConfig& cfg, const std::string& key,
                    const std::string& value) {
  std::string v = unquote(strip(value));
  if (key == "data") cfg.data = v;
  else if (key == "views") cfg.views = static_cast<int>(parse_int(key, v));
  else if (key == "size") cfg.size = static_cast<int>(parse_int(key, v));
  else if (key == "n_coarse")
    cfg.n_coarse = static_cast<int>(parse_int(key, v));
  else if (key == "n_fine") cfg.n_fine = static_cast<int>(parse_int(key, v));
  else if (key == "lr") cfg.lr = parse_float(key, v);
  else if (key == "steps") cfg.steps = parse_int(key, v);
  else if (key == "seed")
    cfg.seed = static_cast<uint64_t>(parse_int(key, v));
  else if (key == "ckpt_every") cfg.ckpt_every = parse_int(key, v);
  else if (key == "precision") cfg.precision = v;
  else if (key == "channels")
    cfg.channels = static_cast<int>(parse_int(key, v));
  else if (key == "depth") cfg.depth = static_cast<int>(parse_int(key, v));
  else if (key == "base2d") cfg.base2d = static_cast<int>(parse_int(key, v));
  else if (key == "hidden") cfg.hidden = static_cast<int>(parse_int(key, v));
  else if (key == "baseline_hidden")
    cfg.baseline_hidden = static_cast<int>(parse_int(key, v));
  else
    throw ConfigError("config: unknown key '" + key + "'");
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    apply_override(cfg, strip(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

LoadedScene load_scene(const std::string& manifest_path) {
  LoadedScene s;
  s.manifest = import_dataset(manifest_path, false);
  s.dir = fs::path(manifest_path).parent_path().string();
  for (size_t i = 0; i < s.manifest.views.size(); ++i) {
    const ViewRecord& view = s.manifest.views[i];
    Tensor img = load_png((fs::path(s.dir) / view.image).string());
    if (img.dim(1) != s.manifest.height || img.dim(2) != s.manifest.width)
      throw IoError("dataset: image size mismatch in " + view.image);
    s.images.push_back(img);
    if (view.split == "train")
      s.train_idx.push_back(static_cast<int>(i));
    else
      s.test_idx.push_back(static_cast<int>(i));
  }
  return s;
}

Dataset load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw IoError("dataset: not a directory: " + dir);
  std::vector<std::string> manifests;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    fs::path m = entry.path() / "manifest.json";
    if (fs::exists(m)) manifests.push_back(m.string());
  }
  std::sort(manifests.begin(), manifests.end());
  if (manifests.empty())
    throw IoError("dataset: no */manifest.json under " + dir);
  Dataset ds;
  for (const std::string& m : manifests) {
    LoadedScene s = load_scene(m);
    if (ds.scenes.empty()) {
      ds.height = s.manifest.height;
      ds.width = s.manifest.width;
    } else if (s.manifest.height != ds.height ||
               s.manifest.width != ds.width) {
      throw IoError("dataset: mixed image sizes under " + dir);
    }
    ds.scenes.push_back(std::move(s));
  }
  return ds;
}

namespace {

// Target + k distinct input views from the scene's train split.
struct StepSample {
  int target = 0;
  std::vector<int> inputs;
};

StepSample sample_step(const LoadedScene& scene, int k, Rng& rng) {
  const std::vector<int>& tr = scene.train_idx;
  if (static_cast<int>(tr.size()) <= k)
    throw ConfigError("train: scene " + scene.manifest.scene_id + " has " +
                      std::to_string(tr.size()) +
                      " train views; need more than " + std::to_string(k));
  StepSample s;
  s.target = tr[rng.uniform_int(tr.size())];
  std::vector<int> pool;
  for (int idx : tr)
    if (idx != s.target) pool.push_back(idx);
  for (int i = 0; i < k; ++i) {
    size_t j = rng.uniform_int(pool.size());
    s.inputs.push_back(pool[j]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return s;
}

std::vector<InputView> gather_inputs(const LoadedScene& scene,
                                     const std::vector<int>& idx) {
  std::vector<InputView> in;
  for (int i : idx)
    in.push_back(InputView{scene.images[static_cast<size_t>(i)],
                           scene.manifest.views[static_cast<size_t>(i)].cam});
  return in;
}

struct TrainLoop {
  Model model;
  AdamMap adam;
  Rng rng{1};
  int64_t step = 0;
  TrainConfig cfg;

  void init_fresh() {
    model.init(cfg.model_config(), cfg.seed);
    for (const std::string& name : model.params.order) {
      const Tensor& p = model.params.at(name);
      adam[name] = AdamState{Tensor::zeros(p.shape(), p.dtype()),
                             Tensor::zeros(p.shape(), p.dtype())};
    }
    rng = Rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  }

  void save(const std::string& path) const {
    write_checkpoint(path, make_checkpoint(model, adam, step, rng.state(),
                                           cfg.to_json()));
  }

  void load(const std::string& path) {
    Checkpoint c = read_checkpoint(path);
    cfg = TrainConfig::from_json(c.config);
    model.init(cfg.model_config(), cfg.seed);
    adam.clear();
    apply_checkpoint(c, model, adam);
    step = c.step;
    rng.set_state(c.rng_state);
  }

  // One optimization step on (scene, sample); returns the loss report.
  LossReport run_step(const LoadedScene& scene, const StepSample& sample) {
    std::vector<InputView> inputs = gather_inputs(scene, sample.inputs);
    const Camera& target_cam =
        scene.manifest.views[static_cast<size_t>(sample.target)].cam;
    const Tensor& gt = scene.images[static_cast<size_t>(sample.target)];
    RenderOutputs out = model.render_image(inputs, target_cam, rng);
    Tensor gt_t = gt.dtype() == model.cfg.dtype ? gt : gt.to(model.cfg.dtype);
    Tensor gt_small = box_downsample4(gt_t);
    LossReport losses = compute_losses(out.image, gt_t, out.coarse_rgb,
                                       out.fine.depth, out.fine.opacity,
                                       gt_small);
    if (!std::isfinite(losses.total_v))
      throw NumericError("train: non-finite loss at step " +
                         std::to_string(step));
    model.params.zero_grads();
    backward(losses.total);
    ++step;
    for (const std::string& name : model.params.order) {
      Tensor& p = model.params.at(name);
      Tensor g = p.grad();
      if (!g.defined()) continue;
      adam_step(p, g, adam.at(name), step, cfg.lr);
    }
    return losses;
  }
};

void log_metrics(std::ofstream& log, int64_t step, const LossReport& l,
                 double wall_ms) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["fine"] = json_metric(l.fine_v);
  j["coarse_rgb"] = json_metric(l.coarse_rgb_v);
  j["depth_smooth"] = json_metric(l.depth_smooth_v);
  j["total"] = json_metric(l.total_v);
  j["wall_ms"] = wall_ms;
  log << j.dump() << "\n";
  log.flush();
}

}  // namespace

nlohmann::ordered_json json_metric(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

TrainResult train(const TrainConfig& cfg_in, const std::string& out_dir,
                  const std::string& resume_path) {
  TrainLoop loop;
  loop.cfg = cfg_in;
  loop.cfg.validate();
  if (resume_path.empty()) {
    loop.init_fresh();
  } else {
    loop.load(resume_path);
    loop.cfg.steps = cfg_in.steps;  // the target step count may be raised
  }
  Dataset ds = load_dataset(loop.cfg.data);
  if (ds.height != loop.cfg.size || ds.width != loop.cfg.size)
    throw ConfigError("train: dataset is " + std::to_string(ds.height) + "x" +
                      std::to_string(ds.width) + ", config size is " +
                      std::to_string(loop.cfg.size));

  fs::create_directories(out_dir);
  std::ofstream log(fs::path(out_dir) / "metrics.jsonl",
                    loop.step > 0 ? std::ios::app : std::ios::out);
  if (!log) throw IoError("train: cannot write metrics log in " + out_dir);
  std::string latest = (fs::path(out_dir) / "ckpt_latest.bin").string();
  if (loop.step == 0) loop.save(latest);

  TrainResult res;
  while (loop.step < loop.cfg.steps) {
    auto t0 = std::chrono::steady_clock::now();
    const LoadedScene& scene =
        ds.scenes[loop.rng.uniform_int(ds.scenes.size())];
    StepSample sample = sample_step(scene, loop.cfg.views, loop.rng);
    LossReport losses = loop.run_step(scene, sample);
    double wall = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    log_metrics(log, loop.step, losses, wall);
    res.last_total = losses.total_v;
    if (loop.step % loop.cfg.ckpt_every == 0) loop.save(latest);
  }
  res.steps_done = loop.step;
  res.final_ckpt = (fs::path(out_dir) / "final.ckpt").string();
  loop.save(res.final_ckpt);
  return res;
}

int64_t finetune_step_cap(int64_t requested) {
  return std::min<int64_t>(requested, 10000);
}

TrainResult finetune(const std::string& ckpt_path,
                     const std::string& scene_manifest, int views,
                     int64_t steps, double lr, const std::string& out_dir,
                     uint64_t seed) {
  TrainLoop loop;
  loop.load(ckpt_path);
  loop.cfg.lr = lr;
  loop.cfg.views = views;
  loop.step = 0;
  loop.rng = Rng(seed ^ 0xf1e2d3c4b5a69788ull);

  LoadedScene scene = load_scene(scene_manifest);
  // Only the input views are used: conditioning and supervision both come
  // from the scene's first `views` train views.
  if (static_cast<int>(scene.train_idx.size()) < views)
    throw ConfigError("finetune: scene has fewer than " +
                      std::to_string(views) + " train views");
  scene.train_idx.resize(static_cast<size_t>(views));

  int64_t cap = finetune_step_cap(steps);
  fs::create_directories(out_dir);
  std::ofstream log(fs::path(out_dir) / "metrics.jsonl");
  if (!log) throw IoError("finetune: cannot write metrics log in " + out_dir);

  TrainResult res;
  while (loop.step < cap) {
    auto t0 = std::chrono::steady_clock::now();
    StepSample sample;
    sample.target =
        scene.train_idx[loop.rng.uniform_int(scene.train_idx.size())];
    sample.inputs = scene.train_idx;  // condition on all input views
    LossReport losses = loop.run_step(scene, sample);
    double wall = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    log_metrics(log, loop.step, losses, wall);
    res.last_total = losses.total_v;
  }
  res.steps_done = loop.step;
  res.final_ckpt = (fs::path(out_dir) / "final.ckpt").string();
  loop.save(res.final_ckpt);
  return res;
}

namespace {

double camera_distance(const Camera& a, const Camera& b) {
  return (a.T - b.T).norm();
}

}  // namespace

EvalReport evaluate(const Model& model, const Dataset& ds,
                    const std::string& split, int views, uint64_t seed) {
  if (split != "train" && split != "test")
    throw ConfigError("eval: split must be train or test");
  EvalReport rep;
  rep.split = split;
  for (size_t si = 0; si < ds.scenes.size(); ++si) {
    const LoadedScene& scene = ds.scenes[si];
    const std::vector<int>& targets =
        split == "test" ? scene.test_idx : scene.train_idx;
    for (int tv : targets) {
      std::vector<int> input_idx;
      for (int idx : scene.train_idx) {
        if (idx == tv) continue;
        input_idx.push_back(idx);
        if (static_cast<int>(input_idx.size()) == views) break;
      }
      if (static_cast<int>(input_idx.size()) < views)
        throw ConfigError("eval: scene " + scene.manifest.scene_id +
                          " lacks input views");
      std::vector<InputView> inputs = gather_inputs(scene, input_idx);
      const Camera& target_cam =
          scene.manifest.views[static_cast<size_t>(tv)].cam;
      const Tensor& gt = scene.images[static_cast<size_t>(tv)];
      Rng rng(seed ^ (0x1000003ull * (si + 1) + static_cast<uint64_t>(tv)));
      NoGradGuard ng;
      RenderOutputs out = model.render_image(inputs, target_cam, rng);
      Tensor pred = out.image.dtype() == DType::F32 ? out.image
                                                    : out.image.to(DType::F32);
      EvalRow row;
      row.scene = scene.manifest.scene_id;
      row.view = tv;
      row.psnr = psnr(pred, gt);
      row.ssim = ssim(pred, gt);
      int best = input_idx[0];
      for (int idx : input_idx)
        if (camera_distance(scene.manifest.views[static_cast<size_t>(idx)].cam,
                            target_cam) <
            camera_distance(
                scene.manifest.views[static_cast<size_t>(best)].cam,
                target_cam))
          best = idx;
      row.nearest_psnr = psnr(scene.images[static_cast<size_t>(best)], gt);
      rep.rows.push_back(row);
    }
  }
  if (rep.rows.empty()) throw ConfigError("eval: split has no views");
  double sp = 0, ss = 0, sn = 0;
  for (const EvalRow& r : rep.rows) {
    sp += r.psnr;
    ss += r.ssim;
    sn += r.nearest_psnr;
  }
  rep.mean_psnr = sp / static_cast<double>(rep.rows.size());
  rep.mean_ssim = ss / static_cast<double>(rep.rows.size());
  rep.mean_nearest_psnr = sn / static_cast<double>(rep.rows.size());
  return rep;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["rows"] = nlohmann::ordered_json::array();
  for (const EvalRow& r : rows) {
    nlohmann::ordered_json rj;
    rj["scene"] = r.scene;
    rj["view"] = r.view;
    rj["psnr"] = json_metric(r.psnr);
    rj["ssim"] = json_metric(r.ssim);
    rj["nearest_psnr"] = json_metric(r.nearest_psnr);
    j["rows"].push_back(rj);
  }
  j["mean_psnr"] = json_metric(mean_psnr);
  j["mean_ssim"] = json_metric(mean_ssim);
  j["mean_nearest_psnr"] = json_metric(mean_nearest_psnr);
  return j;
}

std::string EvalReport::table() const {
  std::ostringstream os;
  os << "scene              view    psnr     ssim   nearest\n";
  for (const EvalRow& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-18s %4d %7.2f %8.4f %9.2f\n",
                  r.scene.c_str(), r.view, r.psnr, r.ssim, r.nearest_psnr);
    os << buf;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-18s %4s %7.2f %8.4f %9.2f\n", "mean", "",
                mean_psnr, mean_ssim, mean_nearest_psnr);
  os << buf;
  return os.str();
}

}  // namespace lfnr
