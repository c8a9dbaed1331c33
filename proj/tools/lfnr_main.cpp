// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lfnr/gradcheck.hpp"
#include "lfnr/image.hpp"
#include "lfnr/trainer.hpp"

namespace fs = std::filesystem;
using namespace lfnr;

namespace {

struct GenDataArgs {
  uint64_t seed = 1;
  int scenes = 1;
  int views = 8;
  int size = 64;
  std::string out;
};

int run_gen_data(const GenDataArgs& a) {
  if (a.size % 8 != 0 || a.size < 16)
    throw ConfigError("gen-data: --size must be a multiple of 8, >= 16");
  if (a.scenes < 1 || a.views < 1)
    throw ConfigError("gen-data: --scenes and --views must be >= 1");
  int n_test = std::max(2, a.views / 4);
  for (int i = 0; i < a.scenes; ++i) {
    uint64_t scene_seed = a.seed ^ (0x9e3779b97f4a7c15ull * (uint64_t(i) + 1));
    Scene scene = generate_scene(scene_seed);
    std::vector<Camera> train =
        camera_ring(a.views, 1.3, 20.0, Vec3::Zero(), a.size, a.size);
    std::vector<Camera> test = camera_ring(n_test, 1.3, 32.0, Vec3::Zero(),
                                           a.size, a.size, 0.9, 15.0);
    DatasetManifest m;
    char sid[32];
    std::snprintf(sid, sizeof sid, "scene_%03d", i);
    m.scene_id = sid;
    m.height = a.size;
    m.width = a.size;
    std::vector<Tensor> images;
    int vi = 0;
    for (const Camera& cam : train) {
      char name[32];
      std::snprintf(name, sizeof name, "view_%03d.png", vi++);
      m.views.push_back(ViewRecord{name, cam, "train"});
      images.push_back(raytrace_gt(scene, cam));
    }
    for (const Camera& cam : test) {
      char name[32];
      std::snprintf(name, sizeof name, "view_%03d.png", vi++);
      m.views.push_back(ViewRecord{name, cam, "test"});
      images.push_back(raytrace_gt(scene, cam));
    }
    std::string dir = (fs::path(a.out) / m.scene_id).string();
    export_dataset(m, images, dir);
    std::printf("%s: %d train + %d test views, hash %016llx\n", dir.c_str(),
                a.views, n_test,
                static_cast<unsigned long long>(scene_hash(scene)));
  }
  return 0;
}

struct OverrideFlags {
  // key -> raw value; only keys the user set are applied.
  std::vector<std::pair<std::string, std::string>> kv;
  void bind(CLI::App* cmd) {
    static const char* keys[] = {"data",     "views",      "size",
                                 "n_coarse", "n_fine",     "lr",
                                 "steps",    "seed",       "ckpt_every",
                                 "precision", "channels",  "depth",
                                 "base2d",   "hidden",     "baseline_hidden"};
    for (const char* k : keys) {
      std::string flag = "--" + std::string(k);
      for (char& c : flag)
        if (c == '_') c = '-';
      cmd->add_option_function<std::string>(
          flag,
          [this, k](const std::string& v) { kv.emplace_back(k, v); },
          std::string("override config key ") + k);
    }
  }
  void apply(TrainConfig& cfg) const {
    for (const auto& [k, v] : kv) apply_override(cfg, k, v);
  }
};

int run_train(const std::string& config_path, const std::string& out,
              const std::string& resume, const OverrideFlags& ov) {
  TrainConfig cfg =
      config_path.empty() ? TrainConfig{} : parse_config_file(config_path);
  ov.apply(cfg);
  cfg.validate();
  TrainResult res = train(cfg, out, resume);
  std::printf("trained %lld steps, final total %.6f -> %s\n",
              static_cast<long long>(res.steps_done), res.last_total,
              res.final_ckpt.c_str());
  return 0;
}

int run_finetune(const std::string& ckpt, const std::string& scene, int views,
                 int64_t steps, double lr, const std::string& out,
                 uint64_t seed) {
  TrainResult res = finetune(ckpt, scene, views, steps, lr, out, seed);
  std::printf("finetuned %lld steps, final total %.6f -> %s\n",
              static_cast<long long>(res.steps_done), res.last_total,
              res.final_ckpt.c_str());
  return 0;
}

void load_model(const std::string& ckpt_path, Model& model, AdamMap& adam,
                TrainConfig& cfg) {
  Checkpoint ckpt = read_checkpoint(ckpt_path);
  cfg = TrainConfig::from_json(ckpt.config);
  model.init(model_config_from_json(ckpt.config), 0);
  apply_checkpoint(ckpt, model, adam);
}

int run_render(const std::string& ckpt_path, const std::string& scene_path,
               int views, int targets, const std::string& out) {
  Model model;
  AdamMap adam;
  TrainConfig cfg;
  load_model(ckpt_path, model, adam, cfg);
  LoadedScene scene = load_scene(scene_path);
  if (views < 1 || views > static_cast<int>(scene.train_idx.size()))
    throw ConfigError("render: --views out of range for the scene");
  if (targets < 1) throw ConfigError("render: --targets must be >= 1");

  std::vector<InputView> inputs;
  for (int i = 0; i < views; ++i) {
    int idx = scene.train_idx[static_cast<size_t>(i)];
    inputs.push_back(InputView{scene.images[static_cast<size_t>(idx)],
                               scene.manifest.views[static_cast<size_t>(idx)].cam});
  }
  int h = scene.manifest.height, w = scene.manifest.width;
  std::vector<Camera> ring =
      camera_ring(targets, 1.3, 26.0, Vec3::Zero(), h, w, 0.9, 10.0);
  fs::create_directories(out);

  int64_t n_samples = model.cfg.n_coarse + model.cfg.n_fine;
  for (int t = 0; t < targets; ++t) {
    NoGradGuard ng;
    Rng rng(cfg.seed + 7919ull * (uint64_t(t) + 1));
    std::vector<FeatureVolume> vols =
        model.encode_views(inputs, ring[static_cast<size_t>(t)]);
    RenderOutputs ro = model.decode_lightfield(vols, inputs,
                                               ring[static_cast<size_t>(t)], rng);
    double base_ms = 0;
    model.baseline_evals = 0;
    Rng brng(cfg.seed + 7919ull * (uint64_t(t) + 1));
    Tensor base_img = model.decode_baseline(vols, inputs,
                                            ring[static_cast<size_t>(t)], brng,
                                            &base_ms);
    (void)base_img;

    char name[64];
    std::snprintf(name, sizeof name, "render_%03d.png", t);
    save_png((fs::path(out) / name).string(), ro.image);
    std::snprintf(name, sizeof name, "render_%03d_coarse.png", t);
    save_png((fs::path(out) / name).string(), ro.coarse_rgb);
    std::snprintf(name, sizeof name, "render_%03d_depth.png", t);
    save_png((fs::path(out) / name).string(), grayscale_visual(ro.fine.depth));
    std::snprintf(name, sizeof name, "render_%03d_opacity.png", t);
    save_png((fs::path(out) / name).string(),
             grayscale_visual(ro.fine.opacity));

    std::printf(
        "target %03d: head_evals=%lld baseline_evals=%lld ratio=%lld "
        "(N=%lld) feature_ms=%.1f head_ms=%.1f baseline_ms=%.1f "
        "head_speedup=%.1fx\n",
        t, static_cast<long long>(ro.head_evals),
        static_cast<long long>(model.baseline_evals),
        static_cast<long long>(model.baseline_evals /
                               std::max<int64_t>(1, ro.head_evals)),
        static_cast<long long>(n_samples), ro.feature_ms, ro.head_ms, base_ms,
        base_ms / std::max(1e-9, ro.head_ms));
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data,
             const std::string& split, const std::string& report, int views) {
  Model model;
  AdamMap adam;
  TrainConfig cfg;
  load_model(ckpt_path, model, adam, cfg);
  Dataset ds = load_dataset(data);
  int v = views > 0 ? views : cfg.views;
  EvalReport rep = evaluate(model, ds, split, v, cfg.seed);
  std::printf("%s", rep.table().c_str());
  if (!report.empty()) {
    std::ofstream f(report, std::ios::binary);
    if (!f) throw IoError("eval: cannot write report " + report);
    f << rep.to_json().dump(2) << "\n";
  }
  return 0;
}

int run_gradcheck_cmd(const std::string& component, int seeds) {
  GradReport rep = run_gradcheck(component, seeds);
  for (const auto& row : rep.rows)
    std::printf("%-28s max_err=%.3e tol=%.1e %s\n", row.name.c_str(),
                row.max_err, row.tol, row.pass ? "PASS" : "FAIL");
  std::printf("gradcheck: %zu cases, %d seeds each: %s\n", rep.rows.size(),
              seeds, rep.all_pass ? "all passed" : "FAILURES");
  return rep.all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lfnr: light field networks from few images"};
  app.require_subcommand(1);

  GenDataArgs gd;
  CLI::App* gen = app.add_subcommand("gen-data", "generate procedural scenes");
  gen->add_option("--seed", gd.seed, "master seed");
  gen->add_option("--scenes", gd.scenes, "number of scenes");
  gen->add_option("--views", gd.views, "train views per scene");
  gen->add_option("--size", gd.size, "image size (multiple of 8)");
  gen->add_option("--out", gd.out, "output directory")->required();

  std::string tr_config, tr_out, tr_resume;
  OverrideFlags tr_ov;
  CLI::App* tr = app.add_subcommand("train", "train from scratch");
  tr->add_option("--config", tr_config, "key = value config file");
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");
  tr_ov.bind(tr);

  std::string ft_ckpt, ft_scene, ft_out;
  int ft_views = 2;
  int64_t ft_steps = 1000;
  double ft_lr = 1e-5;
  uint64_t ft_seed = 1;
  CLI::App* ft = app.add_subcommand("finetune", "finetune on one scene");
  ft->add_option("--ckpt", ft_ckpt, "checkpoint path")->required();
  ft->add_option("--scene", ft_scene, "scene manifest.json")->required();
  ft->add_option("--views", ft_views, "input views to finetune on");
  ft->add_option("--steps", ft_steps, "steps (hard cap 10000)");
  ft->add_option("--lr", ft_lr, "learning rate");
  ft->add_option("--seed", ft_seed, "rng seed");
  ft->add_option("--out", ft_out, "output directory")->required();

  std::string rd_ckpt, rd_scene, rd_out;
  int rd_views = 2, rd_targets = 1;
  CLI::App* rd = app.add_subcommand("render", "render novel views");
  rd->add_option("--ckpt", rd_ckpt, "checkpoint path")->required();
  rd->add_option("--scene", rd_scene, "scene manifest.json")->required();
  rd->add_option("--views", rd_views, "input views");
  rd->add_option("--targets", rd_targets, "target ring size");
  rd->add_option("--out", rd_out, "output directory")->required();

  std::string ev_ckpt, ev_data, ev_split = "test", ev_report;
  int ev_views = 0;
  CLI::App* ev = app.add_subcommand("eval", "evaluate PSNR/SSIM on a split");
  ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--split", ev_split, "train | test");
  ev->add_option("--report", ev_report, "JSON report path");
  ev->add_option("--views", ev_views, "input views (default: from config)");

  std::string gc_component;
  int gc_seeds = 20;
  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference checks");
  gc->add_option("--component", gc_component, "name prefix filter");
  gc->add_option("--seeds", gc_seeds, "seeds per case");

  try {
    app.parse(argc, argv);
    if (*gen) return run_gen_data(gd);
    if (*tr) return run_train(tr_config, tr_out, tr_resume, tr_ov);
    if (*ft)
      return run_finetune(ft_ckpt, ft_scene, ft_views, ft_steps, ft_lr,
                          ft_out, ft_seed);
    if (*rd) return run_render(rd_ckpt, rd_scene, rd_views, rd_targets, rd_out);
    if (*ev) return run_eval(ev_ckpt, ev_data, ev_split, ev_report, ev_views);
    if (*gc) return run_gradcheck_cmd(gc_component, gc_seeds);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
