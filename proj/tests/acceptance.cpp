// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: runs the ten criteria at desk scale and prints one
// pass/fail line per criterion. Exits 0 only when every line passes.
// `--only 7` or `--only 7,8` restricts the run while tuning.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "lfnr/gradcheck.hpp"
#include "lfnr/image.hpp"
#include "lfnr/model.hpp"
#include "lfnr/trainer.hpp"
#include "oracles.hpp"

using namespace lfnr;
namespace fs = std::filesystem;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path work_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "lfnr_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path fresh_dir(const std::string& leaf) {
  fs::path dir = work_root() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("acceptance: cannot read " + path);
  return std::vector<char>(std::istreambuf_iterator<char>(is), {});
}

bool files_equal(const fs::path& a, const fs::path& b) {
  return slurp(a.string()) == slurp(b.string());
}

Tensor rand_tensor(const Shape& shape, Rng& rng, double lo, double hi,
                   DType dt) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_vector(v, shape, dt);
}

// gen-data layout: n_train ring views plus n_test offset-ring views per
// procedural scene.
void make_dataset(const fs::path& dir, int n_scenes, int n_train, int n_test,
                  int size, uint64_t seed) {
  for (int i = 0; i < n_scenes; ++i) {
    Scene scene =
        generate_scene(seed ^ (0x9e3779b97f4a7c15ull * uint64_t(i + 1)));
    std::vector<Camera> train =
        camera_ring(n_train, 1.3, 20.0, Vec3::Zero(), size, size);
    std::vector<Camera> test =
        camera_ring(n_test, 1.3, 32.0, Vec3::Zero(), size, size, 0.9, 15.0);
    DatasetManifest m;
    char sid[32];
    std::snprintf(sid, sizeof sid, "scene_%03d", i);
    m.scene_id = sid;
    m.height = m.width = size;
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
    export_dataset(m, images, (dir / m.scene_id).string());
  }
}

void load_model(const std::string& ckpt_path, Model& model) {
  Checkpoint ck = read_checkpoint(ckpt_path);
  TrainConfig tc = TrainConfig::from_json(ck.config);
  model.init(tc.model_config(), tc.seed);
  AdamMap adam;
  apply_checkpoint(ck, model, adam);
}

// Shared experiment dims for criteria 7 and 8: small enough for CPU
// minutes, big enough to clear the PSNR bars.
TrainConfig experiment_cfg(const std::string& data) {
  TrainConfig c;
  c.data = data;
  c.views = 2;
  c.size = 64;
  c.n_coarse = 16;
  c.n_fine = 8;
  c.lr = 2e-3;
  c.steps = 2000;
  c.seed = 1;
  c.ckpt_every = 1000;
  c.channels = 16;
  c.depth = 16;
  c.base2d = 32;
  c.hidden = 128;
  c.baseline_hidden = 16;
  return c;
}

// 1. Gradient suite: every diffcore primitive and the end-to-end pipeline,
// 20 seeds per case, under five minutes.
Outcome crit_gradients() {
  double t0 = now_s();
  GradReport rep = run_gradcheck("", 20);
  double dt = now_s() - t0;
  double worst = 0.0;
  std::string worst_name = "-";
  for (const GradReport::Row& r : rep.rows)
    if (r.max_err > worst) {
      worst = r.max_err;
      worst_name = r.name;
    }
  bool pass = rep.all_pass && dt <= 300.0;
  return {pass, fmt("%zu cases x 20 seeds, worst rel err %.2e (%s), %.0f s "
                    "(limit 300)",
                    rep.rows.size(), worst, worst_name.c_str(), dt)};
}

// 2. Compositing matches the scalar Eq. 5-6 loop on 1,000 random rays,
// with nonnegative weights and ray mass Sum T alpha <= 1.
Outcome crit_compositing() {
  Rng rng(202);
  double max_diff = 0.0, worst_mass = 0.0, min_weight = 0.0;
  double min_trans = 1.0;
  int rays = 0;
  for (int b = 0; b < 10; ++b) {
    int n = 4 + 3 * b;
    const int64_t h = 10, w = 10, cp = 6;
    const double z_near = 0.8, z_far = 4.2;
    double cap = (z_far - z_near) / n;
    DepthGrid grid =
        make_stratified_grid(z_near, z_far, n, h, w, rng, DType::F64);
    Tensor vol = rand_tensor({cp, n, h, w}, rng, -4.0, 4.0, DType::F64);
    RenderedFeatures rf = composite(vol, grid, z_near, z_far);
    Tensor wt = composite_weights(vol, grid, z_near, z_far);
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        std::vector<double> t = grid.ray(y, x);
        std::vector<std::vector<double>> payload(
            cp, std::vector<double>(static_cast<size_t>(n)));
        for (int64_t c = 0; c < cp; ++c)
          for (int z = 0; z < n; ++z)
            payload[static_cast<size_t>(c)][static_cast<size_t>(z)] =
                vol.at({c, z, y, x});
        oracles::RayComposite orc = oracles::composite_ray(payload, t, cap);
        for (int64_t c = 0; c + 1 < cp; ++c)
          max_diff = std::max(max_diff, std::fabs(rf.features.at({c, y, x}) -
                                                  orc.features[size_t(c)]));
        max_diff =
            std::max(max_diff, std::fabs(rf.depth.at({y, x}) - orc.depth));
        max_diff =
            std::max(max_diff, std::fabs(rf.opacity.at({y, x}) - orc.opacity));
        double mass = 0.0, transmittance = 1.0;
        for (int z = 0; z < n; ++z) {
          double wv = wt.at({z, y, x});
          min_weight = std::min(min_weight, wv);
          mass += wv;
          transmittance -= wv;  // T after sample z
          min_trans = std::min(min_trans, transmittance);
        }
        worst_mass = std::max(worst_mass, mass);
        max_diff =
            std::max(max_diff, std::fabs(mass - rf.opacity.at({y, x})));
        ++rays;
      }
  }
  bool pass = rays == 1000 && max_diff <= 1e-6 && min_weight >= -1e-12 &&
              worst_mass <= 1.0 + 1e-9 && min_trans >= -1e-9;
  return {pass, fmt("%d rays, max |impl - oracle| %.2e (tol 1e-6), max mass "
                    "%.9f, min weight %.1e, min T %.1e",
                    rays, max_diff, worst_mass, min_weight, min_trans)};
}

// Per-ray depths whose samples land exactly on voxel centers of the
// camera's own volume (identity resample oracle).
DepthGrid slice_center_grid(const Camera& cam, int64_t d_slices, int64_t h,
                            int64_t w) {
  std::vector<double> vals(static_cast<size_t>(d_slices * h * w));
  Vec3 fwd = cam.R * Vec3(0, 0, 1);
  for (int64_t z = 0; z < d_slices; ++z)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        double ndc_z = (2.0 * double(z) + 1.0) / double(d_slices) - 1.0;
        double z_cam =
            2.0 * cam.z_far * cam.z_near /
            ((cam.z_far + cam.z_near) - ndc_z * (cam.z_far - cam.z_near));
        Vec3 dir = ray_direction(cam, 4.0 * double(y) + 2.0,
                                 4.0 * double(x) + 2.0);
        vals[static_cast<size_t>((z * h + y) * w + x)] = z_cam / dir.dot(fwd);
      }
  DepthGrid g;
  g.n = d_slices;
  g.h = h;
  g.w = w;
  g.per_ray = true;
  g.t = Tensor::from_vector(vals, {d_slices, h, w}, DType::F64);
  return g;
}

// 3. Resampling vs the per-point NDC + 8-corner oracle, plus identity-pose
// slice recovery.
Outcome crit_resampling() {
  Rng rng(303);
  double max_diff = 0.0;
  int points = 0;
  for (int k = 0; k < 5; ++k) {
    Camera input =
        camera_ring(8, 1.3, 15.0 + 4.0 * k, Vec3::Zero(), 32, 32)[size_t(k)];
    Camera target = camera_ring(8, 1.25, 31.0 - 3.0 * k, Vec3::Zero(), 24, 24,
                                0.9, 7.0 * k)[size_t((3 * k) % 8)];
    Tensor vol = rand_tensor({5, 6, 8, 8}, rng, -1.0, 1.0, DType::F64);
    DepthGrid grid = make_stratified_grid(target.z_near, target.z_far, 6, 6,
                                          6, rng, DType::F64);
    Tensor out = resample_to_target(FeatureVolume{vol}, input, target, grid);
    for (int64_t z = 0; z < 6; ++z)
      for (int64_t y = 0; y < 6; ++y)
        for (int64_t x = 0; x < 6; ++x) {
          std::vector<double> orc = oracles::resample_point(
              vol, input, target, 4.0 * double(y) + 2.0,
              4.0 * double(x) + 2.0, grid.at(z, y, x));
          for (int64_t c = 0; c < 5; ++c)
            max_diff = std::max(
                max_diff, std::fabs(out.at({c, z, y, x}) - orc[size_t(c)]));
          ++points;
        }
  }
  Camera cam = camera_ring(1, 1.3, 20.0, Vec3::Zero(), 32, 32)[0];
  Tensor vol32 = rand_tensor({5, 4, 8, 8}, rng, -1.0, 1.0, DType::F32);
  DepthGrid idg = slice_center_grid(cam, 4, 8, 8);
  Tensor rec = resample_to_target(FeatureVolume{vol32}, cam, cam, idg);
  double max_id = 0.0;
  for (int64_t c = 0; c < 5; ++c)
    for (int64_t z = 0; z < 4; ++z)
      for (int64_t y = 0; y < 8; ++y)
        for (int64_t x = 0; x < 8; ++x)
          max_id = std::max(max_id, std::fabs(rec.at({c, z, y, x}) -
                                              vol32.at({c, z, y, x})));
  bool pass = max_diff <= 1e-6 && max_id <= 1e-5;
  return {pass, fmt("%d oracle points, max diff %.2e (tol 1e-6); identity "
                    "recovery %.2e (tol 1e-5)",
                    points, max_diff, max_id)};
}

// 4. Plucker invariances and bit-exact colors for identical rays.
Outcome crit_plucker() {
  Rng rng(404);
  double max_shift = 0.0, max_scale = 0.0;
  for (int i = 0; i < 20000; ++i) {
    Vec3 origin(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    Vec3 dir(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (dir.norm() < 1e-3) continue;
    double lam = rng.uniform(-5.0, 5.0), s = rng.uniform(0.1, 10.0);
    std::array<double, 6> base = plucker_encode(origin, dir).coords;
    std::array<double, 6> sh = plucker_encode(origin + lam * dir, dir).coords;
    std::array<double, 6> sc = plucker_encode(origin, s * dir).coords;
    for (int j = 0; j < 6; ++j) {
      max_shift = std::max(max_shift, std::fabs(sh[size_t(j)] - base[size_t(j)]));
      max_scale = std::max(max_scale, std::fabs(sc[size_t(j)] - base[size_t(j)]));
    }
  }

  // Axis-aligned directions drop the shifted coordinate from T x d, so the
  // shifted origin gives bitwise-equal Plucker coordinates; the rendered
  // colors must then match bit for bit inside one batch.
  LightFieldConfig lc;
  lc.hidden = 32;
  lc.feature = 6;
  lc.encoding = 78;
  Rng wrng(11);
  LightFieldNet net;
  net.init(lc, wrng, DType::F64);
  Rng rng2(405);
  int pairs = 0;
  bool coords_bitwise = true;
  std::vector<double> enc, feat;
  for (int i = 0; i < 64; ++i) {
    Vec3 d = Vec3::Zero();
    d(i % 3) = (i / 3) % 2 ? -1.0 : 1.0;
    Vec3 origin(rng2.uniform(-2, 2), rng2.uniform(-2, 2), rng2.uniform(-2, 2));
    double lam = rng2.uniform(-4.0, 4.0);
    PluckerRay a = plucker_encode(origin, d);
    PluckerRay b = plucker_encode(origin + lam * d, d);
    if (std::memcmp(a.coords.data(), b.coords.data(), sizeof a.coords) != 0) {
      coords_bitwise = false;
      continue;
    }
    std::vector<double> frow(6);
    for (double& v : frow) v = rng2.uniform(-1.0, 1.0);
    enc.insert(enc.end(), a.encoded.begin(), a.encoded.end());
    enc.insert(enc.end(), b.encoded.begin(), b.encoded.end());
    feat.insert(feat.end(), frow.begin(), frow.end());
    feat.insert(feat.end(), frow.begin(), frow.end());
    ++pairs;
  }
  NoGradGuard ng;
  Tensor enc_t = Tensor::from_vector(enc, {2 * pairs, 78}, DType::F64);
  Tensor feat_t = Tensor::from_vector(feat, {2 * pairs, 6}, DType::F64);
  Tensor color = net.forward(enc_t, feat_t);
  int bit_mismatches = 0;
  for (int p = 0; p < pairs; ++p)
    for (int64_t ch = 0; ch < 3; ++ch) {
      double ca = color.at({2 * p, ch}), cb = color.at({2 * p + 1, ch});
      if (std::memcmp(&ca, &cb, sizeof ca) != 0) ++bit_mismatches;
    }
  bool pass = max_shift <= 1e-12 && max_scale <= 1e-12 && coords_bitwise &&
              pairs == 64 && bit_mismatches == 0;
  return {pass, fmt("shift inv %.2e, scale inv %.2e (tol 1e-12); %d identical"
                    " ray pairs, %d color bit mismatches",
                    max_shift, max_scale, pairs, bit_mismatches)};
}

// 5. Aggregation identities: single view exact, weights sum to one,
// view-order invariance.
Outcome crit_aggregation() {
  Rng rng(505);
  Tensor v = rand_tensor({6, 5, 4, 4}, rng, -2.0, 2.0, DType::F32);
  Tensor single = aggregate({v});
  bool ident = true;
  for (int64_t c = 1; c < 6; ++c)
    for (int64_t z = 0; z < 5; ++z)
      for (int64_t y = 0; y < 4; ++y)
        for (int64_t x = 0; x < 4; ++x)
          ident = ident && single.at({c - 1, z, y, x}) == v.at({c, z, y, x});

  std::vector<Tensor> ones;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> vals(6 * 5 * 4 * 4, 1.0);
    for (size_t i = 0; i < 5 * 4 * 4; ++i) vals[i] = rng.uniform(-6.0, 6.0);
    ones.push_back(Tensor::from_vector(vals, {6, 5, 4, 4}, DType::F32));
  }
  Tensor unit = aggregate(ones);
  double max_sum_dev = 0.0;
  for (int64_t c = 0; c < 5; ++c)
    for (int64_t z = 0; z < 5; ++z)
      for (int64_t y = 0; y < 4; ++y)
        for (int64_t x = 0; x < 4; ++x)
          max_sum_dev =
              std::max(max_sum_dev, std::fabs(unit.at({c, z, y, x}) - 1.0));

  Tensor a = rand_tensor({6, 5, 4, 4}, rng, -2.0, 2.0, DType::F32);
  Tensor b = rand_tensor({6, 5, 4, 4}, rng, -2.0, 2.0, DType::F32);
  Tensor c = rand_tensor({6, 5, 4, 4}, rng, -2.0, 2.0, DType::F32);
  Tensor p1 = aggregate({a, b, c});
  Tensor p2 = aggregate({c, a, b});
  std::vector<double> v1 = p1.to_vector(), v2 = p2.to_vector();
  double max_perm = 0.0;
  for (size_t i = 0; i < v1.size(); ++i)
    max_perm = std::max(max_perm, std::fabs(v1[i] - v2[i]));

  bool pass = ident && max_sum_dev <= 1e-6 && max_perm <= 1e-6;
  return {pass, fmt("single view %s, weight-sum dev %.2e, permutation dev "
                    "%.2e (tol 1e-6)",
                    ident ? "exact" : "DIFFERS", max_sum_dev, max_perm)};
}

// 6. Query count and head-stage speedup at 128^2, N = 96.
Outcome crit_querycount() {
  Scene scene = generate_scene(606);
  const int size = 128;
  std::vector<Camera> cams =
      camera_ring(3, 1.3, 20.0, Vec3::Zero(), size, size);
  std::vector<InputView> in;
  in.push_back(InputView{raytrace_gt(scene, cams[0]), cams[0]});
  in.push_back(InputView{raytrace_gt(scene, cams[1]), cams[1]});
  const Camera& target = cams[2];

  ModelConfig mc;
  mc.enc.channels = 16;
  mc.enc.depth = 8;
  mc.enc.base2d = 32;
  mc.hidden = 64;
  mc.baseline_hidden = 64;
  mc.n_coarse = 64;
  mc.n_fine = 32;
  mc.dtype = DType::F32;
  Model m;
  m.init(mc, 5);
  NoGradGuard ng;
  std::vector<FeatureVolume> volumes = m.encode_views(in, target);

  const int64_t hw = int64_t(size) * size;
  const int64_t n_total = mc.n_coarse + mc.n_fine;
  bool counts_ok = true;
  double head_ms = 1e30, base_ms = 1e30;
  int64_t head_evals = 0, base_evals = 0;
  for (int rep = 0; rep < 2; ++rep) {
    Rng r1(9);
    m.lf.evals = 0;
    RenderOutputs out = m.decode_lightfield(volumes, in, target, r1);
    counts_ok = counts_ok && out.head_evals == hw && m.lf.evals == hw;
    head_evals = out.head_evals;
    head_ms = std::min(head_ms, out.head_ms);

    Rng r2(9);
    m.baseline_evals = 0;
    double ms = 0.0;
    Tensor img = m.decode_baseline(volumes, in, target, r2, &ms);
    (void)img;
    counts_ok = counts_ok && m.baseline_evals == hw * n_total;
    base_evals = m.baseline_evals;
    base_ms = std::min(base_ms, ms);
  }
  double speedup = base_ms / head_ms;
  bool pass = counts_ok && speedup >= 5.0;
  return {pass, fmt("head %lld evals vs baseline %lld (ratio %lld); head "
                    "%.0f ms vs baseline %.0f ms, speedup %.1fx (need >= 5)",
                    static_cast<long long>(head_evals),
                    static_cast<long long>(base_evals),
                    static_cast<long long>(base_evals / std::max<int64_t>(
                                               head_evals, 1)),
                    head_ms, base_ms, speedup)};
}

// 7. Overfit: one scene, 8 ring views, 64x64, N=16+8, PSNR >= 28 dB on the
// training views for 3/3 seeds within 2,000 steps and 30 minutes.
Outcome crit_overfit() {
  double t0 = now_s();
  fs::path ds_dir = fresh_dir("c7_ds");
  make_dataset(ds_dir, 1, 8, 2, 64, 120);
  Dataset ds = load_dataset(ds_dir.string());
  std::string detail;
  bool pass = true;
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    TrainConfig cfg = experiment_cfg(ds_dir.string());
    cfg.seed = seed;
    fs::path out = fresh_dir("c7_run_" + std::to_string(seed));
    std::string resume;
    int64_t done = 0;
    double best = 0.0;
    while (done < 2000) {
      cfg.steps = std::min<int64_t>(done + 250, 2000);
      TrainResult r = train(cfg, out.string(), resume);
      resume = r.final_ckpt;
      done = r.steps_done;
      Model m;
      load_model(r.final_ckpt, m);
      EvalReport rep = evaluate(m, ds, "train", cfg.views, 99);
      best = std::max(best, rep.mean_psnr);
      if (best >= 28.0) break;
    }
    pass = pass && best >= 28.0;
    detail += fmt("%sseed %llu: %.1f dB @ %lld steps",
                  detail.empty() ? "" : ", ",
                  static_cast<unsigned long long>(seed), best,
                  static_cast<long long>(done));
  }
  double dt = now_s() - t0;
  pass = pass && dt <= 1800.0;
  return {pass, detail + fmt(" (need >= 28 dB); %.0f s (limit 1800)", dt)};
}

// 8. Generalization: train 20 scenes, eval 5 unseen scenes with 2 input
// views; beat nearest-view-copy by 2 dB; finetune at lr 1e-5 improves.
Outcome crit_generalization() {
  double t0 = now_s();
  fs::path train_dir = fresh_dir("c8_train");
  fs::path test_dir = fresh_dir("c8_test");
  make_dataset(train_dir, 20, 8, 2, 64, 1000);
  make_dataset(test_dir, 5, 8, 2, 64, 2000);

  TrainConfig cfg = experiment_cfg(train_dir.string());
  cfg.steps = 4000;
  fs::path out = fresh_dir("c8_run");
  TrainResult r = train(cfg, out.string());
  Model m;
  load_model(r.final_ckpt, m);

  Dataset test_ds = load_dataset(test_dir.string());
  EvalReport base = evaluate(m, test_ds, "test", 2, 7);
  double margin = base.mean_psnr - base.mean_nearest_psnr;

  double ft_sum = 0.0;
  int ft_rows = 0;
  for (size_t si = 0; si < test_ds.scenes.size(); ++si) {
    std::string manifest =
        (fs::path(test_ds.scenes[si].dir) / "manifest.json").string();
    fs::path ft_out = fresh_dir("c8_ft_" + std::to_string(si));
    TrainResult ft = finetune(r.final_ckpt, manifest, 2,
                              finetune_step_cap(400), 1e-5, ft_out.string());
    Model fm;
    load_model(ft.final_ckpt, fm);
    Dataset one;
    one.scenes.push_back(test_ds.scenes[si]);
    one.height = test_ds.height;
    one.width = test_ds.width;
    EvalReport rep = evaluate(fm, one, "test", 2, 7);
    for (const EvalRow& row : rep.rows) {
      ft_sum += row.psnr;
      ++ft_rows;
    }
  }
  double ft_mean = ft_sum / std::max(ft_rows, 1);
  double dt = now_s() - t0;
  bool pass = margin >= 2.0 && ft_mean > base.mean_psnr;
  return {pass, fmt("test %.2f dB vs nearest-copy %.2f dB (margin %.2f, need"
                    " >= 2); finetuned %.2f dB (%s); %lld steps, %.0f s",
                    base.mean_psnr, base.mean_nearest_psnr, margin, ft_mean,
                    ft_mean > base.mean_psnr ? "improved" : "NOT improved",
                    static_cast<long long>(cfg.steps), dt)};
}

// 9. Loss identities at f64: zero on perfect inputs, depth-smoothness
// offset invariance, exact total.
Outcome crit_losses() {
  Rng rng(909);
  Tensor gt = rand_tensor({3, 16, 16}, rng, 0.0, 1.0, DType::F64);
  Tensor gt_small = box_downsample4(gt);
  Tensor depth_const = Tensor::full({4, 4}, 2.5, DType::F64);
  Tensor opacity = Tensor::full({4, 4}, 0.8, DType::F64);
  LossReport perfect =
      compute_losses(gt, gt, gt_small, depth_const, opacity, gt_small);
  bool zeros = perfect.fine_v == 0.0 && perfect.coarse_rgb_v == 0.0 &&
               perfect.depth_smooth_v == 0.0 && perfect.total_v == 0.0;

  // Depths on a 2^-20 grid so the +4 offset is exact in f64.
  std::vector<double> dv(16);
  for (double& x : dv)
    x = 1.0 + std::floor(rng.uniform(0.0, 1.0) * 1048576.0) / 1048576.0;
  std::vector<double> dv_off = dv;
  for (double& x : dv_off) x += 4.0;
  Tensor d0 = Tensor::from_vector(dv, {4, 4}, DType::F64);
  Tensor d1 = Tensor::from_vector(dv_off, {4, 4}, DType::F64);
  Tensor gs = rand_tensor({3, 4, 4}, rng, 0.0, 1.0, DType::F64);
  double l0 = loss_depth_smooth(d0, gs, opacity).item();
  double l1 = loss_depth_smooth(d1, gs, opacity).item();
  bool offset_inv = l0 == l1;
  bool const_zero = loss_depth_smooth(depth_const, gs, opacity).item() == 0.0;

  Tensor pred = rand_tensor({3, 16, 16}, rng, 0.0, 1.0, DType::F64);
  Tensor coarse = rand_tensor({3, 4, 4}, rng, 0.0, 1.0, DType::F64);
  LossReport rep = compute_losses(pred, gt, coarse, d0, opacity, gt_small);
  bool exact_sum =
      rep.total_v == rep.fine_v + rep.coarse_rgb_v + rep.depth_smooth_v;
  bool all_pos = rep.fine_v > 0.0 && rep.coarse_rgb_v > 0.0;

  bool pass = zeros && offset_inv && const_zero && exact_sum && all_pos;
  return {pass, fmt("perfect inputs %s; offset invariance %s (%.6g); "
                    "constant depth %s; total %s sum",
                    zeros ? "zero" : "NONZERO",
                    offset_inv ? "exact" : "BROKEN", l0,
                    const_zero ? "zero" : "NONZERO",
                    exact_sum ? "==" : "!=")};
}

// 10. Determinism and serialization: bit-identical same-seed training,
// lossless checkpoint and dataset round trips.
Outcome crit_determinism() {
  fs::path ds_dir = fresh_dir("c10_ds");
  make_dataset(ds_dir, 1, 4, 2, 16, 77);
  TrainConfig cfg;
  cfg.data = ds_dir.string();
  cfg.views = 2;
  cfg.size = 16;
  cfg.n_coarse = 8;
  cfg.n_fine = 4;
  cfg.lr = 5e-3;
  cfg.steps = 10;
  cfg.seed = 5;
  cfg.ckpt_every = 5;
  cfg.channels = 8;
  cfg.depth = 4;
  cfg.base2d = 16;
  cfg.hidden = 24;
  cfg.baseline_hidden = 8;
  fs::path out_a = fresh_dir("c10_a"), out_b = fresh_dir("c10_b");
  TrainResult ra = train(cfg, out_a.string());
  TrainResult rb = train(cfg, out_b.string());
  bool train_bits = files_equal(ra.final_ckpt, rb.final_ckpt);

  Checkpoint ck = read_checkpoint(ra.final_ckpt);
  fs::path rewrite = work_root() / "c10_rewrite.bin";
  write_checkpoint(rewrite.string(), ck);
  bool ckpt_lossless = files_equal(ra.final_ckpt, rewrite);

  // Dataset round trip: import, re-export, byte-compare manifest and PNGs.
  fs::path scene_dir = ds_dir / "scene_000";
  LoadedScene scene = load_scene((scene_dir / "manifest.json").string());
  fs::path re_dir = fresh_dir("c10_reexport");
  export_dataset(scene.manifest, scene.images, re_dir.string());
  bool ds_lossless =
      files_equal(scene_dir / "manifest.json", re_dir / "manifest.json");
  for (const ViewRecord& view : scene.manifest.views)
    ds_lossless =
        ds_lossless && files_equal(scene_dir / view.image, re_dir / view.image);

  bool pass = train_bits && ckpt_lossless && ds_lossless;
  return {pass, fmt("same-seed training %s; checkpoint rewrite %s; dataset "
                    "re-export %s",
                    train_bits ? "bit-identical" : "DIVERGED",
                    ckpt_lossless ? "identical" : "CHANGED",
                    ds_lossless ? "identical" : "CHANGED")};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::string list = argv[++i];
      size_t pos = 0;
      while (pos < list.size()) {
        size_t comma = list.find(',', pos);
        if (comma == std::string::npos) comma = list.size();
        only.push_back(std::stoi(list.substr(pos, comma - pos)));
        pos = comma + 1;
      }
    } else {
      std::fprintf(stderr, "usage: %s [--only N[,M...]]\n", argv[0]);
      return 1;
    }
  }

  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "gradient suite", crit_gradients},
      {2, "compositing oracle", crit_compositing},
      {3, "resampling oracle", crit_resampling},
      {4, "plucker invariants", crit_plucker},
      {5, "aggregation", crit_aggregation},
      {6, "query count", crit_querycount},
      {7, "overfit", crit_overfit},
      {8, "generalization", crit_generalization},
      {9, "loss identities", crit_losses},
      {10, "determinism", crit_determinism},
  };

  bool all = true;
  for (const Entry& e : entries) {
    if (!only.empty() &&
        std::find(only.begin(), only.end(), e.id) == only.end())
      continue;
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, fmt("exception: %s", ex.what())};
    }
    std::printf("[%s] criterion %2d %-20s %s\n", o.pass ? "PASS" : "FAIL",
                e.id, e.name, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
