// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "lfnr/trainer.hpp"
#include "nlohmann/json.hpp"

using namespace lfnr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return std::vector<char>(std::istreambuf_iterator<char>(is), {});
}

// Renders n_train ring views plus n_test offset-ring views per procedural
// scene, mirroring the gen-data layout.
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

TrainConfig micro_cfg(const std::string& data) {
  TrainConfig c;
  c.data = data;
  c.views = 2;
  c.size = 16;
  c.n_coarse = 8;
  c.n_fine = 4;
  c.lr = 5e-3;
  c.steps = 10;
  c.seed = 1;
  c.ckpt_every = 50;
  c.channels = 8;
  c.depth = 4;
  c.base2d = 16;
  c.hidden = 24;
  c.baseline_hidden = 8;
  return c;
}

std::vector<nlohmann::json> read_metrics(const fs::path& path) {
  std::ifstream is(path);
  REQUIRE(is);
  std::vector<nlohmann::json> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(nlohmann::json::parse(line));
  }
  return rows;
}

}  // namespace

TEST_CASE("trainer: config file parsing and overrides") {
  fs::path dir = fresh_dir("lfnr_test_cfg");
  fs::path file = dir / "train.cfg";
  {
    std::ofstream os(file);
    os << "# micro run\n";
    os << "data = \"" << (dir / "ds").string() << "\"  # dataset dir\n";
    os << "\n";
    os << "views = 3\n";
    os << "size=16\n";
    os << "lr = 2.5e-3\n";
    os << "steps = 42\n";
    os << "precision = 'f64'\n";
  }
  TrainConfig c = parse_config_file(file.string());
  CHECK(c.data == (dir / "ds").string());
  CHECK(c.views == 3);
  CHECK(c.size == 16);
  CHECK(c.lr == doctest::Approx(2.5e-3).epsilon(1e-12));
  CHECK(c.steps == 42);
  CHECK(c.precision == "f64");
  CHECK(c.n_coarse == 64);  // untouched keys keep their defaults
  CHECK(c.ckpt_every == 500);

  SUBCASE("line without = rejected") {
    std::ofstream os(file, std::ios::app);
    os << "steps 7\n";
    os.close();
    CHECK_THROWS_AS(parse_config_file(file.string()), ConfigError);
  }
  SUBCASE("unknown key rejected") {
    CHECK_THROWS_AS(apply_override(c, "bogus", "1"), ConfigError);
  }
  SUBCASE("bad numbers rejected") {
    CHECK_THROWS_AS(apply_override(c, "steps", "12x"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "lr", "fast"), ConfigError);
  }
  SUBCASE("override applies") {
    apply_override(c, "hidden", "96");
    CHECK(c.hidden == 96);
    apply_override(c, "data", "\"/tmp/other\"");
    CHECK(c.data == "/tmp/other");
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(parse_config_file((dir / "nope.cfg").string()),
                    ConfigError);
  }
}

TEST_CASE("trainer: config validation and json round trip") {
  TrainConfig c = micro_cfg("/tmp/ds");
  CHECK_NOTHROW(c.validate());

  auto broken = [&](auto mut) {
    TrainConfig b = c;
    mut(b);
    CHECK_THROWS_AS(b.validate(), ConfigError);
  };
  broken([](TrainConfig& b) { b.views = 0; });
  broken([](TrainConfig& b) { b.views = 7; });
  broken([](TrainConfig& b) { b.size = 12; });
  broken([](TrainConfig& b) { b.n_coarse = 0; });
  broken([](TrainConfig& b) { b.n_fine = -1; });
  broken([](TrainConfig& b) { b.lr = 0.0; });
  broken([](TrainConfig& b) { b.steps = -1; });
  broken([](TrainConfig& b) { b.ckpt_every = 0; });
  broken([](TrainConfig& b) { b.precision = "f16"; });

  TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json().dump() == c.to_json().dump());
  nlohmann::ordered_json j = c.to_json();
  j.erase("hidden");
  CHECK_THROWS_AS(TrainConfig::from_json(j), ConfigError);
}

TEST_CASE("trainer: checkpoint save/load/save is byte-identical") {
  fs::path dir = fresh_dir("lfnr_test_ckpt");
  TrainConfig cfg = micro_cfg("/tmp/ds");
  Model model;
  model.init(cfg.model_config(), 3);
  AdamMap adam;
  for (const std::string& name : model.params.order) {
    const Tensor& p = model.params.at(name);
    adam[name] = AdamState{Tensor::zeros(p.shape(), p.dtype()),
                           Tensor::zeros(p.shape(), p.dtype())};
  }
  Rng rng(99);
  rng.u01();
  Checkpoint ck = make_checkpoint(model, adam, 7, rng.state(), cfg.to_json());
  std::string p1 = (dir / "a.bin").string(), p2 = (dir / "b.bin").string();
  write_checkpoint(p1, ck);

  std::vector<char> raw = slurp(p1);
  REQUIRE(raw.size() > 12);
  CHECK(std::string(raw.data(), 8) == "LFNCKPT1");
  uint32_t version = 0;
  std::memcpy(&version, raw.data() + 8, 4);
  CHECK(version == 1);

  Checkpoint rd = read_checkpoint(p1);
  CHECK(rd.step == 7);
  CHECK(rd.rng_state == rng.state());
  CHECK(rd.config.dump() == cfg.to_json().dump());
  REQUIRE(rd.tensors.size() == ck.tensors.size());
  write_checkpoint(p2, rd);
  CHECK(slurp(p2) == raw);

  SUBCASE("apply restores parameters bitwise") {
    Model other;
    other.init(cfg.model_config(), 11);  // different init, then overwritten
    AdamMap oadam;
    apply_checkpoint(rd, other, oadam);
    for (const std::string& name : model.params.order) {
      std::vector<double> a = model.params.at(name).to_vector();
      std::vector<double> b = other.params.at(name).to_vector();
      REQUIRE(a.size() == b.size());
      for (size_t i = 0; i < a.size(); ++i) {
        float fa = static_cast<float>(a[i]), fb = static_cast<float>(b[i]);
        CHECK(std::memcmp(&fa, &fb, 4) == 0);
      }
    }
    CHECK(oadam.size() == adam.size());
  }
  SUBCASE("wrong magic rejected") {
    raw[0] = 'X';
    std::ofstream os(dir / "bad.bin", std::ios::binary);
    os.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    os.close();
    CHECK_THROWS_AS(read_checkpoint((dir / "bad.bin").string()), IoError);
  }
  SUBCASE("truncated payload rejected") {
    std::ofstream os(dir / "cut.bin", std::ios::binary);
    os.write(raw.data(), static_cast<std::streamsize>(raw.size() - 16));
    os.close();
    CHECK_THROWS_AS(read_checkpoint((dir / "cut.bin").string()), IoError);
  }
  SUBCASE("shape mismatch rejected on apply") {
    TrainConfig narrow = cfg;
    narrow.hidden = 28;
    Model other;
    other.init(narrow.model_config(), 3);
    AdamMap oadam;
    CHECK_THROWS_AS(apply_checkpoint(rd, other, oadam), IoError);
  }
}

TEST_CASE("trainer: dataset loading") {
  fs::path dir = fresh_dir("lfnr_test_ds_load");
  make_dataset(dir, 2, 4, 2, 16, 5);
  Dataset ds = load_dataset(dir.string());
  REQUIRE(ds.scenes.size() == 2);
  CHECK(ds.height == 16);
  CHECK(ds.width == 16);
  CHECK(ds.scenes[0].manifest.scene_id == "scene_000");
  CHECK(ds.scenes[1].manifest.scene_id == "scene_001");
  for (const LoadedScene& s : ds.scenes) {
    CHECK(s.train_idx.size() == 4);
    CHECK(s.test_idx.size() == 2);
    CHECK(s.images.size() == 6);
    for (const Tensor& img : s.images) {
      CHECK(img.dim(0) == 3);
      CHECK(img.dim(1) == 16);
    }
  }

  SUBCASE("not a directory") {
    CHECK_THROWS_AS(load_dataset((dir / "missing").string()), IoError);
  }
  SUBCASE("no manifests") {
    fs::path empty = fresh_dir("lfnr_test_ds_empty");
    fs::create_directories(empty / "stuff");
    CHECK_THROWS_AS(load_dataset(empty.string()), IoError);
  }
  SUBCASE("mixed sizes rejected") {
    fs::path tmp = fresh_dir("lfnr_test_ds_big");
    make_dataset(tmp, 1, 2, 2, 24, 11);
    fs::create_directories(dir / "scene_big");
    fs::copy(tmp / "scene_000", dir / "scene_big",
             fs::copy_options::recursive);
    CHECK_THROWS_AS(load_dataset(dir.string()), IoError);
  }
}

TEST_CASE("trainer: micro training run logs, checkpoints, and learns") {
  fs::path ds_dir = fresh_dir("lfnr_test_train_ds");
  make_dataset(ds_dir, 1, 4, 2, 16, 21);
  for (uint64_t seed : {1ull, 2ull}) {
    fs::path out = fresh_dir("lfnr_test_train_out_" + std::to_string(seed));
    TrainConfig cfg = micro_cfg(ds_dir.string());
    cfg.seed = seed;
    cfg.steps = 200;
    cfg.ckpt_every = 60;
    TrainResult res = train(cfg, out.string());
    CHECK(res.steps_done == 200);
    CHECK(fs::exists(res.final_ckpt));
    CHECK(fs::exists(out / "ckpt_latest.bin"));
    CHECK(std::isfinite(res.last_total));

    std::vector<nlohmann::json> rows = read_metrics(out / "metrics.jsonl");
    REQUIRE(rows.size() == 200);
    double first = rows.front().at("total").get<double>();
    double tail = 0.0;
    for (size_t i = rows.size() - 20; i < rows.size(); ++i) {
      tail += rows[i].at("total").get<double>();
      int64_t step = rows[i].at("step").get<int64_t>();
      CHECK(step == static_cast<int64_t>(i) + 1);
      double f = rows[i].at("fine").get<double>();
      double cr = rows[i].at("coarse_rgb").get<double>();
      double dsm = rows[i].at("depth_smooth").get<double>();
      double tot = rows[i].at("total").get<double>();
      CHECK(tot == doctest::Approx(f + cr + dsm).epsilon(1e-5));
      CHECK(rows[i].at("wall_ms").get<double>() >= 0.0);
    }
    tail /= 20.0;
    // Scaled-down training-smoke oracle: the tail of the run must fall well
    // below the first-step loss.
    CHECK(tail < 0.5 * first);

    // Cadence checkpoint trails the final one but tracks the same run.
    Checkpoint latest = read_checkpoint((out / "ckpt_latest.bin").string());
    CHECK(latest.step == 180);
    Checkpoint final_ck = read_checkpoint(res.final_ckpt);
    CHECK(final_ck.step == 200);
  }
}

TEST_CASE("trainer: same seed twice is bit-identical, resume matches") {
  fs::path ds_dir = fresh_dir("lfnr_test_det_ds");
  make_dataset(ds_dir, 1, 4, 2, 16, 33);
  TrainConfig cfg = micro_cfg(ds_dir.string());
  cfg.steps = 10;
  cfg.seed = 7;

  fs::path out_a = fresh_dir("lfnr_test_det_a");
  fs::path out_b = fresh_dir("lfnr_test_det_b");
  TrainResult ra = train(cfg, out_a.string());
  TrainResult rb = train(cfg, out_b.string());
  CHECK(slurp(ra.final_ckpt) == slurp(rb.final_ckpt));

  std::vector<nlohmann::json> ma = read_metrics(out_a / "metrics.jsonl");
  std::vector<nlohmann::json> mb = read_metrics(out_b / "metrics.jsonl");
  REQUIRE(ma.size() == mb.size());
  for (size_t i = 0; i < ma.size(); ++i) {
    CHECK(ma[i].at("total").dump() == mb[i].at("total").dump());
    CHECK(ma[i].at("fine").dump() == mb[i].at("fine").dump());
  }

  // Stop at step 6, resume to 10: trajectory identical to the straight run.
  fs::path out_c = fresh_dir("lfnr_test_det_c");
  fs::path out_d = fresh_dir("lfnr_test_det_d");
  TrainConfig short_cfg = cfg;
  short_cfg.steps = 6;
  TrainResult rc = train(short_cfg, out_c.string());
  CHECK(rc.steps_done == 6);
  TrainResult rd = train(cfg, out_d.string(), rc.final_ckpt);
  CHECK(rd.steps_done == 10);
  CHECK(slurp(rd.final_ckpt) == slurp(ra.final_ckpt));
}

TEST_CASE("trainer: non-finite loss aborts with NumericError") {
  fs::path ds_dir = fresh_dir("lfnr_test_nan_ds");
  make_dataset(ds_dir, 1, 4, 2, 16, 44);
  TrainConfig cfg = micro_cfg(ds_dir.string());
  cfg.steps = 4;
  cfg.ckpt_every = 2;
  fs::path out = fresh_dir("lfnr_test_nan_a");
  TrainResult res = train(cfg, out.string());

  Checkpoint ck = read_checkpoint(res.final_ckpt);
  REQUIRE(!ck.tensors.empty());
  // Poison a weight that every forward pass consumes.
  auto it = std::find_if(
      ck.tensors.begin(), ck.tensors.end(),
      [](const auto& kv) { return kv.first == "encoder.img1x1.w"; });
  REQUIRE(it != ck.tensors.end());
  REQUIRE(!it->second.empty());
  it->second[0] = std::numeric_limits<float>::quiet_NaN();
  std::string poisoned = (out / "poisoned.bin").string();
  write_checkpoint(poisoned, ck);

  fs::path out2 = fresh_dir("lfnr_test_nan_b");
  TrainConfig more = cfg;
  more.steps = 8;
  CHECK_THROWS_AS(train(more, out2.string(), poisoned), NumericError);
  // The aborted run wrote no checkpoint of its own; the last-good state is
  // the cadence file from the source run.
  CHECK(!fs::exists(out2 / "ckpt_latest.bin"));
  CHECK(fs::exists(out / "ckpt_latest.bin"));
}

TEST_CASE("trainer: config guards on train entry") {
  fs::path ds_dir = fresh_dir("lfnr_test_guard_ds");
  make_dataset(ds_dir, 1, 3, 2, 16, 50);
  SUBCASE("size mismatch with the dataset") {
    TrainConfig cfg = micro_cfg(ds_dir.string());
    cfg.size = 24;
    cfg.steps = 1;
    CHECK_THROWS_AS(train(cfg, fresh_dir("lfnr_test_guard_o1").string()),
                    ConfigError);
  }
  SUBCASE("too few train views for the sampler") {
    TrainConfig cfg = micro_cfg(ds_dir.string());
    cfg.views = 3;  // scene has exactly 3 train views; needs strictly more
    cfg.steps = 1;
    CHECK_THROWS_AS(train(cfg, fresh_dir("lfnr_test_guard_o2").string()),
                    ConfigError);
  }
}

TEST_CASE("trainer: finetune cap and zero-step identity") {
  CHECK(finetune_step_cap(0) == 0);
  CHECK(finetune_step_cap(3) == 3);
  CHECK(finetune_step_cap(10000) == 10000);
  CHECK(finetune_step_cap(10001) == 10000);
  CHECK(finetune_step_cap(50000) == 10000);

  fs::path ds_dir = fresh_dir("lfnr_test_ft_ds");
  make_dataset(ds_dir, 1, 4, 2, 16, 60);
  TrainConfig cfg = micro_cfg(ds_dir.string());
  cfg.steps = 3;
  fs::path out = fresh_dir("lfnr_test_ft_base");
  TrainResult base = train(cfg, out.string());
  std::string manifest = (ds_dir / "scene_000" / "manifest.json").string();

  SUBCASE("zero steps leaves every tensor bitwise unchanged") {
    fs::path fo = fresh_dir("lfnr_test_ft_zero");
    TrainResult ft =
        finetune(base.final_ckpt, manifest, 2, 0, 1e-5, fo.string());
    CHECK(ft.steps_done == 0);
    Checkpoint a = read_checkpoint(base.final_ckpt);
    Checkpoint b = read_checkpoint(ft.final_ckpt);
    REQUIRE(a.tensors.size() == b.tensors.size());
    for (size_t i = 0; i < a.tensors.size(); ++i) {
      CHECK(a.tensors[i].first == b.tensors[i].first);
      CHECK(std::memcmp(a.tensors[i].second.data(), b.tensors[i].second.data(),
                        a.tensors[i].second.size() * 4) == 0);
    }
  }
  SUBCASE("short finetune runs and logs") {
    fs::path fo = fresh_dir("lfnr_test_ft_run");
    TrainResult ft =
        finetune(base.final_ckpt, manifest, 2, 3, 1e-4, fo.string());
    CHECK(ft.steps_done == 3);
    CHECK(fs::exists(ft.final_ckpt));
    CHECK(read_metrics(fo / "metrics.jsonl").size() == 3);
  }
  SUBCASE("needs enough train views") {
    fs::path fo = fresh_dir("lfnr_test_ft_few");
    CHECK_THROWS_AS(finetune(base.final_ckpt, manifest, 5, 1, 1e-5,
                             fo.string()),
                    ConfigError);
  }
}

TEST_CASE("trainer: evaluate rows and means") {
  fs::path ds_dir = fresh_dir("lfnr_test_eval_ds");
  make_dataset(ds_dir, 2, 4, 2, 16, 70);
  Dataset ds = load_dataset(ds_dir.string());
  TrainConfig cfg = micro_cfg(ds_dir.string());
  Model model;
  model.init(cfg.model_config(), 9);

  EvalReport test_rep = evaluate(model, ds, "test", 2, 13);
  REQUIRE(test_rep.rows.size() == 4);  // 2 scenes x 2 test views
  double sp = 0, ss = 0, sn = 0;
  for (const EvalRow& r : test_rep.rows) {
    CHECK(std::isfinite(r.psnr));
    CHECK(r.psnr > 0.0);
    CHECK(r.ssim <= 1.0 + 1e-9);
    CHECK(std::isfinite(r.nearest_psnr));
    sp += r.psnr;
    ss += r.ssim;
    sn += r.nearest_psnr;
  }
  CHECK(test_rep.mean_psnr == doctest::Approx(sp / 4).epsilon(1e-9));
  CHECK(test_rep.mean_ssim == doctest::Approx(ss / 4).epsilon(1e-9));
  CHECK(test_rep.mean_nearest_psnr == doctest::Approx(sn / 4).epsilon(1e-9));

  EvalReport train_rep = evaluate(model, ds, "train", 2, 13);
  CHECK(train_rep.rows.size() == 8);  // 2 scenes x 4 train views

  // Same seed, same report; the per-row RNG stream is pinned.
  EvalReport again = evaluate(model, ds, "test", 2, 13);
  CHECK(again.mean_psnr == test_rep.mean_psnr);

  nlohmann::ordered_json j = test_rep.to_json();
  CHECK(j.at("rows").size() == 4);
  CHECK(j.at("split") == "test");
  std::string table = test_rep.table();
  CHECK(table.find("mean") != std::string::npos);
  CHECK(table.find("scene_000") != std::string::npos);

  CHECK_THROWS_AS(evaluate(model, ds, "val", 2, 13), ConfigError);
  CHECK_THROWS_AS(evaluate(model, ds, "test", 5, 13), ConfigError);
}

TEST_CASE("trainer: json_metric sentinels") {
  CHECK(json_metric(1.5).get<double>() == 1.5);
  CHECK(json_metric(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(json_metric(-std::numeric_limits<double>::infinity()) == "-inf");
}
