// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lfnr/image.hpp"
#include "lfnr/losses.hpp"
#include "lfnr/model.hpp"
#include "lfnr/scenes.hpp"

namespace lfnr {

double fd_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                std::vector<Tensor> inputs, uint64_t seed, int max_coords,
                double h) {
  for (const Tensor& in : inputs)
    if (in.dtype() != DType::F64)
      throw ContractError("fd_check: inputs must be f64");
  Rng rng(seed ^ 0xfdfdfdfdull);

  Tensor out = f(inputs);
  std::vector<double> wv(static_cast<size_t>(out.numel()));
  for (double& v : wv) v = rng.uniform(-1.0, 1.0);
  Tensor w = Tensor::from_vector(wv, out.shape(), DType::F64);
  auto loss_value = [&wv](const Tensor& o) {
    std::vector<double> ov = o.to_vector();
    double s = 0.0;
    for (size_t i = 0; i < ov.size(); ++i) s += ov[i] * wv[i];
    return s;
  };

  for (Tensor& in : inputs) in.zero_grad();
  backward(sum_all(mul(out, w)));
  std::vector<Tensor> grads;
  for (Tensor& in : inputs) grads.push_back(in.grad());

  double max_err = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad()) continue;
    int64_t n = inputs[i].numel();
    std::vector<int64_t> coords;
    if (n <= max_coords) {
      for (int64_t c = 0; c < n; ++c) coords.push_back(c);
    } else {
      for (int k = 0; k < max_coords; ++k)
        coords.push_back(static_cast<int64_t>(
            rng.uniform_int(static_cast<uint64_t>(n))));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    double* data = inputs[i].data<double>();
    const double* g = grads[i].defined() ? grads[i].data<double>() : nullptr;
    for (int64_t c : coords) {
      double orig = data[c];
      double lp, lm;
      {
        NoGradGuard ng;
        data[c] = orig + h;
        lp = loss_value(f(inputs));
        data[c] = orig - h;
        lm = loss_value(f(inputs));
        data[c] = orig;
      }
      double numeric = (lp - lm) / (2.0 * h);
      double analytic = g ? g[c] : 0.0;
      double err = std::fabs(analytic - numeric) /
                   std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

namespace {

Tensor rnd(const Shape& s, double lo, double hi, Rng& rng,
           bool grad = true) {
  return Tensor::uniform(s, lo, hi, rng, DType::F64, grad);
}

// Random values biased away from 0 so kinked ops (abs, relu) see no
// FD-straddled corner.
Tensor rnd_nonzero(const Shape& s, Rng& rng) {
  Tensor t = rnd(s, 0.1, 1.0, rng);
  double* p = t.data<double>();
  for (int64_t i = 0; i < t.numel(); ++i)
    if (rng.u01() < 0.5) p[i] = -p[i];
  return t;
}

// Coordinates whose unnormalized fractional part stays in [0.15, 0.85] so
// central differences never straddle a voxel-boundary kink.
Tensor safe_coords(int64_t m, const Shape& vol_shape, Rng& rng) {
  std::vector<double> cv(static_cast<size_t>(m * 3));
  int64_t sizes[3] = {vol_shape[3], vol_shape[2], vol_shape[1]};  // x,y,z
  for (int64_t r = 0; r < m; ++r)
    for (int a = 0; a < 3; ++a) {
      double s = static_cast<double>(sizes[a]);
      double c = rng.uniform(-0.9, 0.9);
      double u = ((c + 1.0) * s - 1.0) / 2.0;
      double fl = std::floor(u), fr = u - fl;
      if (fr < 0.15) u = fl + 0.15;
      if (fr > 0.85) u = fl + 0.85;
      cv[static_cast<size_t>(r * 3 + a)] = (2.0 * u + 1.0) / s - 1.0;
    }
  return Tensor::from_vector(cv, {m, 3}, DType::F64);
}

Tensor increasing_depths(int64_t n, double zn, double zf, Rng& rng) {
  std::vector<double> d = stratified_depths(zn, zf, static_cast<int>(n), rng);
  return Tensor::from_vector(d, {n}, DType::F64);
}

// Forward doubles the input; backward deliberately reports 2.2x (harness
// sanity fixture).
Tensor corrupted_double(const Tensor& a) {
  Tensor out = make_op_result(
      a.shape(), a.dtype(), {a}, "corrupted_double",
      [](const Tensor& gout, std::vector<Tensor>& gin) {
        gin[0] = scale(gout, 2.2);
      });
  const double* src = a.data<double>();
  double* dst = out.data<double>();
  for (int64_t i = 0; i < a.numel(); ++i) dst[i] = 2.0 * src[i];
  return out;
}

double e2e_case(uint64_t seed) {
  ModelConfig mc;
  mc.enc.channels = 8;
  mc.enc.depth = 4;
  mc.enc.base2d = 16;
  mc.hidden = 16;
  mc.baseline_hidden = 8;
  // Importance-sampled depth positions are treated as data (standard
  // hierarchical-sampling practice), so FD would see a term the analytic
  // gradient deliberately drops; the e2e check runs with n_fine = 0.
  mc.n_coarse = 6;
  mc.n_fine = 0;
  mc.dtype = DType::F64;
  Model model;
  model.init(mc, seed);

  Scene scene = generate_scene(seed + 17);
  std::vector<Camera> ring = camera_ring(3, 1.3, 20.0, Vec3::Zero(), 16, 16);
  std::vector<InputView> inputs;
  for (int i = 0; i < 2; ++i) {
    Tensor img = raytrace_gt(scene, ring[static_cast<size_t>(i)]);
    inputs.push_back(
        InputView{img.to(DType::F64), ring[static_cast<size_t>(i)]});
  }
  const Camera& target = ring[2];
  Tensor gt = raytrace_gt(scene, target).to(DType::F64);
  Tensor gt_small = box_downsample4(gt);

  auto render_loss = [&]() {
    Rng rr(seed + 4242);  // identical depth draws on every call
    RenderOutputs out = model.render_image(inputs, target, rr);
    LossReport l = compute_losses(out.image, gt, out.coarse_rgb,
                                  out.fine.depth, out.fine.opacity, gt_small);
    return l.total;
  };

  // Analytic pass.
  model.params.zero_grads();
  backward(render_loss());

  // FD over a few coordinates of parameters drawn from every module.
  const char* names[] = {"encoder.img1x1.w", "encoder.down1.w",
                         "encoder.vdown.w",  "encoder.vup.w",
                         "encoder.vrb2b.c2.w", "encoder.vrb2b.c2.b",
                         "upsampler.c1.w",   "lightfield.lr0.w",
                         "lightfield.lr3.w", "lightfield.out.b"};
  Rng pick(seed ^ 0xabcdef);
  const double h = 1e-6;
  double max_err = 0.0;
  for (const char* name : names) {
    Tensor& p = model.params.at(name);
    Tensor g = p.grad();
    double* data = p.data<double>();
    const double* gp = g.defined() ? g.data<double>() : nullptr;
    for (int k = 0; k < 3; ++k) {
      int64_t c = static_cast<int64_t>(
          pick.uniform_int(static_cast<uint64_t>(p.numel())));
      double orig = data[c];
      double lp, lm;
      {
        NoGradGuard ng;
        data[c] = orig + h;
        lp = render_loss().item();
        data[c] = orig - h;
        lm = render_loss().item();
        data[c] = orig;
      }
      double numeric = (lp - lm) / (2.0 * h);
      double analytic = gp ? gp[c] : 0.0;
      double err = std::fabs(analytic - numeric) /
                   std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

std::vector<GradCase> build_registry() {
  std::vector<GradCase> reg;
  auto add_case = [&reg](const std::string& name,
                         std::function<double(uint64_t)> run,
                         double tol = 1e-3) {
    reg.push_back(GradCase{name, std::move(run), tol});
  };

  add_case("diffcore.add", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 4}, -1, 1, r), b = rnd({3, 4}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return add(in[0], in[1]);
    }, {a, b}, s);
  });
  add_case("diffcore.sub", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 4}, -1, 1, r), b = rnd({3, 4}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return sub(in[0], in[1]);
    }, {a, b}, s);
  });
  add_case("diffcore.mul", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 4}, -1, 1, r), b = rnd({3, 4}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return mul(in[0], in[1]);
    }, {a, b}, s);
  });
  add_case("diffcore.scale", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({5}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return scale(in[0], -1.7);
    }, {a}, s);
  });
  add_case("diffcore.add_scalar", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({5}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return add_scalar(in[0], 0.37);
    }, {a}, s);
  });
  add_case("diffcore.abs", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd_nonzero({4, 4}, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return abs(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.relu", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd_nonzero({4, 4}, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return relu(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.sigmoid", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({4, 4}, -2, 2, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return sigmoid(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.softplus", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({4, 4}, -3, 3, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return softplus(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.softmax", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 5}, -2, 2, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return softmax(in[0], 1);
    }, {a}, s);
  });
  add_case("diffcore.linear", [](uint64_t s) {
    Rng r(s);
    Tensor x = rnd({4, 3}, -1, 1, r), w = rnd({5, 3}, -1, 1, r),
           b = rnd({5}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return linear(in[0], in[1], in[2]);
    }, {x, w, b}, s);
  });
  add_case("diffcore.transpose2", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 5}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return transpose2(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.reshape", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 4}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return reshape(in[0], {2, 6});
    }, {a}, s);
  });
  add_case("diffcore.slice", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({4, 5}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return slice(in[0], 1, 1, 3);
    }, {a}, s);
  });
  add_case("diffcore.concat", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({2, 3}, -1, 1, r), b = rnd({4, 3}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return concat({in[0], in[1]}, 0);
    }, {a, b}, s);
  });
  add_case("diffcore.conv2d", [](uint64_t s) {
    Rng r(s);
    Tensor x = rnd({2, 5, 5}, -1, 1, r), w = rnd({3, 2, 3, 3}, -1, 1, r),
           b = rnd({3}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return conv2d(in[0], in[1], in[2], 1, 1);
    }, {x, w, b}, s);
  });
  add_case("diffcore.conv2d_s2", [](uint64_t s) {
    Rng r(s);
    Tensor x = rnd({2, 6, 6}, -1, 1, r), w = rnd({3, 2, 4, 4}, -1, 1, r),
           b = rnd({3}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return conv2d(in[0], in[1], in[2], 2, 1);
    }, {x, w, b}, s);
  });
  add_case("diffcore.conv_transpose2d", [](uint64_t s) {
    Rng r(s);
    Tensor x = rnd({3, 3, 3}, -1, 1, r), w = rnd({3, 2, 4, 4}, -1, 1, r),
           b = rnd({2}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return conv_transpose2d(in[0], in[1], in[2], 2, 1);
    }, {x, w, b}, s);
  });
  add_case("diffcore.conv3d", [](uint64_t s) {
    Rng r(s);
    Tensor x = rnd({2, 4, 4, 4}, -1, 1, r),
           w = rnd({2, 2, 3, 3, 3}, -1, 1, r), b = rnd({2}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return conv3d(in[0], in[1], in[2], 1, 1);
    }, {x, w, b}, s);
  });
  add_case("diffcore.conv_transpose3d", [](uint64_t s) {
    Rng r(s);
    Tensor x = rnd({2, 2, 2, 2}, -1, 1, r),
           w = rnd({2, 2, 4, 4, 4}, -1, 1, r), b = rnd({2}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return conv_transpose3d(in[0], in[1], in[2], 2, 1);
    }, {x, w, b}, s);
  });
  add_case("diffcore.trilinear_volume", [](uint64_t s) {
    Rng r(s);
    Tensor vol = rnd({3, 4, 5, 6}, -1, 1, r);
    Tensor coords = safe_coords(12, vol.shape(), r);
    return fd_check([coords](const std::vector<Tensor>& in) {
      return trilinear_sample(in[0], coords);
    }, {vol}, s);
  });
  add_case("diffcore.trilinear_coords", [](uint64_t s) {
    Rng r(s);
    Tensor vol = rnd({3, 4, 5, 6}, -1, 1, r, false);
    Tensor coords = safe_coords(12, vol.shape(), r);
    coords.set_requires_grad(true);
    return fd_check([vol](const std::vector<Tensor>& in) {
      return trilinear_sample(vol, in[0]);
    }, {coords}, s);
  });
  add_case("diffcore.upsample2x", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({2, 4, 4}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return upsample2x(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.broadcast_hw", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({5}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return broadcast_hw(in[0], 3, 4);
    }, {a}, s);
  });
  add_case("diffcore.sum_all", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 4}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return sum_all(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.mean_all", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 4}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return mean_all(in[0]);
    }, {a}, s);
  });
  add_case("diffcore.aggregate", [](uint64_t s) {
    Rng r(s);
    Tensor v0 = rnd({4, 3, 2, 2}, -1, 1, r), v1 = rnd({4, 3, 2, 2}, -1, 1, r),
           v2 = rnd({4, 3, 2, 2}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return aggregate_views({in[0], in[1], in[2]});
    }, {v0, v1, v2}, s);
  });
  add_case("diffcore.composite", [](uint64_t s) {
    Rng r(s);
    Tensor vol = rnd({4, 6, 2, 3}, -1, 1, r);
    Tensor depths = increasing_depths(6, 1.0, 2.0, r);
    return fd_check([depths](const std::vector<Tensor>& in) {
      return composite_pack(in[0], depths, 0.2);
    }, {vol}, s);
  });
  add_case("diffcore.composite_per_ray", [](uint64_t s) {
    Rng r(s);
    Tensor vol = rnd({4, 5, 2, 2}, -1, 1, r);
    std::vector<double> dv;
    for (int64_t ray = 0; ray < 4; ++ray) {
      std::vector<double> d = stratified_depths(1.0, 2.0, 5, r);
      dv.insert(dv.end(), d.begin(), d.end());
    }
    // (ray-major) -> (n,h,w) layout
    std::vector<double> dz(dv.size());
    for (int64_t z = 0; z < 5; ++z)
      for (int64_t ray = 0; ray < 4; ++ray)
        dz[static_cast<size_t>(z * 4 + ray)] =
            dv[static_cast<size_t>(ray * 5 + z)];
    Tensor depths = Tensor::from_vector(dz, {5, 2, 2}, DType::F64);
    return fd_check([depths](const std::vector<Tensor>& in) {
      return composite_pack(in[0], depths, 0.2);
    }, {vol}, s);
  });
  add_case("losses.fine", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 4, 4}, 0, 1, r), b = rnd({3, 4, 4}, 0, 1, r, false);
    return fd_check([b](const std::vector<Tensor>& in) {
      return loss_fine(in[0], b);
    }, {a}, s);
  });
  add_case("losses.depth_smooth", [](uint64_t s) {
    Rng r(s);
    Tensor depth = rnd({4, 4}, 1.0, 2.0, r);
    Tensor gt = rnd({3, 4, 4}, 0, 1, r, false);
    std::vector<double> ov(16);
    for (double& v : ov) v = r.u01() < 0.2 ? 0.0 : r.uniform(0.5, 1.0);
    Tensor op = Tensor::from_vector(ov, {4, 4}, DType::F64);
    return fd_check([gt, op](const std::vector<Tensor>& in) {
      return loss_depth_smooth(in[0], gt, op);
    }, {depth}, s);
  });
  add_case("pipeline.e2e", e2e_case, 2e-3);
  add_case("fixture.corrupted", [](uint64_t s) {
    Rng r(s);
    Tensor a = rnd({3, 3}, -1, 1, r);
    return fd_check([](const std::vector<Tensor>& in) {
      return corrupted_double(in[0]);
    }, {a}, s);
  });
  return reg;
}

}  // namespace

const std::vector<GradCase>& gradcheck_registry() {
  static const std::vector<GradCase> reg = build_registry();
  return reg;
}

GradReport run_gradcheck(const std::string& component, int seeds) {
  GradReport rep;
  for (const GradCase& c : gradcheck_registry()) {
    if (component.empty()) {
      if (c.name.rfind("fixture.", 0) == 0) continue;
    } else if (c.name.rfind(component, 0) != 0) {
      continue;
    }
    GradReport::Row row;
    row.name = c.name;
    row.tol = c.tol;
    for (int s = 0; s < seeds; ++s)
      row.max_err = std::max(row.max_err, c.run(1000 + 77ull * s));
    row.pass = row.max_err <= c.tol;
    rep.rows.push_back(row);
    if (!row.pass) rep.all_pass = false;
  }
  if (rep.rows.empty())
    throw ConfigError("gradcheck: no component matches '" + component + "'");
  return rep;
}

}  // namespace lfnr
