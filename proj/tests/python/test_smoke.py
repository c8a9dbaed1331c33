# Copyright 2026 lfnr authors
# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the lfnr._core python module (plain asserts, no deps)."""

import math
import os
import subprocess
import sys
import tempfile

import numpy as np

import lfnr


def test_tensor_roundtrip():
    a = np.arange(12, dtype=np.float32).reshape(3, 4)
    t = lfnr.Tensor.from_numpy(a)
    assert t.shape == (3, 4)
    assert t.dtype == "f32"
    assert np.array_equal(t.numpy(), a)
    d = lfnr.Tensor.from_numpy(a.astype(np.float64))
    assert d.dtype == "f64"


def test_backward_quadratic():
    x = lfnr.Tensor.from_numpy(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    loss = lfnr.sum_all(lfnr.mul(x, x))
    lfnr.backward(loss)
    assert np.allclose(x.grad().numpy(), [2.0, -4.0, 6.0])


def test_ops_against_numpy():
    rng = np.random.default_rng(3)
    a = rng.uniform(-1, 1, (4, 5))
    b = rng.uniform(-1, 1, (4, 5))
    ta, tb = lfnr.Tensor.from_numpy(a), lfnr.Tensor.from_numpy(b)
    assert np.allclose(lfnr.add(ta, tb).numpy(), a + b)
    assert np.allclose(lfnr.mul(ta, tb).numpy(), a * b)
    assert np.allclose(lfnr.relu(ta).numpy(), np.maximum(a, 0))
    assert np.allclose(lfnr.sigmoid(ta).numpy(), 1 / (1 + np.exp(-a)))
    sm = lfnr.softmax(ta, 1).numpy()
    assert np.allclose(sm.sum(axis=1), 1.0)
    w = rng.uniform(-1, 1, (3, 5))
    bias = rng.uniform(-1, 1, 3)
    out = lfnr.linear(ta, lfnr.Tensor.from_numpy(w),
                      lfnr.Tensor.from_numpy(bias)).numpy()
    assert np.allclose(out, a @ w.T + bias, atol=1e-6)


def test_composite_opaque_limit():
    # One huge density at slice 0: opacity ~ 1, color ~ slice-0 payload.
    c, n = 5, 4
    vol = np.zeros((c, n, 1, 1), dtype=np.float64)
    vol[0, 0] = 50.0  # density logit, softplus(50) ~ 50
    vol[1:4, 0, 0, 0] = [0.2, 0.4, 0.6]
    packed = lfnr.composite_pack(lfnr.Tensor.from_numpy(vol),
                                 lfnr.Tensor.from_numpy(
                                     np.array([1.0, 1.2, 1.4, 1.6])),
                                 0.2).numpy()
    rgb, opacity = packed[0:3, 0, 0], packed[c - 1, 0, 0]
    assert abs(opacity - 1.0) < 1e-4
    assert np.allclose(rgb, [0.2, 0.4, 0.6], atol=1e-4)


def test_plucker_invariance():
    o = np.array([0.3, -0.2, 1.1])
    d = np.array([0.5, 0.25, -1.0])
    r1 = lfnr.plucker_encode(o, d)
    r2 = lfnr.plucker_encode(o + 2.5 * d, 0.01 * d)  # shift + rescale
    assert max(abs(a - b) for a, b in zip(r1.coords, r2.coords)) < 1e-12
    assert len(r1.encoded) == 78


def test_scene_metrics():
    scene = lfnr.generate_scene(11)
    assert scene.n_primitives >= 1
    cams = lfnr.camera_ring(3, 1.3, 20.0, np.zeros(3), 32, 32)
    img = lfnr.raytrace_gt(scene, cams[0])
    assert img.shape == (3, 32, 32)
    assert math.isinf(lfnr.psnr(img, img))
    assert abs(lfnr.ssim(img, img) - 1.0) < 1e-9
    # Same seed, same scene.
    assert lfnr.scene_hash(scene) == lfnr.scene_hash(lfnr.generate_scene(11))


def test_png_roundtrip():
    rng = np.random.default_rng(5)
    img = (rng.integers(0, 256, (3, 16, 16)) / 255.0).astype(np.float32)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "t.png")
        lfnr.save_png(path, lfnr.Tensor.from_numpy(img))
        back = lfnr.load_png(path).numpy()
    assert np.allclose(back, img, atol=1 / 510)


def test_gradcheck_binding():
    ok, rows = lfnr.run_gradcheck("diffcore.mul", seeds=2)
    assert ok and rows and all(r[3] for r in rows)


def test_cli_roundtrip():
    exe = os.environ.get("LFNR_BIN")
    if not exe or not os.path.exists(exe):
        print("  (LFNR_BIN not set; skipping CLI roundtrip)")
        return
    with tempfile.TemporaryDirectory() as d:
        data = os.path.join(d, "data")
        run = subprocess.run(
            [exe, "gen-data", "--seed", "5", "--scenes", "1", "--views", "3",
             "--size", "32", "--out", data], capture_output=True, text=True)
        assert run.returncode == 0, run.stderr
        bad = subprocess.run([exe, "train", "--out", os.path.join(d, "x")],
                             capture_output=True, text=True)
        assert bad.returncode == 1


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        print(f"{t.__name__} ...")
        t()
        print(f"{t.__name__} ok")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
