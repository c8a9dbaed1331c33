# Copyright 2026 lfnr authors
# SPDX-License-Identifier: Apache-2.0
"""Light field networks from few images: python layer over the C++ core."""

from lfnr._core import (
    Camera,
    PluckerRay,
    Rng,
    Scene,
    Tensor,
    abs,
    add,
    add_scalar,
    aggregate_views,
    backward,
    box_downsample4,
    broadcast_hw,
    camera_ring,
    composite_pack,
    concat,
    conv2d,
    conv3d,
    conv_transpose2d,
    conv_transpose3d,
    generate_scene,
    importance_depths,
    linear,
    load_png,
    mean_all,
    mul,
    ndc_to_world,
    plucker_encode,
    positional_encode,
    psnr,
    ray_direction,
    raytrace_gt,
    relu,
    reshape,
    run_gradcheck,
    save_png,
    scale,
    scene_hash,
    sigmoid,
    slice,
    softmax,
    softplus,
    ssim,
    stratified_depths,
    sub,
    sum_all,
    transpose2,
    trilinear_sample,
    upsample2x,
    world_to_input_ndc,
)

__all__ = [
    "Camera", "PluckerRay", "Rng", "Scene", "Tensor",
    "abs", "add", "add_scalar", "aggregate_views", "backward",
    "box_downsample4", "broadcast_hw", "camera_ring", "composite_pack",
    "concat", "conv2d", "conv3d", "conv_transpose2d", "conv_transpose3d",
    "generate_scene", "importance_depths", "linear", "load_png", "mean_all",
    "mul", "ndc_to_world", "plucker_encode", "positional_encode", "psnr",
    "ray_direction", "raytrace_gt", "relu", "reshape", "run_gradcheck",
    "save_png", "scale", "scene_hash", "sigmoid", "slice", "softmax",
    "softplus", "ssim", "stratified_depths", "sub", "sum_all", "transpose2",
    "trilinear_sample", "upsample2x", "world_to_input_ndc",
]
