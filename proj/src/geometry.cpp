// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/geometry.hpp"

namespace lfnr {

void Camera::validate() const {
  if (height < 1 || width < 1) throw ConfigError("camera: empty image");
  if (!(0.0 < z_near && z_near < z_far))
    throw ConfigError("camera: need 0 < z_near < z_far");
  if (std::fabs(K(2, 2) - 1.0) > 1e-12)
    throw ConfigError("camera: K[2][2] must be 1");
  if (std::fabs(K.determinant()) < 1e-15)
    throw ConfigError("camera: singular K");
  Mat3 rtr = R.transpose() * R;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw ConfigError("camera: R is not orthonormal");
  if (std::fabs(R.determinant() - 1.0) > 1e-9)
    throw ConfigError("camera: det(R) must be +1");
}

Mat3 Camera::Kinv() const {
  if (std::fabs(K.determinant()) < 1e-15)
    throw ConfigError("camera: singular K");
  return K.inverse();
}

Vec3 ray_direction(const Camera& cam, double u, double v) {
  Vec3 d = cam.R * (cam.Kinv() * Vec3(u, v, 1.0));
  double norm = d.norm();
  if (norm < 1e-15) throw ConfigError("ray_direction: degenerate direction");
  return d / norm;
}

RaySample make_ray_sample(const Camera& cam, double u, double v,
                          std::vector<double> depths) {
  for (size_t i = 0; i < depths.size(); ++i) {
    if (depths[i] < cam.z_near - 1e-12 || depths[i] > cam.z_far + 1e-12)
      throw ContractError("make_ray_sample: depth outside [z_near, z_far]");
    if (i > 0 && depths[i] <= depths[i - 1])
      throw ContractError("make_ray_sample: depths not increasing");
  }
  RaySample rs;
  rs.origin = cam.T;
  rs.direction = ray_direction(cam, u, v);
  rs.depths = std::move(depths);
  rs.points.reserve(rs.depths.size());
  for (double t : rs.depths) rs.points.push_back(rs.origin + t * rs.direction);
  return rs;
}

NdcPoint world_to_input_ndc(const Vec3& p, const Camera& cam) {
  NdcPoint out;
  Vec3 q = cam.R.transpose() * (p - cam.T);
  if (q.z() <= 0.0) {
    out.behind = true;
    // Sentinel far outside the cube: every trilinear corner reads padding.
    out.ndc = Vec3(-10.0, -10.0, -10.0);
    return out;
  }
  double row = cam.K(0, 0) * q.x() / q.z() + cam.K(0, 1) * q.y() / q.z() +
               cam.K(0, 2);
  double col = cam.K(1, 0) * q.x() / q.z() + cam.K(1, 1) * q.y() / q.z() +
               cam.K(1, 2);
  double zn = cam.z_near, zf = cam.z_far;
  out.ndc.x() = 2.0 * col / static_cast<double>(cam.width) - 1.0;
  out.ndc.y() = 2.0 * row / static_cast<double>(cam.height) - 1.0;
  out.ndc.z() = (zf + zn) / (zf - zn) - 2.0 * zf * zn / ((zf - zn) * q.z());
  return out;
}

Vec3 ndc_to_world(const Vec3& ndc, const Camera& cam) {
  double zn = cam.z_near, zf = cam.z_far;
  double z = 2.0 * zf * zn / ((zf + zn) - ndc.z() * (zf - zn));
  double col = (ndc.x() + 1.0) * 0.5 * static_cast<double>(cam.width);
  double row = (ndc.y() + 1.0) * 0.5 * static_cast<double>(cam.height);
  Vec3 q = cam.Kinv() * Vec3(row, col, 1.0);
  q *= z / q.z();
  return cam.R * q + cam.T;
}

std::array<double, 78> positional_encode(const std::array<double, 6>& r) {
  std::array<double, 78> out{};
  for (int i = 0; i < 6; ++i) out[static_cast<size_t>(i)] = r[static_cast<size_t>(i)];
  constexpr double kPi = 3.14159265358979323846;
  size_t idx = 6;
  for (int k = 0; k < 6; ++k) {
    double freq = std::ldexp(kPi, k);  // 2^k * pi
    for (int i = 0; i < 6; ++i) {
      out[idx++] = std::sin(freq * r[static_cast<size_t>(i)]);
      out[idx++] = std::cos(freq * r[static_cast<size_t>(i)]);
    }
  }
  return out;
}

PluckerRay plucker_encode(const Vec3& origin, const Vec3& direction) {
  double norm = direction.norm();
  if (norm < 1e-15) throw ContractError("plucker_encode: zero direction");
  Vec3 d = direction / norm;
  Vec3 m = origin.cross(direction) / norm;
  PluckerRay ray;
  for (int i = 0; i < 3; ++i) {
    ray.coords[static_cast<size_t>(i)] = d[i];
    ray.coords[static_cast<size_t>(i) + 3] = m[i];
  }
  ray.encoded = positional_encode(ray.coords);
  return ray;
}

}  // namespace lfnr
