// Copyright 2026 The OrCo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Maps a Cartesian TEME state back onto SGP4 mean elements. SGP4 consumes
// mean elements, so every perturbed sample or sigma point is converted by
// differential correction: Newton iterations on six nonsingular mean
// elements (n, e cos w, e sin w, i, raan, M + w) with a Jacobian taken by
// central differences at the reference elements.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "orco/error.hpp"
#include "orco/linalg.hpp"
#include "orco/sgp4.hpp"

namespace orco {

inline Vector6 to_vector(const CartesianState& s) {
  Vector6 v;
  v << s.position, s.velocity;
  return v;
}

inline CartesianState to_state(const Vector6& v) { return {v.head<3>(), v.tail<3>()}; }

struct ElementFitOptions {
  double position_tolerance_km = 1e-9;
  double velocity_tolerance_km_s = 1e-12;
  int max_iterations = 25;
};

class ElementFitter {
 public:
  /// Fits states observed `tsince_min` minutes after the element epoch, linearized about `reference`.
  ElementFitter(const MeanElements& reference, double tsince_min, ElementFitOptions options = {})
      : reference_(reference), q0_(to_params(reference)), tsince_(tsince_min), options_(options) {
    reference_state_ = to_vector(Sgp4(reference).at_minutes(tsince_));
    lu_ = jacobian(q0_).partialPivLu();
  }

  /// Mean elements whose SGP4 state at tsince matches `target`. Iterates with
  /// the reference Jacobian first and falls back to full Newton (Jacobian
  /// refreshed every step) for targets far from the reference. Returns
  /// nullopt if both leave the valid element domain or do not converge.
  [[nodiscard]] std::optional<MeanElements> fit(const Vector6& target) const {
    const Vector6 residual = target - reference_state_;
    if (converged(residual)) return reference_;
    if (auto q = iterate(target, residual, false)) return from_params(*q);
    if (auto q = iterate(target, residual, true)) return from_params(*q);
    return std::nullopt;
  }

  [[nodiscard]] const Vector6& reference_state() const { return reference_state_; }
  [[nodiscard]] const MeanElements& reference() const { return reference_; }
  [[nodiscard]] double tsince_min() const { return tsince_; }

 private:
  static constexpr double kDeg = std::numbers::pi / 180.0;
  // Finite-difference steps: rev/day, dimensionless, radians.
  static constexpr double kSteps[6] = {1e-6, 1e-7, 1e-7, 1e-7, 1e-7, 1e-7};

  Matrix6 jacobian(const Vector6& q) const {
    Matrix6 jac;
    for (int j = 0; j < 6; ++j) {
      Vector6 dq = Vector6::Zero();
      dq[j] = kSteps[j];
      const Vector6 plus = to_vector(Sgp4(from_params(q + dq)).at_minutes(tsince_));
      const Vector6 minus = to_vector(Sgp4(from_params(q - dq)).at_minutes(tsince_));
      jac.col(j) = (plus - minus) / (2.0 * kSteps[j]);
    }
    return jac;
  }

  // Residual merit with velocity scaled to a comparable length (km/s * 1000 s).
  static double merit(const Vector6& r) { return r.head<3>().squaredNorm() + 1e6 * r.tail<3>().squaredNorm(); }

  std::optional<Vector6> residual_at(const Vector6& q, const Vector6& target) const {
    const MeanElements el = from_params(q);
    if (!(el.eccentricity < 1.0) || !(el.mean_motion > 0.0) || !q.allFinite()) return std::nullopt;
    try {
      return Vector6(target - to_vector(Sgp4(el).at_minutes(tsince_)));
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  // Two-body nonsingular elements (rev/day, e cos w, e sin w, i, raan, M + w) of a Cartesian state.
  static std::optional<Vector6> osculating(const Vector6& x) {
    const Vec3 r = x.head<3>();
    const Vec3 v = x.tail<3>();
    const Vec3 h = r.cross(v);
    const double inv_a = 2.0 / r.norm() - v.squaredNorm() / wgs72::kMu;
    if (!(inv_a > 0.0) || h.norm() == 0.0) return std::nullopt;
    const Vec3 e_vec = v.cross(h) / wgs72::kMu - r.normalized();
    const double e = e_vec.norm();
    if (!(e < 1.0)) return std::nullopt;
    const double raan = std::atan2(h.x(), -h.y());
    const Vec3 p(std::cos(raan), std::sin(raan), 0.0);
    const Vec3 q = h.normalized().cross(p);
    const double ec = e_vec.dot(p);
    const double es = e_vec.dot(q);
    const double w = std::atan2(es, ec);
    const double u = std::atan2(r.dot(q), r.dot(p));
    const double nu = u - w;
    const double big_e = 2.0 * std::atan(std::sqrt((1.0 - e) / (1.0 + e)) * std::tan(nu / 2.0));
    Vector6 out;
    out << std::sqrt(wgs72::kMu * inv_a * inv_a * inv_a) * 86400.0 / (2.0 * std::numbers::pi), ec, es,
        std::acos(std::clamp(h.z() / h.norm(), -1.0, 1.0)), raan, big_e - e * std::sin(big_e) + w;
    return out;
  }

  // Quasi-Newton with the reference Jacobian, or damped full Newton from a
  // two-body initial guess when `refresh` is set.
  std::optional<Vector6> iterate(const Vector6& target, Vector6 residual, bool refresh) const {
    Vector6 q = q0_;
    if (refresh) {
      const auto a = osculating(reference_state_);
      const auto b = osculating(target);
      if (!a || !b) return std::nullopt;
      Vector6 d = *b - *a;
      for (int k : {4, 5}) d[k] = std::remainder(d[k], 2.0 * std::numbers::pi);
      d[5] -= d[0] * 2.0 * std::numbers::pi / 1440.0 * tsince_;  // undo the mean-longitude drift
      q += d;
      const auto r = residual_at(q, target);
      if (!r) return std::nullopt;
      residual = *r;
    }
    for (int it = 0; it < options_.max_iterations; ++it) {
      if (converged(residual)) return q;
      if (!refresh) {
        q += lu_.solve(residual);
        const auto r = residual_at(q, target);
        if (!r) return std::nullopt;
        residual = *r;
        continue;
      }
      Matrix6 jac;
      try {
        jac = jacobian(q);
      } catch (const Error&) {
        return std::nullopt;
      }
      const Vector6 step = jac.partialPivLu().solve(residual);
      bool improved = false;
      for (double lambda = 1.0; lambda > 1e-3; lambda *= 0.5) {
        const Vector6 trial = q + lambda * step;
        const auto r = residual_at(trial, target);
        if (r && merit(*r) < merit(residual)) {
          q = trial;
          residual = *r;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    if (converged(residual)) return q;
    return std::nullopt;
  }

  [[nodiscard]] bool converged(const Vector6& r) const {
    return r.head<3>().norm() < options_.position_tolerance_km && r.tail<3>().norm() < options_.velocity_tolerance_km_s;
  }

  Vector6 to_params(const MeanElements& e) const {
    const double w = e.arg_perigee_deg * kDeg;
    Vector6 q;
    q << e.mean_motion, e.eccentricity * std::cos(w), e.eccentricity * std::sin(w), e.inclination_deg * kDeg,
        e.raan_deg * kDeg, (e.mean_anomaly_deg + e.arg_perigee_deg) * kDeg;
    return q;
  }

  MeanElements from_params(const Vector6& q) const {
    MeanElements e = reference_;
    e.mean_motion = q[0];
    e.eccentricity = std::hypot(q[1], q[2]);
    const double w = e.eccentricity > 0.0 ? std::atan2(q[2], q[1]) : 0.0;
    e.inclination_deg = q[3] / kDeg;
    e.raan_deg = q[4] / kDeg;
    e.arg_perigee_deg = w / kDeg;
    e.mean_anomaly_deg = (q[5] - w) / kDeg;
    return e;
  }

  MeanElements reference_;
  Vector6 q0_;
  double tsince_;
  ElementFitOptions options_;
  Vector6 reference_state_;
  Eigen::PartialPivLU<Matrix6> lu_;
};

}  // namespace orco
