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

// Instantaneous collision probability in the 2D encounter plane: the
// integral of N(miss, C) over the hard-body disk |p| <= R. Three kernels:
//
//  * Monte Carlo: count samples inside the disk.
//  * Patera: whiten the Gaussian, then a contour integral of exp(-r^2/2)
//    over the signed angle swept around the transformed hard-body boundary.
//  * Alfano: principal-axis frame, erf-reduced single integral in x,
//    composite Simpson.
//
// Plus the cumulative combination of independent events, and a 3D
// time-resolved Monte Carlo for slow encounters where the plane is undefined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "orco/conjunction.hpp"
#include "orco/error.hpp"
#include "orco/linalg.hpp"
#include "orco/parallel.hpp"

namespace orco {

enum class ProbabilityMethod { monte_carlo, patera, alfano };

constexpr std::string_view to_string(ProbabilityMethod m) {
  switch (m) {
    case ProbabilityMethod::monte_carlo: return "mc";
    case ProbabilityMethod::patera: return "patera";
    case ProbabilityMethod::alfano: return "alfano";
  }
  return "?";
}

inline ProbabilityMethod parse_probability_method(std::string_view s) {
  if (s == "mc" || s == "monte_carlo") return ProbabilityMethod::monte_carlo;
  if (s == "patera") return ProbabilityMethod::patera;
  if (s == "alfano") return ProbabilityMethod::alfano;
  throw Error(ErrorCode::InvalidArgument, "unknown probability method '" + std::string(s) + "'");
}

inline constexpr ProbabilityMethod kAllMethods[] = {ProbabilityMethod::monte_carlo, ProbabilityMethod::patera,
                                                    ProbabilityMethod::alfano};

struct ProbabilityRequest {
  Vector2 miss_km = Vector2::Zero();
  Matrix2 covariance_km2 = Matrix2::Identity();
  double hard_body_radius_m = 20.0;
  ProbabilityMethod method = ProbabilityMethod::patera;
  std::uint64_t mc_samples = 1'000'000;
  int patera_nodes = 10'000;
  int alfano_nodes = 2001;
  std::uint64_t rng_seed = 1;

  static ProbabilityRequest from_plane(const EncounterPlane& plane, double hard_body_radius_m,
                                       ProbabilityMethod method = ProbabilityMethod::patera) {
    ProbabilityRequest r;
    r.miss_km = plane.miss_vector_2d;
    r.covariance_km2 = plane.covariance_2d;
    r.hard_body_radius_m = hard_body_radius_m;
    r.method = method;
    return r;
  }

  void validate() const {
    if (!(hard_body_radius_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "hard_body_radius must be positive");
    if (mc_samples == 0) throw Error(ErrorCode::InvalidArgument, "mc_samples must be positive");
    if (patera_nodes < 3) throw Error(ErrorCode::InvalidArgument, "patera_nodes must be >= 3");
    if (alfano_nodes < 3 || alfano_nodes % 2 == 0) {
      throw Error(ErrorCode::InvalidArgument, "alfano_nodes must be odd and >= 3");
    }
    if (!miss_km.allFinite() || !covariance_km2.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "miss and covariance must be finite");
    }
  }
};

struct ProbabilityDiagnostics {
  std::optional<std::uint64_t> hits;
  std::optional<std::uint64_t> samples;
  std::optional<int> nodes;
  std::optional<double> closure_residual;
  bool time_resolved = false;
  std::vector<double> per_event;  ///< cumulative only
};

struct ProbabilityResult {
  ProbabilityMethod method = ProbabilityMethod::patera;
  double pc = 0.0;
  std::optional<double> error_estimate;  ///< MC: Wilson 95% half-width
  ProbabilityDiagnostics diagnostics;
};

/// Half-width of the Wilson score interval for `hits` out of `n` at `z` sigma.
inline double wilson_half_width(std::uint64_t hits, std::uint64_t n, double z = 1.959963984540054) {
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  return z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
}

/// Center of the Wilson score interval.
inline double wilson_center(std::uint64_t hits, std::uint64_t n, double z = 1.959963984540054) {
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  return (p + z * z / (2.0 * nn)) / (1.0 + z * z / nn);
}

namespace probability_detail {

inline constexpr double kSingularEigenvalue = 1e-20;  // km^2

/// Symmetric eigendecomposition with a proper rotation (det V = +1).
struct Principal {
  Vector2 values;
  Matrix2 vectors;
};

inline Principal principal(const Matrix2& c) {
  Eigen::SelfAdjointEigenSolver<Matrix2> es(0.5 * (c + c.transpose()));
  Principal p{es.eigenvalues(), es.eigenvectors()};
  if (p.vectors.determinant() < 0.0) p.vectors.col(1) *= -1.0;
  return p;
}

/// A negative eigenvalue beyond roundoff of the spectrum.
inline void reject_negative(const Principal& p) {
  if (p.values.minCoeff() < -1e-10 * p.values.cwiseAbs().sum()) {
    throw Error(ErrorCode::SingularCovariance,
                "covariance eigenvalue " + std::to_string(p.values.minCoeff()) + " km^2 is negative");
  }
}

inline Principal require_positive_definite(const Matrix2& c) {
  const auto p = principal(c);
  reject_negative(p);
  if (p.values.maxCoeff() < kSingularEigenvalue) {
    throw Error(ErrorCode::SingularCovariance, "both covariance eigenvalues are below 1e-20 km^2");
  }
  if (!(p.values.minCoeff() > 0.0)) {
    throw Error(ErrorCode::SingularCovariance, "covariance eigenvalue " + std::to_string(p.values.minCoeff()) +
                                                   " km^2 is not positive");
  }
  return p;
}

/// erf(a) - erf(b) without cancellation when a and b share a sign.
inline double erf_diff(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::erfc(b) - std::erfc(a);
  if (a < 0.0 && b < 0.0) return std::erfc(-a) - std::erfc(-b);
  return std::erf(a) - std::erf(b);
}

inline double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace probability_detail

inline ProbabilityResult pc_monte_carlo(const ProbabilityRequest& req) {
  using namespace probability_detail;
  req.validate();
  const auto p = principal(req.covariance_km2);
  reject_negative(p);
  if (p.values.maxCoeff() < kSingularEigenvalue) {
    throw Error(ErrorCode::SingularCovariance, "both covariance eigenvalues are below 1e-20 km^2");
  }
  const Matrix2 factor = covariance_factor(req.covariance_km2);
  const double r2 = std::pow(req.hard_body_radius_m / 1000.0, 2);

  // Fixed-size chunks, each with its own seed sequence, so the hit count does
  // not depend on the worker count.
  constexpr std::uint64_t kChunk = 1 << 16;
  const std::uint64_t chunks = (req.mc_samples + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> hits(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(req.rng_seed), static_cast<std::uint32_t>(req.rng_seed >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::uint64_t n = std::min(kChunk, req.mc_samples - c * kChunk);
    std::uint64_t h = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double z0 = normal(rng);
      const double z1 = normal(rng);
      const Vector2 x = req.miss_km + factor * Vector2(z0, z1);
      if (x.squaredNorm() <= r2) ++h;
    }
    hits[c] = h;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;

  ProbabilityResult out;
  out.method = ProbabilityMethod::monte_carlo;
  out.pc = static_cast<double>(total) / static_cast<double>(req.mc_samples);
  out.error_estimate = wilson_half_width(total, req.mc_samples);
  out.diagnostics.hits = total;
  out.diagnostics.samples = req.mc_samples;
  return out;
}

namespace probability_detail {

/// Node counts double from the requested count until the n- and 2n-node
/// values agree, at most this many times.
inline constexpr int kMaxDoublings = 8;

inline bool converged_pair(double coarse, double fine, double rel) {
  return std::fabs(coarse - fine) <= rel * std::fabs(fine) + 1e-300;
}

struct ContourSum {
  double pc = 0.0;
  double residual = 0.0;
};

/// Periodic midpoint rule in the ellipse parameter: the angle increment is
/// the tangent sweep at each panel midpoint. The closure residual takes the
/// worse of that sweep and the exact chord-angle sweep.
inline ContourSum patera_sum(const Matrix2& w, const Vector2& mean, double radius, int n, bool inside) {
  const double h = 2.0 * std::numbers::pi / n;
  double sum = 0.0;
  double sweep = 0.0;
  double chord_sweep = 0.0;
  Vector2 prev = w * Vector2(radius, 0.0) - mean;
  for (int k = 0; k < n; ++k) {
    const double phi = (k + 0.5) * h;
    const Vector2 q = w * Vector2(radius * std::cos(phi), radius * std::sin(phi)) - mean;
    const Vector2 dq = w * Vector2(-radius * std::sin(phi), radius * std::cos(phi));
    const double r2 = q.squaredNorm();
    const double dtheta = (q.x() * dq.y() - q.y() * dq.x()) / r2 * h;
    // Inside: pc = sum (1 - e^(-r^2/2)) dtheta / 2pi, free of the 1 - x cancellation.
    sum += (inside ? -std::expm1(-0.5 * r2) : std::exp(-0.5 * r2)) * dtheta;
    sweep += dtheta;
    const double phi_next = (k + 1) * h;
    const Vector2 next = w * Vector2(radius * std::cos(phi_next), radius * std::sin(phi_next)) - mean;
    chord_sweep += std::atan2(prev.x() * next.y() - prev.y() * next.x(), prev.dot(next));
    prev = next;
  }
  const double winding = inside ? 1.0 : 0.0;
  ContourSum out;
  out.pc = (inside ? sum : -sum) / (2.0 * std::numbers::pi);
  out.residual = std::max(std::fabs(sweep - 2.0 * std::numbers::pi * winding),
                          std::fabs(chord_sweep - 2.0 * std::numbers::pi * winding));
  return out;
}

}  // namespace probability_detail

inline ProbabilityResult pc_patera(const ProbabilityRequest& req) {
  using namespace probability_detail;
  req.validate();
  const auto p = require_positive_definite(req.covariance_km2);
  const double radius = req.hard_body_radius_m / 1000.0;
  // Whitening W = L^(-1/2) V^T; det W > 0 keeps the contour counterclockwise.
  const Matrix2 w = p.values.cwiseSqrt().cwiseInverse().asDiagonal() * p.vectors.transpose();
  const Vector2 mean = w * req.miss_km;
  const bool inside = req.miss_km.norm() < radius;

  int n = req.patera_nodes;
  ContourSum coarse = patera_sum(w, mean, radius, n, inside);
  for (int d = 0; d < kMaxDoublings; ++d) {
    const ContourSum fine = patera_sum(w, mean, radius, 2 * n, inside);
    if (coarse.residual <= 1e-9 && converged_pair(coarse.pc, fine.pc, 1e-11)) break;
    n *= 2;
    coarse = fine;
  }
  if (coarse.residual > 1e-6) {
    throw Error(ErrorCode::ContourNotClosed, "contour sweep residual " + std::to_string(coarse.residual) + " rad at " +
                                                 std::to_string(n) + " nodes");
  }

  ProbabilityResult out;
  out.method = ProbabilityMethod::patera;
  out.pc = clamp01(coarse.pc);
  out.diagnostics.nodes = n;
  out.diagnostics.closure_residual = coarse.residual;
  return out;
}

inline ProbabilityResult pc_alfano(const ProbabilityRequest& req) {
  using namespace probability_detail;
  req.validate();
  const auto p = require_positive_definite(req.covariance_km2);
  const double radius = req.hard_body_radius_m / 1000.0;
  // x along the major axis keeps the Gaussian factor wide; the narrow
  // direction is handled by the erf window.
  const Vector2 m = p.vectors.transpose() * req.miss_km;
  const double mx = m[1], my = m[0];
  const double sx = std::sqrt(p.values[1]);
  const double sy = std::sqrt(p.values[0]);

  // x = R sin(u) removes the square-root singularity of the y-window at x = +-R.
  auto integrand = [&](double u) {
    const double x = radius * std::sin(u);
    const double half = radius * std::cos(u);
    if (!(half > 0.0)) return 0.0;
    const double gx = std::exp(-0.5 * std::pow((x - mx) / sx, 2)) / (std::sqrt(2.0 * std::numbers::pi) * sx);
    const double wy =
        0.5 * erf_diff((my + half) / (std::numbers::sqrt2 * sy), (my - half) / (std::numbers::sqrt2 * sy));
    return gx * wy * half;
  };
  auto simpson = [&](int n) {
    const double a = -std::numbers::pi / 2.0;
    const double h = std::numbers::pi / (n - 1);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const double weight = (k == 0 || k == n - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      sum += weight * integrand(a + k * h);
    }
    return sum * h / 3.0;
  };
  int n = req.alfano_nodes;
  double coarse = simpson(n);
  for (int d = 0; d < kMaxDoublings; ++d) {
    const double fine = simpson(2 * n - 1);
    if (converged_pair(coarse, fine, 1e-11)) break;
    n = 2 * n - 1;
    coarse = fine;
  }

  ProbabilityResult out;
  out.method = ProbabilityMethod::alfano;
  out.pc = clamp01(coarse);
  out.diagnostics.nodes = n;
  return out;
}

inline ProbabilityResult compute_pc(const ProbabilityRequest& req) {
  switch (req.method) {
    case ProbabilityMethod::monte_carlo: return pc_monte_carlo(req);
    case ProbabilityMethod::patera: return pc_patera(req);
    case ProbabilityMethod::alfano: return pc_alfano(req);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown probability method");
}

/// 1 - prod(1 - pc_i), treating events as independent.
inline ProbabilityResult pc_cumulative(const std::vector<ProbabilityResult>& per_event, ProbabilityMethod method) {
  ProbabilityResult out;
  out.method = method;
  // c <- c + p (1 - c) is 1 - prod(1 - p) without cancellation for small p.
  double combined = 0.0;
  for (const auto& r : per_event) {
    combined += r.pc * (1.0 - combined);
    out.diagnostics.per_event.push_back(r.pc);
  }
  out.pc = probability_detail::clamp01(combined);
  return out;
}

/// Per-event pc for one pair's events and covariances at each tca, then combined.
inline ProbabilityResult pc_cumulative(const std::vector<ConjunctionEvent>& events,
                                       const std::vector<std::pair<Covariance6, Covariance6>>& covariances,
                                       const ProbabilityRequest& request_template) {
  if (events.size() != covariances.size()) {
    throw Error(ErrorCode::InvalidArgument, "one covariance pair per event is required");
  }
  std::vector<ProbabilityResult> per_event;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto plane = build_encounter_plane(events[i], covariances[i].first, covariances[i].second);
    ProbabilityRequest req = request_template;
    req.miss_km = plane.miss_vector_2d;
    req.covariance_km2 = plane.covariance_2d;
    per_event.push_back(compute_pc(req));
  }
  return pc_cumulative(per_event, request_template.method);
}

/// Slow-encounter fallback. `relative_positions` is B - A on a uniform grid
/// (1 s) around tca; each sample draws one 3D offset from the combined
/// position covariance and counts a hit if the offset path comes within R.
inline ProbabilityResult pc_time_resolved_mc(const std::vector<Vec3>& relative_positions, const Matrix3& combined_cov,
                                             double hard_body_radius_m, std::uint64_t samples,
                                             std::uint64_t seed) {
  if (relative_positions.empty()) throw Error(ErrorCode::InvalidArgument, "empty relative trajectory");
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be positive");
  if (combined_cov.trace() < probability_detail::kSingularEigenvalue) {
    throw Error(ErrorCode::SingularCovariance, "combined position covariance is zero");
  }
  const Matrix3 factor = covariance_factor(combined_cov);
  const double r2 = std::pow(hard_body_radius_m / 1000.0, 2);
  constexpr std::uint64_t kChunk = 1 << 12;
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> hits(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(c), 0x3du};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::uint64_t n = std::min(kChunk, samples - c * kChunk);
    for (std::uint64_t i = 0; i < n; ++i) {
      const Vec3 z(normal(rng), normal(rng), normal(rng));
      const Vec3 offset = factor * z;
      for (const auto& r : relative_positions) {
        if ((r + offset).squaredNorm() <= r2) {
          ++hits[c];
          break;
        }
      }
    }
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  ProbabilityResult out;
  out.method = ProbabilityMethod::monte_carlo;
  out.pc = static_cast<double>(total) / static_cast<double>(samples);
  out.error_estimate = wilson_half_width(total, samples);
  out.diagnostics.hits = total;
  out.diagnostics.samples = samples;
  out.diagnostics.time_resolved = true;
  return out;
}

}  // namespace orco
