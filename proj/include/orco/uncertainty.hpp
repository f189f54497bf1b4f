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

// Forward propagation of state uncertainty through SGP4 by three schemes:
//
//  * Monte Carlo: Gaussian samples of the epoch state, each mapped to mean
//    elements and propagated.
//  * ESPT: moment propagation with the scaled unscented transform, 13 sigma
//    points for the 6-dimensional state.
//  * AESPT: ESPT over adaptively sized segments. After each segment the
//    sigma-point set is rebuilt from the segment-end moments; a segment is
//    halved while the nonlinearity metric nu (distance between the weighted
//    mean of the propagated points and the propagated mean point) exceeds a
//    threshold.
//
// ESPT and AESPT are this library's concrete reading of "extrapolated state
// propagation": moment matching by sigma points, plus adaptive re-centering.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "orco/element_fit.hpp"
#include "orco/error.hpp"
#include "orco/linalg.hpp"
#include "orco/parallel.hpp"
#include "orco/propagator.hpp"

namespace orco {

enum class CovarianceFrame { TEME, RSW };

/// 6x6 state covariance. Blocks: km^2, km^2/s, km^2/s^2.
struct Covariance6 {
  Matrix6 matrix = Matrix6::Zero();
  CovarianceFrame frame = CovarianceFrame::TEME;

  [[nodiscard]] Matrix3 position_block() const { return matrix.topLeftCorner<3, 3>(); }
};

struct UncertaintyConfig {
  Vec3 sigma_rsw_position{0.3, 1.0, 0.3};        ///< km (radial, along-track, cross-track)
  Vec3 sigma_rsw_velocity{1e-3, 1e-3, 1e-3};     ///< km/s
  int sample_count = 1000;
  double ut_alpha = 1e-1;
  double ut_beta = 2.0;
  double ut_kappa = 0.0;
  double aespt_nl_threshold_km = 1.0;
  std::uint64_t rng_seed = 1;
  double min_segment_s = 60.0;

  void validate() const {
    if (!((sigma_rsw_position.array() > 0.0).all() && (sigma_rsw_velocity.array() > 0.0).all())) {
      throw Error(ErrorCode::InvalidArgument, "all sigmas must be positive");
    }
    if (sample_count < 100) throw Error(ErrorCode::InvalidArgument, "sample_count must be >= 100");
    if (!(ut_alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "ut_alpha must be positive");
    if (!(aespt_nl_threshold_km > 0.0)) throw Error(ErrorCode::InvalidArgument, "aespt threshold must be positive");
  }
};

struct AnalyticRepresentation {};

struct SampleCloud {
  std::vector<StateVector> cloud;
};

struct SigmaPointSet {
  std::vector<StateVector> points;
  std::vector<double> weights_mean;
  std::vector<double> weights_cov;
};

using Representation = std::variant<AnalyticRepresentation, SampleCloud, SigmaPointSet>;

/// One accepted or rejected AESPT segment attempt.
struct SegmentTrace {
  Instant start{};
  Instant stop{};
  double nu_km = 0.0;
  bool accepted = false;
};

struct PropagationDiagnostics {
  std::size_t propagations = 0;  ///< SGP4 propagations to a target time (fits excluded)
  std::size_t dropped = 0;       ///< decayed or unfittable MC samples
  std::vector<SegmentTrace> segments;
};

struct StateDistribution {
  Instant epoch{};
  StateVector mean;
  Covariance6 covariance;
  Representation representation = AnalyticRepresentation{};
  PropagationDiagnostics diagnostics;
};

/// Columns are the radial, along-track and cross-track unit vectors in TEME.
inline Matrix3 rsw_basis(const Vec3& position, const Vec3& velocity) {
  const Vec3 r = position.normalized();
  const Vec3 w = position.cross(velocity).normalized();
  const Vec3 s = w.cross(r);
  Matrix3 m;
  m.col(0) = r;
  m.col(1) = s;
  m.col(2) = w;
  return m;
}

inline Matrix6 rsw_to_teme(const Matrix6& cov_rsw, const StateVector& mean) {
  const Matrix3 m = rsw_basis(mean.position, mean.velocity);
  Matrix6 t = Matrix6::Zero();
  t.topLeftCorner<3, 3>() = m;
  t.bottomRightCorner<3, 3>() = m;
  const Matrix6 out = t * cov_rsw * t.transpose();
  return 0.5 * (out + out.transpose());
}

inline StateDistribution initial_distribution(const TleRecord& record, const UncertaintyConfig& config,
                                              PropagatorOptions options = {}) {
  config.validate();
  StateDistribution d;
  d.epoch = record.epoch;
  d.mean = propagate(record, record.epoch, options);
  Vector6 variances;
  variances << config.sigma_rsw_position.array().square(), config.sigma_rsw_velocity.array().square();
  d.covariance.matrix = rsw_to_teme(Matrix6(variances.asDiagonal()), d.mean);
  d.covariance.frame = CovarianceFrame::TEME;
  return d;
}

namespace uncertainty_detail {

inline Vector6 to_vector(const StateVector& s) {
  Vector6 v;
  v << s.position, s.velocity;
  return v;
}

inline StateVector to_state(const Vector6& v, Instant t, int norad_id) {
  return StateVector{t, v.head<3>(), v.tail<3>(), norad_id};
}

inline void check_start(const StateDistribution& dist, const TleRecord& record) {
  if (dist.epoch != record.epoch) {
    throw Error(ErrorCode::InvalidArgument, "distribution must be the initial distribution at the record epoch");
  }
}

struct WeightedMoments {
  Vector6 mean;
  Matrix6 cov;
};

/// Weighted moments. The mean is accumulated as offsets from points[0] to
/// limit cancellation with large negative central weights.
inline WeightedMoments moments(const std::vector<Vector6>& points, const std::vector<double>& wm,
                               const std::vector<double>& wc) {
  Vector6 offset = Vector6::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) offset += wm[i] * (points[i] - points[0]);
  WeightedMoments m;
  m.mean = points[0] + offset;
  m.cov = Matrix6::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vector6 d = points[i] - m.mean;
    m.cov += wc[i] * d * d.transpose();
  }
  m.cov = repair_psd(m.cov);
  return m;
}

struct SigmaWeights {
  double scale = 0.0;  ///< sqrt(n + lambda)
  std::vector<double> wm;
  std::vector<double> wc;
};

inline SigmaWeights sigma_weights(const UncertaintyConfig& c) {
  constexpr double n = 6.0;
  const double lambda = c.ut_alpha * c.ut_alpha * (n + c.ut_kappa) - n;
  SigmaWeights w;
  w.scale = std::sqrt(n + lambda);
  w.wm.assign(13, 1.0 / (2.0 * (n + lambda)));
  w.wc = w.wm;
  w.wm[0] = lambda / (n + lambda);
  w.wc[0] = w.wm[0] + (1.0 - c.ut_alpha * c.ut_alpha + c.ut_beta);
  return w;
}

inline std::vector<Vector6> sigma_points(const Vector6& mean, const Matrix6& cov, double scale) {
  Matrix6 factor;
  try {
    factor = covariance_factor(cov);
  } catch (const Error& e) {
    throw Error(ErrorCode::CholeskyFailure, e.detail());
  }
  std::vector<Vector6> pts(13, mean);
  for (int i = 0; i < 6; ++i) {
    pts[1 + i] = mean + scale * factor.col(i);
    pts[7 + i] = mean - scale * factor.col(i);
  }
  return pts;
}

/// Fits every point at the fitter's time, then propagates to `t`. Any failure aborts.
inline std::vector<Vector6> propagate_points(const std::vector<Vector6>& pts, const ElementFitter& fitter,
                                             const TleRecord& record, Instant t) {
  std::vector<Vector6> out(pts.size());
  const double tsince = seconds_between(record.epoch, t) / 60.0;
  parallel_for(pts.size(), [&](std::size_t i) {
    const auto el = fitter.fit(pts[i]);
    if (!el) throw Error(ErrorCode::DecayedOrbit, "sigma point " + std::to_string(i) + " has no valid mean elements");
    out[i] = to_vector(Sgp4(*el).at_minutes(tsince));
  });
  return out;
}

}  // namespace uncertainty_detail

inline StateDistribution propagate_mc(const StateDistribution& dist, const TleRecord& record, Instant t,
                                      const UncertaintyConfig& config, PropagatorOptions options = {}) {
  using namespace uncertainty_detail;
  config.validate();
  check_start(dist, record);
  (void)Propagator(record, options).at(t);  // horizon and decay checks on the nominal orbit

  const Matrix6 factor = covariance_factor(dist.covariance.matrix);
  const Vector6 mean0 = to_vector(dist.mean);
  const auto n = static_cast<std::size_t>(config.sample_count);

  std::vector<Vector6> draws(n);
  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& z : draws) {
    for (int k = 0; k < 6; ++k) z[k] = normal(rng);
  }

  const ElementFitter fitter(record.elements, 0.0);
  const double tsince = seconds_between(record.epoch, t) / 60.0;
  std::vector<std::optional<Vector6>> propagated(n);
  parallel_for(n, [&](std::size_t i) {
    const auto el = fitter.fit(mean0 + factor * draws[i]);
    if (!el) return;
    try {
      propagated[i] = to_vector(Sgp4(*el).at_minutes(tsince));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DecayedOrbit) throw;
    }
  });

  StateDistribution out;
  out.epoch = t;
  out.diagnostics.propagations = n;
  SampleCloud samples;
  samples.cloud.reserve(n);
  for (const auto& p : propagated) {
    if (p) samples.cloud.push_back(to_state(*p, t, record.norad_id));
  }
  out.diagnostics.dropped = n - samples.cloud.size();
  if (out.diagnostics.dropped * 100 > n) {
    throw Error(ErrorCode::DegenerateCloud, std::to_string(out.diagnostics.dropped) + " of " + std::to_string(n) +
                                                " samples decayed or could not be mapped (> 1%)");
  }

  const double count = static_cast<double>(samples.cloud.size());
  Vector6 sum = Vector6::Zero();
  for (const auto& s : samples.cloud) sum += to_vector(s);
  const Vector6 mean = sum / count;
  Matrix6 cov = Matrix6::Zero();
  for (const auto& s : samples.cloud) {
    const Vector6 d = to_vector(s) - mean;
    cov += d * d.transpose();
  }
  cov /= (count - 1.0);
  out.mean = to_state(mean, t, record.norad_id);
  out.covariance.matrix = repair_psd(cov);
  out.representation = std::move(samples);
  return out;
}

inline StateDistribution propagate_espt(const StateDistribution& dist, const TleRecord& record, Instant t,
                                        const UncertaintyConfig& config, PropagatorOptions options = {}) {
  using namespace uncertainty_detail;
  config.validate();
  check_start(dist, record);
  (void)Propagator(record, options).at(t);

  const auto w = sigma_weights(config);
  const auto pts = sigma_points(to_vector(dist.mean), dist.covariance.matrix, w.scale);
  const ElementFitter fitter(record.elements, 0.0);
  const auto prop = propagate_points(pts, fitter, record, t);
  const auto m = moments(prop, w.wm, w.wc);

  StateDistribution out;
  out.epoch = t;
  out.mean = to_state(m.mean, t, record.norad_id);
  out.covariance.matrix = m.cov;
  SigmaPointSet set;
  for (const auto& p : prop) set.points.push_back(to_state(p, t, record.norad_id));
  set.weights_mean = w.wm;
  set.weights_cov = w.wc;
  out.representation = std::move(set);
  out.diagnostics.propagations = prop.size();
  return out;
}

inline StateDistribution propagate_aespt(const StateDistribution& dist, const TleRecord& record, Instant t,
                                         const UncertaintyConfig& config, PropagatorOptions options = {}) {
  using namespace uncertainty_detail;
  config.validate();
  check_start(dist, record);
  (void)Propagator(record, options).at(t);

  const auto w = sigma_weights(config);
  StateDistribution out;
  Vector6 mean = to_vector(dist.mean);
  Matrix6 cov = dist.covariance.matrix;
  Instant current = dist.epoch;
  double trial_s = seconds_between(current, t);
  std::vector<Vector6> last_points(13, mean);

  while (current < t) {
    const double remaining = seconds_between(current, t);
    trial_s = std::min(trial_s, remaining);
    const auto pts = sigma_points(mean, cov, w.scale);
    const ElementFitter fitter(record.elements, seconds_between(record.epoch, current) / 60.0);
    for (;;) {
      const Instant stop = trial_s >= remaining ? t : add_seconds(current, trial_s);
      const auto prop = propagate_points(pts, fitter, record, stop);
      out.diagnostics.propagations += prop.size();
      const auto m = moments(prop, w.wm, w.wc);
      const double nu = (m.mean.head<3>() - prop[0].head<3>()).norm();
      const double span = seconds_between(current, stop);
      const bool can_halve = span / 2.0 >= config.min_segment_s;
      if (nu > config.aespt_nl_threshold_km && can_halve) {
        out.diagnostics.segments.push_back({current, stop, nu, false});
        trial_s = span / 2.0;
        continue;
      }
      if (nu > config.aespt_nl_threshold_km && span >= config.min_segment_s) {
        throw Error(ErrorCode::SegmentUnderflow, "nonlinearity " + std::to_string(nu) + " km exceeds threshold at the " +
                                                     std::to_string(config.min_segment_s) + " s minimum segment");
      }
      out.diagnostics.segments.push_back({current, stop, nu, true});
      mean = m.mean;
      cov = m.cov;
      last_points = prop;
      current = stop;
      trial_s = 2.0 * span;
      break;
    }
  }

  out.epoch = t;
  out.mean = to_state(mean, t, record.norad_id);
  out.covariance.matrix = cov;
  SigmaPointSet set;
  for (const auto& p : last_points) set.points.push_back(to_state(p, t, record.norad_id));
  set.weights_mean = w.wm;
  set.weights_cov = w.wc;
  out.representation = std::move(set);
  return out;
}

enum class UncertaintyScheme { monte_carlo, espt, aespt };

inline StateDistribution propagate_uncertainty(UncertaintyScheme scheme, const StateDistribution& dist,
                                               const TleRecord& record, Instant t, const UncertaintyConfig& config,
                                               PropagatorOptions options = {}) {
  switch (scheme) {
    case UncertaintyScheme::monte_carlo: return propagate_mc(dist, record, t, config, options);
    case UncertaintyScheme::espt: return propagate_espt(dist, record, t, config, options);
    case UncertaintyScheme::aespt: return propagate_aespt(dist, record, t, config, options);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown uncertainty scheme");
}

}  // namespace orco
