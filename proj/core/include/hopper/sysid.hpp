#pragma once

// Identification of the pneumatic models from force-displacement and
// step-response data, plus deterministic synthetic data generation used
// for validation (stand-in for the tensile tester).

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hopper/pneumatics.hpp"

namespace hopper {

struct ForceDisplacementSample {
  double x_m = 0.0;        // compression distance
  double force_n = 0.0;    // measured (net) resistive force
  double tank_pa = kAtmospherePa;
  double speed_mps = 0.0;  // pump-length rate; negative while compressing
};

struct StepResponseSample {
  double t_s = 0.0;  // time since valve trigger
  double delta = 0.0;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientSamplesError : FitError {
  explicit InsufficientSamplesError(const std::string& segment)
      : FitError("insufficient samples in segment: " + segment), segment(segment) {}
  std::string segment;
};
struct DegenerateDataError : FitError {
  using FitError::FitError;
};

struct PumpFitReport {
  PumpFitCoefficients coefficients;
  double rmse_stage1 = 0.0;
  double rmse_transition = 0.0;
  double rmse_stage2 = 0.0;
  double rmse_open = 0.0;
  double rmse_total = 0.0;
  int n_stage1 = 0, n_transition = 0, n_stage2 = 0, n_open = 0;
  // continuity residuals of the fitted piecewise force at l1 / l2 / the
  // valve-opening point, relative to the local force magnitude
  double continuity_l1 = 0.0;
  double continuity_l2 = 0.0;
  double continuity_valve = 0.0;
};

// Constrained least squares per segment with equality constraints gluing the
// branches at l1 and l2 (and multiplier = 1 at the valve-opening point when
// open-branch samples are present). Breakpoints come from the geometry.
PumpFitReport fit_pump_model(const std::vector<ForceDisplacementSample>& samples,
                             const PumpGeometry& geom);

struct TransientFitReport {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 1.0;
  double rmse = 0.0;
  bool stable = true;
  bool degenerate_inertia = false;  // signal already settled before first sample
  int starts_evaluated = 0;
};

// Fit (k1, k2) of k1*dd + k2*d + delta = step(t) to a measured unit-step
// response; multi-start grid + simplex refinement on the closed form.
// rmse_threshold guards against accepting a fit that does not explain the data.
TransientFitReport fit_transient(const std::vector<StepResponseSample>& samples,
                                 double rmse_threshold = 0.2);

// --- synthetic data ----------------------------------------------------------

enum class SyntheticKind { Pump, Actuator, Transient };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Pump;
  PumpGeometry geom;
  ActuatorModel actuator;
  std::vector<double> tank_pressures_pa = {kAtmospherePa};
  double tank_volume_m3 = 1.939e-4;
  // pump: when set, samples come from the piecewise model instead of the
  // (net) theoretical model
  std::optional<PumpFitCoefficients> fit;
  int samples_per_curve = 120;
  double speed_mps = -0.05;
  double t_end_s = 0.0;  // transient horizon; <= 0 means auto from settle time
  double noise_rel = 0.0;
  uint64_t seed = 1;
};

struct SyntheticData {
  std::vector<ForceDisplacementSample> force_displacement;
  std::vector<StepResponseSample> step_response;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace hopper
