#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "coneflow/immersion.hpp"

namespace coneflow {

enum class Integrator { kEuler, kRK4 };

struct FlowState {
  double t = 0.0;
  DiscreteImmersion immersion;
};

struct FlowConfig {
  Integrator integrator = Integrator::kEuler;
  double c_stab = 0.0;  // 0 picks 0.2 (Euler) or 0.4 (RK4)
  double dt_max = std::numeric_limits<double>::infinity();
  double dt_min = 1e-14;
  double t_max = std::numeric_limits<double>::infinity();
  double stop_min_r2 = 1e-4;
  double stop_sup_II2 = 1e8;
  std::size_t max_steps = 50'000'000;
  int record_every = 1;
  bool lemma_residuals = true;
  /// Horizon for the Huisken functional; rows carry NaN theta when unset.
  std::optional<double> theta_T;
  /// Keep a snapshot every this many recorded rows (0 keeps none).
  int snapshot_every = 0;

  double stability_constant() const;
};

struct FlowRow {
  double t = 0.0;
  double dt = 0.0;  // step taken after this row (0 on the last row)
  double volume = 0.0;
  double sup_II2 = 0.0;
  double min_r2 = 0.0;
  double max_r2 = 0.0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double dissipation = std::numeric_limits<double>::quiet_NaN();
  double self_similar_max = std::numeric_limits<double>::quiet_NaN();
  double lemma1_resid = 0.0;
  double lemma2_resid = std::numeric_limits<double>::quiet_NaN();
};

enum class StopReason { kMinRadius, kCurvatureCap, kTimeLimit, kStepLimit };
std::string to_string(StopReason r);

struct FlowTrace {
  int m = 1;
  double c0 = 0.0;  // max r^2 at t = 0
  std::vector<FlowRow> rows;
  std::vector<FlowState> snapshots;
  std::optional<FlowState> final_state;
  StopReason stop = StopReason::kTimeLimit;
  bool blowup_detected = false;
  std::optional<double> T_est;         // from sup|II|^-2 -> 0
  std::optional<double> T_est_radius;  // from min r^2 -> 0
  std::optional<double> theta_T;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, FlowState state)
      : NumericalError("flow", what), state_(std::move(state)) {}
  const FlowState& state() const { return state_; }

 private:
  FlowState state_;
};

class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InconclusiveError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Parabolic step bound c * min(min_nodes 1/sum_i(g^ii/h_i^2), 1/max(1, sup|II|^2)).
double stable_dt(const DiscreteImmersion& im, const GeometryCache& cache, double c_stab);

/// Node velocity of the flow: H in generic mode (clamped ends stay put), the
/// graph speed H^r - dr(H^y) in graphical mode, as a per-node cone tangent.
std::vector<ConeTangent> flow_velocity(const DiscreteImmersion& im, const GeometryCache& cache);

/// One explicit Euler or classical four-stage step of dF/dt = H.
FlowState step(const FlowState& state, double dt, const FlowConfig& config = {});

/// Integrate until a stop threshold, t_max or max_steps.
FlowTrace run(const DiscreteImmersion& initial, const FlowConfig& config = {});

/// C0 / (2m) with C0 = max r^2 over the initial nodes.
double blowup_bound(const DiscreteImmersion& initial);

struct BlowupFit {
  double T = 0.0;
  double T_half_window = 0.0;
  double T_radius = std::numeric_limits<double>::quiet_NaN();
};
/// Least-squares fit of sup|II|^-2 against t over the trailing fraction of rows.
BlowupFit estimate_blowup_time(const std::vector<FlowRow>& rows, double window = 0.25);

struct SingularityReport {
  bool singular = false;
  double T_est = std::numeric_limits<double>::quiet_NaN();
  double blowup_bound = std::numeric_limits<double>::quiet_NaN();
  bool typeI = false;
  double C_est = std::numeric_limits<double>::quiet_NaN();
  bool typeIc = false;
  double K1_est = std::numeric_limits<double>::quiet_NaN();
  double K2_est = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<double, double>> r_min_trend;  // (T - t, min r^2)
};

struct ClassifierConfig {
  std::size_t min_rows = 50;
  double bounded_ratio = 2.0;      // max / median of sup|II|^2 (T-t)
  double band_ratio = 2.0;         // K2 / K1
  double apex_fraction = 0.01;     // final min r^2 relative to initial
  double drift_tolerance = 0.01;   // between the two fit windows
};
SingularityReport classify_singularity(const FlowTrace& trace, const ClassifierConfig& cfg = {});

void write_trace_csv(const std::filesystem::path& path, const FlowTrace& trace);
void write_summary_json(const std::filesystem::path& path, const SingularityReport& report);
std::string summary_json(const SingularityReport& report);

}  // namespace coneflow
