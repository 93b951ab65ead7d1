#pragma once

#include "coneflow/flow.hpp"

namespace coneflow {

struct RescaledImmersion {
  DiscreteImmersion immersion;
  double s = 0.0;  // lambda^2 (t - T)
};

/// (y, r) -> (y, lambda r) at every node.
RescaledImmersion parabolic_rescale(const DiscreteImmersion& im, double t, double lambda,
                                    double T);

/// Max relative deviations of the scaling identities between a snapshot and
/// its rescaling.
struct RescaleReport {
  double metric = 0.0;         // g^lambda vs lambda^2 g
  double II2 = 0.0;            // |II^lambda|^2 vs |II|^2 / lambda^2
  double product = 0.0;       // (T - t)|II|^2 vs -s |II^lambda|^2
  double H_base = 0.0;         // H^{lambda,a} vs H^a / lambda^2
  double H_radial = 0.0;       // H^{lambda,r} vs H^r / lambda
  double theta = 0.0;          // Theta(original; t, T) vs Theta(rescaled; s, 0)

  double max() const;
};
RescaleReport verify_rescale_identities(const FlowState& original,
                                        const RescaledImmersion& rescaled, double lambda,
                                        double T);

}  // namespace coneflow
