#pragma once

#include "faiv/image.hpp"
#include "faiv/landmarks.hpp"
#include "faiv/source_pool.hpp"
#include "faiv/vision.hpp"

#include <span>

namespace faiv {

struct WeightedPatch {
  const FacePatch* patch;
  double weight;
};

/// Per-pixel weighted sum of 1 to 3 patches (samples and mask coverage),
/// rounded half away from zero. Weights must lie in [0, 1] and sum to 1
/// within 1e-9; all patches must share the same box dimensions. The result
/// carries the first patch's box.
FacePatch faceViewInterpolate(std::span<const WeightedPatch> inputs);

/// Reenacts every source referenced by `plan` with the same driving
/// landmarks and box, then blends with the plan weights. Terms with zero
/// weight are skipped. Throws InvalidArgument for NeedNewSource; reenactment
/// failures propagate with the source id as detail.
FacePatch reenactPlanToPatch(const ReenactPlan& plan, const SourcePool& pool,
                             const Landmarks& driveLandmarks, const BBox& driveBox,
                             const Reenactor& reenactor);

} // namespace faiv
