#include "faiv/interpolation.hpp"

#include "faiv/error.hpp"

#include <cmath>
#include <vector>

namespace faiv {

namespace {
constexpr double kWeightTolerance = 1e-9;
}

FacePatch faceViewInterpolate(std::span<const WeightedPatch> inputs) {
  if (inputs.empty() || inputs.size() > 3) {
    throw Error(ErrorCode::InvalidArgument, "interpolation takes 1 to 3 patches");
  }
  double sum = 0.0;
  for (const WeightedPatch& in : inputs) {
    if (in.patch == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "null patch");
    }
    checkPatch(*in.patch);
    if (!std::isfinite(in.weight) || in.weight < -kWeightTolerance ||
        in.weight > 1.0 + kWeightTolerance) {
      throw Error(ErrorCode::InvalidArgument, "interpolation weight outside [0, 1]");
    }
    const BBox& a = inputs.front().patch->box;
    const BBox& b = in.patch->box;
    if (a.w != b.w || a.h != b.h) {
      throw Error(ErrorCode::DimensionMismatch, "interpolated patches differ in size");
    }
    sum += in.weight;
  }
  if (std::abs(sum - 1.0) > kWeightTolerance) {
    throw Error(ErrorCode::InvalidArgument, "interpolation weights do not sum to 1");
  }

  const BBox box = inputs.front().patch->box;
  FacePatch out{box, Image(box.w, box.h), Mask(box.w, box.h)};
  const std::size_t n = static_cast<std::size_t>(box.w) * box.h;
  std::vector<double> acc(n);
  for (int c = 0; c < kChannels; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const WeightedPatch& in : inputs) {
      const auto src = in.patch->pixels.plane(c);
      for (std::size_t i = 0; i < n; ++i) acc[i] += in.weight * src[i];
    }
    auto dst = out.pixels.plane(c);
    for (std::size_t i = 0; i < n; ++i) dst[i] = toSample(acc[i]);
  }
  std::fill(acc.begin(), acc.end(), 0.0);
  for (const WeightedPatch& in : inputs) {
    const auto src = in.patch->mask.data();
    for (std::size_t i = 0; i < n; ++i) acc[i] += in.weight * src[i];
  }
  auto dst = out.mask.data();
  for (std::size_t i = 0; i < n; ++i) dst[i] = toSample(acc[i]);
  return out;
}

FacePatch reenactPlanToPatch(const ReenactPlan& plan, const SourcePool& pool,
                             const Landmarks& driveLandmarks, const BBox& driveBox,
                             const Reenactor& reenactor) {
  if (const auto* single = std::get_if<SingleSourcePlan>(&plan)) {
    return reenactor.reenact(pool.find(single->sourceId), driveLandmarks, driveBox);
  }
  const auto* interior = std::get_if<InteriorPlan>(&plan);
  if (interior == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "plan requests a new source");
  }
  std::vector<FacePatch> patches;
  std::vector<double> weights;
  patches.reserve(3);
  for (const PlanTerm& term : interior->terms) {
    if (term.weight == 0.0) continue;
    patches.push_back(reenactor.reenact(pool.find(term.sourceId), driveLandmarks, driveBox));
    weights.push_back(term.weight);
  }
  if (patches.size() == 1) {
    return std::move(patches.front());
  }
  std::vector<WeightedPatch> inputs;
  for (std::size_t i = 0; i < patches.size(); ++i) inputs.push_back({&patches[i], weights[i]});
  return faceViewInterpolate(inputs);
}

} // namespace faiv
