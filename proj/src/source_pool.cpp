#include "faiv/source_pool.hpp"

#include "faiv/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace faiv {

SourcePool::SourcePool(double threshold) : threshold_(threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw Error(ErrorCode::InvalidArgument, "pool threshold must be positive and finite");
  }
}

const SourceEntry& SourcePool::find(SourceId id) const {
  for (const auto& e : entries_) {
    if (e->sourceId == id) {
      return *e;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "no source with id " + std::to_string(id));
}

double SourcePool::nearestDistance(const AngularPoint& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) {
    best = std::min(best, angularDistance(e->point, p));
  }
  return best;
}

ReenactPlan SourcePool::classify(const EulerPose& pose) const {
  const AngularPoint p = projectPose(pose);
  if (nearestDistance(p) > threshold_) {
    return NeedNewSource{};
  }
  const Location where = locate(mesh_, p);
  if (const auto* inside = std::get_if<Interior>(&where)) {
    const Triangle& tri = mesh_.triangles()[inside->triangle];
    const BarycentricWeights w = barycentric(mesh_.corners(inside->triangle), p);
    InteriorPlan plan;
    for (int i = 0; i < 3; ++i) {
      plan.terms[i] = {tri[i], w.weights[i]};
    }
    return plan;
  }
  return SingleSourcePlan{std::get<Outside>(where).nearest, 1.0};
}

std::optional<Admission> SourcePool::addSource(FacePatch faceCrop, Landmarks landmarks,
                                               const EulerPose& pose) const {
  const AngularPoint p = projectPose(pose);
  if (nearestDistance(p) < threshold_) {
    return std::nullopt;
  }
  auto entry = std::make_shared<SourceEntry>();
  entry->sourceId = nextId_;
  entry->faceCrop = std::move(faceCrop);
  entry->landmarks = std::move(landmarks);
  entry->pose = pose;
  entry->point = p;

  SourcePool next = *this;
  next.entries_.push_back(std::move(entry));
  next.nextId_ = nextId_ + 1;
  std::vector<MeshVertex> vertices;
  vertices.reserve(next.entries_.size());
  for (const auto& e : next.entries_) {
    vertices.push_back({e->sourceId, e->point});
  }
  next.mesh_ = delaunay(vertices);
  return Admission{std::move(next), nextId_};
}

namespace {

constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

void mix(uint64_t& h, uint64_t value, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) {
    h ^= (value >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
}

} // namespace

uint64_t SourcePool::digest() const {
  uint64_t h = kEmptyPoolDigest;
  for (const auto& e : entries_) {
    mix(h, static_cast<uint64_t>(e->sourceId), 8);
    mix(h, static_cast<uint16_t>(toCentidegrees(e->pose.yaw)), 2);
    mix(h, static_cast<uint16_t>(toCentidegrees(e->pose.pitch)), 2);
    mix(h, static_cast<uint16_t>(toCentidegrees(e->pose.roll)), 2);
  }
  return h;
}

} // namespace faiv
