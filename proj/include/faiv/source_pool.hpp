#pragma once

#include "faiv/geometry.hpp"
#include "faiv/image.hpp"
#include "faiv/landmarks.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace faiv {

inline constexpr double kDefaultPoolThreshold = 10.0; // degrees

using SourceId = int64_t;

struct SourceEntry {
  SourceId sourceId = 0;
  FacePatch faceCrop;
  /// Landmarks of the stored frame in that frame's coordinates. Empty on the
  /// encoder's shadow replica.
  Landmarks landmarks;
  EulerPose pose;
  AngularPoint point;
};

struct PlanTerm {
  SourceId sourceId;
  double weight;
};

struct InteriorPlan {
  std::array<PlanTerm, 3> terms;
};

struct SingleSourcePlan {
  SourceId sourceId;
  double weight = 1.0;
};

struct NeedNewSource {};

using ReenactPlan = std::variant<InteriorPlan, SingleSourcePlan, NeedNewSource>;

struct Admission;

/// Session-scoped set of source faces with a Delaunay mesh over their
/// angular points. Values are immutable; addSource returns a new pool and
/// entries are shared between versions.
class SourcePool {
public:
  explicit SourcePool(double threshold = kDefaultPoolThreshold);

  double threshold() const noexcept { return threshold_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const SourceEntry& entry(std::size_t index) const { return *entries_.at(index); }
  /// Throws InvalidArgument for unknown ids.
  const SourceEntry& find(SourceId id) const;
  const TriMesh& mesh() const noexcept { return mesh_; }
  SourceId nextSourceId() const noexcept { return nextId_; }

  /// Smallest angular distance from `p` to any entry; +inf when empty.
  double nearestDistance(const AngularPoint& p) const;

  ReenactPlan classify(const EulerPose& pose) const;

  /// nullopt when the pose lies closer than the threshold to an entry.
  std::optional<Admission> addSource(FacePatch faceCrop, Landmarks landmarks,
                                     const EulerPose& pose) const;

  uint64_t digest() const;

private:
  double threshold_;
  SourceId nextId_ = 0;
  std::vector<std::shared_ptr<const SourceEntry>> entries_;
  TriMesh mesh_;
};

struct Admission {
  SourcePool pool;
  SourceId sourceId;
};

/// FNV-1a offset basis; the digest of every empty pool.
inline constexpr uint64_t kEmptyPoolDigest = 0xcbf29ce484222325ULL;

} // namespace faiv
