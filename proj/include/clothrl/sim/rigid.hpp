#pragma once

#include <optional>
#include <stdexcept>

#include "clothrl/core/vec3.hpp"

namespace clothrl::sim {

struct TablePlane {
  double height = 0.0;    // m, z of the surface
  double friction = 0.6;  // Coulomb coefficient
};

/// Axis-aligned box, used for the hanger bar.
struct HangerBox {
  Vec3 center;
  Vec3 half_extents;
};

/// Visual/logic-only mark on the table; the success predicate measures
/// distance to the line y = y_mark (along x) at table height.
struct TapeMark {
  double y = 0.0;
  double x_min = -0.3, x_max = 0.3;  // rendered extent
};

struct RigidSet {
  TablePlane table;
  std::optional<HangerBox> hanger;
  std::optional<TapeMark> tape;

  void validate() const {
    if (hanger) {
      if (hanger->half_extents.x <= 0.0 || hanger->half_extents.y <= 0.0 ||
          hanger->half_extents.z <= 0.0)
        throw std::invalid_argument("rigid: hanger extents must be positive");
      if (hanger->center.z - hanger->half_extents.z < table.height - 1e-12)
        throw std::invalid_argument("rigid: hanger must rest on or above the table plane");
    }
  }
};

}  // namespace clothrl::sim
