#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace sgvi {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense node id inside one scene graph: objects first, then predicates,
/// then globals.
using NodeId = Index;

}  // namespace sgvi
