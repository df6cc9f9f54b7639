#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace capspin {

enum class GridKind { spherical_design, random_uniform };

// A set of rotations approximating (or, for the design, integrating exactly up
// to band limit 5) the Haar-uniform average over SO(3).
struct OrientationGrid {
    GridKind kind = GridKind::spherical_design;
    std::vector<Eigen::Matrix3d> rotations;
    std::uint64_t seed = 0;

    std::size_t size() const { return rotations.size(); }
};

// kind == spherical_design: the 60-element icosahedral rotation group (count
// must be 60), an exact quadrature for integrands of spherical band limit <= 5.
// kind == random_uniform: `count` seed-deterministic Haar-random rotations.
OrientationGrid orientation_grid(GridKind kind, int count, std::uint64_t seed = 0);

// The icosahedral rotation group, deterministic canonical order.
const std::vector<Eigen::Matrix3d>& icosahedral_rotations();

// Seed-deterministic Haar-random rotation (Shoemake quaternion method).
Eigen::Matrix3d random_rotation(std::uint64_t seed, std::uint64_t index);

inline constexpr int default_orientation_count = 60;

}  // namespace capspin
