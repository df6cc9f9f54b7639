#include "capspin/orientation_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "capspin/constants.hpp"

namespace capspin {

namespace {

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

bool contains(const std::vector<Eigen::Matrix3d>& set, const Eigen::Matrix3d& r) {
    for (const auto& s : set)
        if ((s - r).cwiseAbs().maxCoeff() < 1e-9) return true;
    return false;
}

std::vector<Eigen::Matrix3d> build_icosahedral() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    // C5 about a vertex axis of the icosahedron and C2 about z generate the
    // full 60-element rotation group
    const Eigen::Matrix3d g1 = axis_angle({0.0, 1.0, phi}, 2.0 * constants::pi / 5.0);
    const Eigen::Matrix3d g2 = axis_angle({0.0, 0.0, 1.0}, constants::pi);
    std::vector<Eigen::Matrix3d> group{Eigen::Matrix3d::Identity()};
    bool grew = true;
    while (grew) {
        grew = false;
        const std::size_t sz = group.size();
        for (std::size_t i = 0; i < sz; ++i) {
            for (const auto* g : {&g1, &g2}) {
                Eigen::Matrix3d cand = (*g) * group[i];
                if (!contains(group, cand)) {
                    group.push_back(cand);
                    grew = true;
                }
            }
        }
    }
    if (group.size() != 60)
        throw std::logic_error("icosahedral closure produced " + std::to_string(group.size()) +
                               " rotations, expected 60");
    // canonical deterministic order
    std::sort(group.begin(), group.end(), [](const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
        for (int i = 0; i < 9; ++i) {
            const double x = a(i / 3, i % 3), y = b(i / 3, i % 3);
            if (std::abs(x - y) > 1e-9) return x < y;
        }
        return false;
    });
    return group;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double unit_double(std::uint64_t& state) {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
}

}  // namespace

const std::vector<Eigen::Matrix3d>& icosahedral_rotations() {
    static const std::vector<Eigen::Matrix3d> group = build_icosahedral();
    return group;
}

Eigen::Matrix3d random_rotation(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = splitmix64(seed ^ splitmix64(index + 1));
    // Shoemake's uniform quaternion method
    const double u1 = unit_double(state);
    const double u2 = unit_double(state);
    const double u3 = unit_double(state);
    const double s1 = std::sqrt(1.0 - u1), s2 = std::sqrt(u1);
    const double a2 = 2.0 * constants::pi * u2, a3 = 2.0 * constants::pi * u3;
    Eigen::Quaterniond q(s2 * std::cos(a3), s1 * std::sin(a2), s1 * std::cos(a2),
                         s2 * std::sin(a3));
    return q.toRotationMatrix();
}

OrientationGrid orientation_grid(GridKind kind, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("orientation grid count must be >= 1");
    OrientationGrid grid;
    grid.kind = kind;
    grid.seed = seed;
    if (kind == GridKind::spherical_design) {
        if (count != 60)
            throw std::invalid_argument(
                "spherical-design grid supports count 60 (icosahedral rotation group)");
        grid.rotations = icosahedral_rotations();
    } else {
        grid.rotations.reserve(count);
        for (int i = 0; i < count; ++i)
            grid.rotations.push_back(random_rotation(seed, static_cast<std::uint64_t>(i)));
    }
    return grid;
}

}  // namespace capspin
