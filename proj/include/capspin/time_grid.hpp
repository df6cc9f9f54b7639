#pragma once

#include <string>
#include <vector>

namespace capspin {

// Strictly increasing sample times starting at 0.
struct TimeGrid {
    enum class Scheme { linear, piecewise };
    std::vector<double> points;
    Scheme scheme = Scheme::piecewise;

    std::size_t size() const { return points.size(); }
    void validate() const;  // throws on empty/non-increasing/nonzero start

    // 0..t_end with step dt (t_end included when it lands on the grid).
    static TimeGrid linear(double t_end, double dt);
    // Dense-then-coarse default: 0-2 s at 1 ms, then to 1000 s at 50 ms.
    static TimeGrid default_piecewise(double t_end = 1000.0);
    // Compact description used in output headers, e.g.
    // "piecewise:0:2:0.001,2:1000:0.05".
    std::string describe() const;
};

}  // namespace capspin
