#include "capspin/time_grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace capspin {

void TimeGrid::validate() const {
    if (points.empty()) throw std::invalid_argument("time grid is empty");
    if (points.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i] > points[i - 1]))
            throw std::invalid_argument("time grid must be strictly increasing");
}

TimeGrid TimeGrid::linear(double t_end, double dt) {
    if (!(t_end > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("linear grid requires positive span and step");
    TimeGrid g;
    g.scheme = Scheme::linear;
    const auto count = static_cast<std::size_t>(std::floor(t_end / dt + 0.5)) + 1;
    g.points.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (t > t_end * (1.0 + 1e-12)) break;
        g.points.push_back(t);
    }
    g.validate();
    return g;
}

TimeGrid TimeGrid::default_piecewise(double t_end) {
    TimeGrid g;
    g.scheme = Scheme::piecewise;
    const double dense_end = 2.0, dense_dt = 1e-3, coarse_dt = 5e-2;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dense_dt;
        if (t >= dense_end || t > t_end) break;
        g.points.push_back(t);
    }
    if (t_end >= dense_end) {
        for (std::size_t k = 0;; ++k) {
            const double t = dense_end + static_cast<double>(k) * coarse_dt;
            if (t > t_end * (1.0 + 1e-12)) break;
            g.points.push_back(t);
        }
    }
    g.validate();
    return g;
}

std::string TimeGrid::describe() const {
    std::ostringstream os;
    if (points.empty()) return "empty";
    if (scheme == Scheme::linear) {
        os << "linear:0:" << points.back() << ":" << (points.size() > 1 ? points[1] : 0.0);
    } else {
        os << "piecewise:0:2:0.001,2:" << points.back() << ":0.05";
    }
    return os.str();
}

}  // namespace capspin
