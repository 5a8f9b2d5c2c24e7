#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <unordered_set>
#include <vector>

#include "cbricks/error.hpp"
#include "cbricks/transient.hpp"

namespace cbricks::circuit {

struct Point2 {
    double x;
    double y;
    bool operator==(const Point2&) const = default;
};

/// Phase portrait (v(t), v(t - lag)) of one recorded channel.
inline std::vector<Point2> delay_embed(const TraceRecord& trace, std::size_t channel, std::size_t lag) {
    require(channel < trace.nodes.size(), "channel out of range");
    require(lag >= 1 && lag < trace.size(), "lag must satisfy 1 <= lag < sample count");
    std::vector<Point2> points;
    points.reserve(trace.size() - lag);
    const auto col = static_cast<Eigen::Index>(channel);
    for (std::size_t i = lag; i < trace.size(); ++i) {
        points.push_back({trace.samples(static_cast<Eigen::Index>(i), col),
                          trace.samples(static_cast<Eigen::Index>(i - lag), col)});
    }
    return points;
}

/// Number of occupied cells when the points' bounding box is divided into a
/// resolution x resolution grid. A degenerate axis collapses to one column.
inline std::size_t portrait_coverage(std::span<const Point2> points, std::size_t resolution) {
    require(!points.empty(), "portrait needs at least one point");
    require(resolution >= 2, "grid resolution must be at least 2");
    auto [xmin, xmax] = std::minmax_element(points.begin(), points.end(),
                                            [](auto a, auto b) { return a.x < b.x; });
    auto [ymin, ymax] = std::minmax_element(points.begin(), points.end(),
                                            [](auto a, auto b) { return a.y < b.y; });
    const double x0 = xmin->x, xr = xmax->x - xmin->x;
    const double y0 = ymin->y, yr = ymax->y - ymin->y;
    const auto res = static_cast<double>(resolution);
    auto cell = [&](double v, double lo, double range) -> std::size_t {
        if (!(range > 0)) return 0;
        const auto i = static_cast<std::size_t>(std::floor((v - lo) / range * res));
        return std::min(i, resolution - 1);
    };
    std::unordered_set<std::size_t> occupied;
    for (const auto& p : points) occupied.insert(cell(p.x, x0, xr) * resolution + cell(p.y, y0, yr));
    return occupied.size();
}

}  // namespace cbricks::circuit
