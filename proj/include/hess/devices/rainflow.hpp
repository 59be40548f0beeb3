#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace hess {

struct Cycle {
    double count;   // 1 for a closed cycle, 0.5 for a residual half cycle
    double range;   // depth of discharge
    double mean;    // mean level
    std::size_t first, last;  // sample span
};

struct TurningPoint {
    double value;
    std::size_t index;
};

// Local extrema including both endpoints; plateaus collapse onto their first sample.
inline std::vector<TurningPoint> turning_points(const std::vector<double>& x) {
    std::vector<TurningPoint> tp;
    if (x.empty()) return tp;
    tp.push_back({x[0], 0});
    int dir = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        double d = x[i] - tp.back().value;
        if (d == 0.0) continue;
        int s = d > 0.0 ? 1 : -1;
        if (s == dir)
            tp.back() = {x[i], i};
        else
            tp.push_back({x[i], i});
        dir = s;
    }
    return tp;
}

// Four-point rainflow count over the extrema of a trajectory.
inline std::vector<Cycle> rainflow(const std::vector<double>& x) {
    std::vector<Cycle> out;
    std::vector<TurningPoint> stack;
    auto make = [](double count, const TurningPoint& a, const TurningPoint& b) {
        return Cycle{count, std::abs(a.value - b.value), 0.5 * (a.value + b.value),
                     std::min(a.index, b.index), std::max(a.index, b.index)};
    };
    for (const auto& p : turning_points(x)) {
        stack.push_back(p);
        while (stack.size() >= 4) {
            const std::size_t n = stack.size();
            double r1 = std::abs(stack[n - 3].value - stack[n - 4].value);
            double r2 = std::abs(stack[n - 2].value - stack[n - 3].value);
            double r3 = std::abs(stack[n - 1].value - stack[n - 2].value);
            if (r2 <= r1 && r2 <= r3) {
                out.push_back(make(1.0, stack[n - 3], stack[n - 2]));
                stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(n - 3),
                            stack.begin() + static_cast<std::ptrdiff_t>(n - 1));
            } else {
                break;
            }
        }
    }
    for (std::size_t i = 1; i < stack.size(); ++i) out.push_back(make(0.5, stack[i - 1], stack[i]));
    return out;
}

}  // namespace hess
