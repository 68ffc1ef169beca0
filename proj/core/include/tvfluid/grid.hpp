#pragma once

#include <cmath>
#include <cstddef>

#include "tvfluid/errors.hpp"

namespace tvfluid {

/// Uniform time grid t_i = i*h covering [0, T].
class Grid {
public:
    Grid(double step, double horizon) : h_(step), horizon_(horizon) {
        if (!(step > 0.0) || !(horizon >= step))
            throw ConfigError("grid: require 0 < h <= T");
        count_ = static_cast<std::size_t>(std::llround(horizon / step)) + 1;
        if (std::abs(static_cast<double>(count_ - 1) * step - horizon) > 1e-9 * step)
            throw ConfigError("grid: T must be an integer multiple of h");
    }

    double step() const { return h_; }
    double horizon() const { return horizon_; }
    std::size_t nodes() const { return count_; }
    double time(std::size_t i) const { return static_cast<double>(i) * h_; }

private:
    double h_;
    double horizon_;
    std::size_t count_;
};

}  // namespace tvfluid
