#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "economy/errors.hpp"

namespace economy {

// Misclassification costs C_m(yhat|y), indexed [y][yhat], plus the linear
// delay cost alpha * t / T.
struct CostModel {
    std::array<std::array<double, 2>, 2> misclassification{{{0.0, 1.0}, {1.0, 0.0}}};
    double alpha = 0.0;
    std::size_t length = 1;  // T

    CostModel() = default;
    CostModel(double alpha_, std::size_t T) : alpha(alpha_), length(T) { validate(); }

    void validate() const {
        if (length < 1) throw ConfigError("cost model needs T >= 1");
        if (!(alpha >= 0.0)) throw ConfigError("delay slope alpha must be non-negative");
        for (const auto& row : misclassification) {
            for (double c : row) {
                if (!(c >= 0.0)) throw ConfigError("misclassification costs must be non-negative");
            }
        }
    }

    double mis(int y, int yhat) const { return misclassification[y][yhat]; }

    double delay(std::size_t t) const {
        return alpha * static_cast<double>(t) / static_cast<double>(length);
    }

    bool operator==(const CostModel&) const = default;
};

inline double delay_cost(const CostModel& cm, std::size_t t) {
    if (t < 1 || t > cm.length) {
        throw ConfigError("delay cost evaluated at t=" + std::to_string(t) + " outside [1, " +
                          std::to_string(cm.length) + "]");
    }
    return cm.delay(t);
}

} // namespace economy
