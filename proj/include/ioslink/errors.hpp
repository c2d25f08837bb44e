#pragma once

#include <stdexcept>
#include <string>

namespace ioslink {

/// Configuration document could not be parsed or contains unknown keys.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A scene parameter violates its positivity/range requirement.
struct NonPositiveParam : ConfigError {
    explicit NonPositiveParam(const std::string& field, const std::string& detail)
        : ConfigError("parameter '" + field + "' " + detail), field(field) {}
    std::string field;
};

/// Mission endpoints are not reachable within the slot budget.
struct InfeasibleMission : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A waypoint sits on the surface plane and could not be nudged off it.
struct DegenerateX : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An exponential term left the representable range; the scene is mis-scaled.
struct NumericalOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exhaustive search was requested on an instance too large to enumerate.
struct InstanceTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The Newton system lost positive definiteness or the line search stalled.
struct IllConditioned : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ioslink
