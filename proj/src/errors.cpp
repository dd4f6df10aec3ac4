#include "jpose/errors.hpp"

#include <fmt/format.h>

namespace jpose {

SingularLog::SingularLog(double angle)
    : Error(fmt::format("logarithm is singular at rotation angle {:.17g}", angle)), angle_(angle) {}

GimbalLock::GimbalLock(double pitch)
    : Error(fmt::format("Euler parameterization at gimbal lock (pitch {:.17g})", pitch)),
      pitch_(pitch) {}

SigmaPointSingularity::SigmaPointSingularity(std::size_t point, std::size_t pose, double angle)
    : Error(fmt::format("sigma point {} (pose block {}) hits a logarithm singularity at angle {:.17g}",
                        point, pose, angle)),
      point_(point),
      pose_(pose) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error(fmt::format("line {}: {}", line, what)), line_(line) {}

InvalidSpec::InvalidSpec(const std::string& what, long failing_pivot)
    : Error(fmt::format("{} (failing pivot {})", what, failing_pivot)),
      failing_pivot_(failing_pivot) {}

}  // namespace jpose
