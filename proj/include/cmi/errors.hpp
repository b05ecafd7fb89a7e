#pragma once

#include <stdexcept>
#include <string>

namespace cmi {

// Error taxonomy shared by the library and the CLI exit codes.
struct invalid_config : std::runtime_error {
  explicit invalid_config(const std::string& msg) : std::runtime_error(msg) {}
};

struct invalid_data : std::runtime_error {
  explicit invalid_data(const std::string& msg) : std::runtime_error(msg) {}
};

// Zero sample variance of a covariate or index; signals a constant or
// collinear design rather than silently scaling by 1.
struct degenerate_scale : invalid_data {
  explicit degenerate_scale(const std::string& msg) : invalid_data(msg) {}
};

// Every grid point was dropped, or an empty profile reached the statistic.
struct degenerate_profile : std::runtime_error {
  explicit degenerate_profile(const std::string& msg) : std::runtime_error(msg) {}
};

struct timeout_error : std::runtime_error {
  explicit timeout_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cmi
