#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pcd {

// Invalid parameter record (odd d, base <= 1, B' >= B, gamma > |V|, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Vector / schedule / grid length mismatch.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Not enough samples to compute a statistic (empty outcome set, too few
// envelope points for a fit, ...).
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

// Non-fatal diagnostics (e.g. alpha >= ln 2) go through this hook. The
// default handler writes "warning: <msg>" to stderr. Returns the previous
// handler so callers can restore it.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace pcd
