#pragma once

#include <stdexcept>
#include <string>

namespace seqctl {

/// Invalid configuration, schema violation, or failed model validation.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An observation with zero density under the reference hypothesis was applied.
struct AbsContinuityError : std::runtime_error {
    explicit AbsContinuityError(const std::string& what) : std::runtime_error(what) {}
};

/// Enumeration exceeded its work budget; Monte Carlo evaluation is the fallback.
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical self-check failed (e.g. non-monotone value iterates).
struct InternalError : std::runtime_error {
    explicit InternalError(const std::string& what) : std::runtime_error(what) {}
};

/// A persisted artifact does not match the model/loss it is applied to.
struct FingerprintError : std::runtime_error {
    explicit FingerprintError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace seqctl
