#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sfdm {

/// Failure categories. The CLI maps each category onto a process exit code.
enum class ErrorCategory {
    config,     ///< malformed input document or parameters
    numerical,  ///< a solver could not produce a result
    validity,   ///< result exists but lies outside its domain of validity
};

/// Single exception type for the library. `name()` carries the module-level
/// error name (e.g. "NoConvergence", "RootLost") so callers can report it.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string name, const std::string& what)
        : std::runtime_error(what), category_(category), name_(std::move(name)) {}

    ErrorCategory category() const noexcept { return category_; }
    const std::string& name() const noexcept { return name_; }

private:
    ErrorCategory category_;
    std::string name_;
};

inline Error config_error(std::string_view what) {
    return Error(ErrorCategory::config, "ConfigError", std::string(what));
}

inline Error numerical_error(std::string name, std::string_view what) {
    return Error(ErrorCategory::numerical, std::move(name), std::string(what));
}

inline Error validity_error(std::string name, std::string_view what) {
    return Error(ErrorCategory::validity, std::move(name), std::string(what));
}

inline Error precondition_error(std::string_view what) {
    return Error(ErrorCategory::numerical, "PreconditionViolation", std::string(what));
}

}  // namespace sfdm
