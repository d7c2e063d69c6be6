#pragma once

#include <stdexcept>
#include <string>

namespace uniest {

// std::invalid_argument covers malformed inputs; the types below cover the
// remaining failure classes the library reports.

/// An operation was requested on an object of the wrong kind, e.g. adapting
/// a data-independent grid.
class InvalidOperation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A non-finite value appeared where a finite one is required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment configuration is inconsistent. `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace uniest
