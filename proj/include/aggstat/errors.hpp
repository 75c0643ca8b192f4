#ifndef AGGSTAT_ERRORS_HPP
#define AGGSTAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aggstat {

// Thrown when a channel design cannot identify the requested parameters
// (singular or rank-deficient count matrix, ill-conditioned information
// matrix). The CLI maps this to exit code 3.
class NonIdentifiableError : public std::runtime_error {
public:
    explicit NonIdentifiableError(const std::string& what)
        : std::runtime_error(what) {}
};

// Thrown on malformed configuration input (unreadable file, schema
// violation, inconsistent dimensions). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what)
        : std::runtime_error(what) {}
};

} // namespace aggstat

#endif // AGGSTAT_ERRORS_HPP
