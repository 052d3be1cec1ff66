#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chernet {

/// Invalid experiment or protocol configuration (bad key, zero capability, ...).
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a test runs past its step cap, which signals a model whose
/// hypotheses the test cannot separate. Carries the seed for replay.
class TimeoutError : public std::runtime_error {
public:
    TimeoutError(const std::string& what, std::uint64_t seed)
        : std::runtime_error(what), seed_(seed) {}
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace chernet
