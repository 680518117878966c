#pragma once

#include <stdexcept>
#include <string>

namespace tdrg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed configs, out-of-range sites, inconsistent labels.
struct ConfigError : Error {
    using Error::Error;
};

// Integration or evaluation breakdown. `time` is the physical time where it happened.
struct NumericError : Error {
    double time = 0.0;
    NumericError(const std::string& what, double t) : Error(what), time(t) {}
    explicit NumericError(const std::string& what) : Error(what) {}
};

// Closed forms refused at parameter poles; callers should fall back to numerics.
struct ResonantNuError : Error {
    double nu = 0.0;
    ResonantNuError(const std::string& what, double nu_value) : Error(what), nu(nu_value) {}
};

// Special-function pole or an argument outside the certified regimes.
struct DomainError : Error {
    using Error::Error;
};

}  // namespace tdrg
