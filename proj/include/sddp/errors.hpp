#pragma once

#include <stdexcept>
#include <string>

namespace sddp {

// Malformed input data (duplicate names, NaN coefficients, bad schema).
// Distinct from an infeasible-but-well-formed program.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A limit or option the caller configured was exceeded or mismatched.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A solve that the algorithm requires to succeed did not (e.g. an infeasible
// stage subproblem, which violates relatively complete recourse).
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sddp
