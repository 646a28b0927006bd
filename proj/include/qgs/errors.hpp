#pragma once

#include <stdexcept>
#include <string>

namespace qgs {

// Error taxonomy shared by the library and the command line driver.
// ConfigError   -> invalid user input (bad graph spec, bad options); driver exit code 2.
// NumericError  -> a numerical guarantee could not be met (root count mismatch after
//                  refinement, non-convergent Newton polish, realness violation); exit code 3.
// IoError       -> filesystem/serialization trouble; exit code 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qgs
