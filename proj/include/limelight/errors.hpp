#pragma once

#include <stdexcept>
#include <string>

namespace limelight {

// Error taxonomy shared by the library and the command line tool.
// input_error:     malformed or inconsistent input data / configuration
// compute_error:   a computation is undefined for the given data
// transport_error: network / remote service failure that retries did not fix
//
// The CLI maps these to exit codes 2, 3 and 4 respectively.

class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

class compute_error : public std::runtime_error {
public:
    explicit compute_error(const std::string& msg) : std::runtime_error(msg) {}
};

class transport_error : public std::runtime_error {
public:
    explicit transport_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace limelight
