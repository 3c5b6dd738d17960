#pragma once

#include <stdexcept>
#include <string>

namespace enkbf {

// Invalid arguments / dimension mismatches / unsupported model combinations.
class invalid_argument_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Config parsed but failed validation; carries the full error list.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(std::string joined)
        : std::runtime_error(std::move(joined)) {}
};

// A run produced non-finite state (or a particle filter's weights collapsed).
class divergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// I/O failure while reading configs or writing artifacts.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace enkbf
