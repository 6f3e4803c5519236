#pragma once

#include <stdexcept>
#include <string>

namespace emdloss {

// Bad arguments, shape mismatches, out-of-range labels, invalid configs.
class invalid_input_error : public std::runtime_error {
public:
    explicit invalid_input_error(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf detected where a finite value is required (scaling blow-up, NaN loss).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Not enough data to produce a well-defined result (empty class, too few
// distinct scores for the requested bins, empty metric input).
class insufficient_data_error : public std::runtime_error {
public:
    explicit insufficient_data_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file content; message carries the line number where known.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace emdloss
