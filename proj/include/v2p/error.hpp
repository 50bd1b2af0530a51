#pragma once

#include <stdexcept>
#include <string>

namespace v2p {

/// Malformed or unreadable input data (files, records, corpora).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-finite loss, degenerate Gaussian, etc.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace v2p
