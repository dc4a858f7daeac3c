#pragma once

#include <stdexcept>
#include <string>

namespace economy {

// Malformed input data: bad files, ragged series, degenerate label sets.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inconsistent or corrupted trained model, or a misuse of its online API.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Statistical test called outside its domain (too few pairs, too few methods...).
class StatsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace economy
