#pragma once

#include <stdexcept>
#include <string>

namespace pmafl {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or dimension disagreement between tensors.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid argument value (bad op kind, out-of-range parameter, non-permutation, ...).
struct ValueError : Error {
    using Error::Error;
};

// File reading/writing, including structured checkpoint and IDX decode failures.
struct IoError : Error {
    using Error::Error;
};

// Configuration file problems; message carries the offending key path.
struct ConfigError : Error {
    using Error::Error;
};

// Loss went non-finite during training; coordinates identify where.
struct DivergenceError : Error {
    DivergenceError(const std::string& msg, int epoch, int batch)
        : Error(msg), epoch(epoch), batch(batch) {}
    int epoch;
    int batch;
};

// Id-addressed teacher lookup missed while the cache is authoritative.
struct CacheMissError : Error {
    using Error::Error;
};

}  // namespace pmafl
