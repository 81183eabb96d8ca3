#pragma once

#include "holescope/scenario.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace holescope {

/// Header is recognizably wrong: bad magic, inconsistent dimensions, or
/// trailing bytes past the declared payload.
class DatasetFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Magic matched but the format version is unsupported.
class DatasetVersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File ends before the declared payload/blocks are complete.
class DatasetTruncatedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes the CHDS binary container (see docs/format.md). Channel entries are
/// stored as interleaved little-endian float32, so save/load round trips are
/// bit-exact. Per-sample path lists are in-memory only and are not persisted.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

/// Loads a CHDS file, restoring sample ids from list position. Throws the
/// error classes above for malformed, wrong-version, or truncated input.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace holescope
