// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace backdrop {

/// Bad arguments or violated preconditions (shape mismatches, out-of-range
/// parameters, malformed config files).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite values encountered while sampling or optimizing. Carries the
/// timestep (sampling) or iteration (attack) where the failure surfaced.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, int where)
        : std::runtime_error(what + " (at step " + std::to_string(where) + ")"), where_(where) {}

    int where() const { return where_; }

private:
    int where_ = -1;
};

/// A mask or caption provider failed on an input image.
class ProviderError : public std::runtime_error {
public:
    explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

/// Image has no usable foreground/background separation (empty or full mask).
class UnsupportedImageError : public ProviderError {
public:
    explicit UnsupportedImageError(const std::string& what) : ProviderError(what) {}
};

/// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem/serialization failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace backdrop
