#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qcoex {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A physical-domain precondition was violated (negative power, NaN, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Interpolation or lookup outside the tabulated/covered range.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

// A sweep covers the requested range but the requested feature
// (threshold crossing, target BER, ...) never occurs inside it.
class UncoveredRangeError : public Error {
public:
    using Error::Error;
};

// A calibration target cannot be met by the model; carries the step name.
class InfeasibleCalibration : public Error {
public:
    InfeasibleCalibration(std::string step, const std::string& what)
        : Error(what), step_(std::move(step)) {}

    const std::string& step() const noexcept { return step_; }

private:
    std::string step_;
};

// Configuration problems: unreadable file, unknown key, invalid value.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Not enough detection events for a statistical estimate; carries the count.
class InsufficientStatistics : public Error {
public:
    InsufficientStatistics(const std::string& what, std::size_t tag_count)
        : Error(what), tag_count_(tag_count) {}

    std::size_t tag_count() const noexcept { return tag_count_; }

private:
    std::size_t tag_count_;
};

// Frame alignment found no shift whose score clears the floor.
class SyncFailure : public Error {
public:
    SyncFailure(const std::string& what, double best_score)
        : Error(what), best_score_(best_score) {}

    double best_score() const noexcept { return best_score_; }

private:
    double best_score_;
};

// A QBER estimate was requested but no sifted events exist.
class UndefinedQber : public Error {
public:
    using Error::Error;
};

} // namespace qcoex
