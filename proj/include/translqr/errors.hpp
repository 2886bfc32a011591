#pragma once

#include <stdexcept>
#include <string>

namespace translqr {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector shapes or an out-of-range step index.
class DimensionError : public Error {
public:
    using Error::Error;
};

// An impulse-response trajectory is too short for the requested construction.
class DataLengthError : public Error {
public:
    using Error::Error;
};

// A matrix that must have full rank does not (to the configured tolerance).
class RankError : public Error {
public:
    using Error::Error;
};

// Cost weights violate Q >= 0 (symmetric PSD) or R > 0 (symmetric PD).
class WeightError : public Error {
public:
    using Error::Error;
};

// An iterative solver exhausted its iteration budget.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// A linear solve failed unexpectedly (guarded but should not occur for R > 0).
class NumericalError : public Error {
public:
    using Error::Error;
};

// A mode set is not closed under complex conjugation, or a reconstruction
// carried an imaginary residue above tolerance.
class ConjugacyError : public Error {
public:
    using Error::Error;
};

// Fewer data samples than the procedure's proven minimum (e.g. T0 < n).
class SampleComplexityError : public Error {
public:
    using Error::Error;
};

// The mode dictionary holds fewer than n entries.
class DictionaryTooSmallError : public Error {
public:
    using Error::Error;
};

// A state-space model failed a controllability/observability rank check.
class ValidationError : public Error {
public:
    using Error::Error;
};

// File system or parse failure (missing file, malformed CSV/JSON).
class IoError : public Error {
public:
    using Error::Error;
};

// Bad or incomplete experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace translqr
