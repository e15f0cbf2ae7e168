#pragma once

#include <stdexcept>
#include <string>

namespace gaitscore {

// Base for everything the toolkit throws on purpose. The CLI maps the
// subclasses below onto its documented exit codes; anything else is a bug.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/manifest shape disagreements. Message names the offending dimension.
struct ShapeError : Error {
    using Error::Error;
};

// Filesystem problems: unreadable, unwritable, truncated. Exit code 2.
struct IoError : Error {
    using Error::Error;
};

// Not enough samples for the requested operation. Exit code 3.
struct InsufficientDataError : Error {
    using Error::Error;
};

// A required artifact (checkpoint, manifest) is absent. Exit code 4.
struct MissingArtifactError : Error {
    using Error::Error;
};

// Malformed or semantically unusable dataset (bad frame, single-class
// training set, missing labels). Exit code 5.
struct InvalidDatasetError : Error {
    using Error::Error;
};

// Bad configuration or command-line usage. Exit code 1.
struct ConfigError : Error {
    using Error::Error;
};

// Non-finite loss/gradient or degenerate embedding. Aborts the step.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace gaitscore
