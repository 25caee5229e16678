#pragma once

#include <stdexcept>
#include <string>

namespace facetflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGeometry : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidParam : Error { using Error::Error; };
struct Degenerate : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct NotConverged : Error { using Error::Error; };
struct NonMonotone : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };
struct InvalidInit : Error { using Error::Error; };
struct InvalidFacet : Error { using Error::Error; };
struct DomainMismatch : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

} // namespace facetflow
