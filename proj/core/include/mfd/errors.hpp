#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// geometry
class QueryNotOnBoundary : public Error {
public:
  using Error::Error;
};
class ProjectionDiverged : public Error {
public:
  using Error::Error;
};

// pointcloud
class GenerationStalled : public Error {
public:
  using Error::Error;
};
class NeighborhoodExhausted : public Error {
public:
  using Error::Error;
};
class CloudFormatError : public Error {
public:
  using Error::Error;
};

// stencil
class InsufficientNeighbors : public Error {
public:
  using Error::Error;
};
class SingularConstraints : public Error {
public:
  using Error::Error;
};
class SizeMismatch : public Error {
public:
  using Error::Error;
};

/// A stencil row could not be computed even after enlarging the neighborhood.
class StencilFailure : public Error {
public:
  StencilFailure(std::size_t point, const std::string& what)
    : Error("stencil failure at point " + std::to_string(point) + ": " + what)
    , point_(point)
  {}
  std::size_t point() const noexcept { return point_; }

private:
  std::size_t point_;
};

class ExtrapolationFailure : public Error {
public:
  ExtrapolationFailure(std::size_t point, const std::string& what)
    : Error("extrapolation failure at point " + std::to_string(point) + ": " + what)
    , point_(point)
  {}
  std::size_t point() const noexcept { return point_; }

private:
  std::size_t point_;
};

// linsys
class SingularMatrix : public Error {
public:
  using Error::Error;
};

// verify
class DegenerateFit : public Error {
public:
  using Error::Error;
};

} // namespace mfd
