#pragma once

#include <stdexcept>
#include <string>

namespace sapflow {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (negative potential, negative flow target, bad fraction).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid parameters at object construction (non-positive k_max, p, nu,
/// empty chain, bad solver configuration).
class ConstructionError : public Error {
public:
  using Error::Error;
};

/// Evaluation at a point where the requested quantity is singular
/// (Weibull derivative at psi = 0 with nu < 1).
class SingularityError : public Error {
public:
  using Error::Error;
};

/// A solver was handed a curve that fails the unimodality conditions.
class CurveValidityError : public Error {
public:
  using Error::Error;
};

/// A segment has zero conductance at its base potential and cannot carry
/// positive flow.
class NoPositiveFlowError : public Error {
public:
  using Error::Error;
};

/// A requested flow exceeds the capacity of a segment.
class InfeasibleTargetError : public Error {
public:
  using Error::Error;
};

/// A root scan found no sign change where one was required.
class NoRootFoundError : public Error {
public:
  using Error::Error;
};

/// No segment of a solution is at capacity within tolerance.
class NoStationarySegmentError : public Error {
public:
  using Error::Error;
};

/// Chain size outside the supported range of an operation.
class UnsupportedChainSizeError : public Error {
public:
  using Error::Error;
};

/// Malformed or invalid configuration document.
class ParseError : public Error {
public:
  using Error::Error;
};

}  // namespace sapflow
