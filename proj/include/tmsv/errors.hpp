#pragma once

#include <stdexcept>
#include <string>

namespace tmsv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Malformed or inconsistent user input (files, flags, shapes).
class InputError : public Error
{
public:
  using Error::Error;
};

/// A series or grid could not be truncated within the configured cap.
class TruncationError : public Error
{
public:
  using Error::Error;
};

/// A witness is undefined for the supplied distribution (e.g. zero denominator).
class UndefinedWitnessError : public Error
{
public:
  using Error::Error;
};

/// The small-instance derivative oracle refuses instances beyond its caps.
class OracleCapError : public Error
{
public:
  using Error::Error;
};

/// Internal numerical failure (failed residual check, non-finite result).
class NumericError : public Error
{
public:
  using Error::Error;
};

} // namespace tmsv
