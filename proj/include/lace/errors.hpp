#pragma once

#include <stdexcept>
#include <string>

namespace lace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class CapacityExhausted : public Error {
 public:
  using Error::Error;
};

class InvalidAblation : public Error {
 public:
  using Error::Error;
};

class NoBaseline : public Error {
 public:
  using Error::Error;
};

class InvalidLoss : public Error {
 public:
  using Error::Error;
};

class ScheduleExhausted : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lace
