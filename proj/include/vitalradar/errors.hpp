// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vitalradar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// No range bin stands out from the rest; `score` is max/median variance.
class AmbiguousDetection : public Error {
 public:
  AmbiguousDetection(std::size_t best_bin, double score)
      : Error("ambiguous subject detection: best bin " + std::to_string(best_bin) +
              " scored " + std::to_string(score)),
        best_bin(best_bin),
        score(score) {}
  std::size_t best_bin;
  double score;
};

// N-th difference of the wrapped phase exceeded the configured bound.
class BoundViolation : public Error {
 public:
  BoundViolation(std::size_t index, double magnitude)
      : Error("higher-order difference bound violated at sample " + std::to_string(index)),
        index(index),
        magnitude(magnitude) {}
  std::size_t index;
  double magnitude;
};

class NonColaWindow : public Error {
 public:
  using Error::Error;
};

class UnrecoverableSegment : public Error {
 public:
  UnrecoverableSegment(double start_s, double end_s)
      : Error("corrupted segment too long to interpolate: [" + std::to_string(start_s) + ", " +
              std::to_string(end_s) + "] s"),
        start_s(start_s),
        end_s(end_s) {}
  double start_s;
  double end_s;
};

class EmptyBand : public Error {
 public:
  using Error::Error;
};

class NoCandidates : public Error {
 public:
  using Error::Error;
};

class SignalTooShort : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key(std::move(key)) {}
  std::string key;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MisalignedInput : public Error {
 public:
  using Error::Error;
};

}  // namespace vitalradar
