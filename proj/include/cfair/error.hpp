#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfair {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `row()` is the 1-based data row, 0 when not row specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(row == 0 ? what : what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A domain invariant does not hold (row sums, duplicate ids, bad labels, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// ceil((n+1)(1-alpha)) exceeds the number of calibration scores.
class InsufficientCalibrationError : public Error {
 public:
  InsufficientCalibrationError(std::size_t have, std::size_t required)
      : Error("insufficient calibration data: have " + std::to_string(have) +
              " scores, need at least " + std::to_string(required) + " for this alpha"),
        have_(have),
        required_(required) {}
  std::size_t have() const noexcept { return have_; }
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t have_;
  std::size_t required_;
};

/// A (group, label) slice is empty after filtering.
class DegenerateSliceError : public Error {
 public:
  DegenerateSliceError(int group, int label, const std::string& detail)
      : Error("degenerate slice (g=" + std::to_string(group) + ", y=" + std::to_string(label) +
              "): " + detail),
        group_(group),
        label_(label) {}
  int group() const noexcept { return group_; }
  int label() const noexcept { return label_; }

 private:
  int group_;
  int label_;
};

}  // namespace cfair
