#pragma once

#include <stdexcept>
#include <string>

namespace gadlab {

// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorKind { Usage = 2, Data = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, long line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

// Raised when a perturbation op does not match the graph it is applied to.
class InvalidOpError : public DataError {
 public:
  InvalidOpError(long long u, long long v, const std::string& why)
      : DataError("InvalidOp(" + std::to_string(u) + "," + std::to_string(v) + "): " + why),
        u_(u), v_(v) {}

  long long u() const noexcept { return u_; }
  long long v() const noexcept { return v_; }

 private:
  long long u_, v_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class SingularDesignError : public NumericalError {
 public:
  explicit SingularDesignError(const std::string& what) : NumericalError(what) {}
};

}  // namespace gadlab
