#ifndef PRIORCLEAN_ERROR_HPP_
#define PRIORCLEAN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace priorclean {

// Base class for every error raised by the library. `user_error()` separates
// bad inputs (exit code 1 in the CLI) from internal failures (exit code 2).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, bool user_error = true)
      : std::runtime_error(what), user_error_(user_error) {}
  bool user_error() const { return user_error_; }

 private:
  bool user_error_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what) : Error(what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// Raised by classifiers that cannot be fit (e.g. a single training class).
class DegenerateClassifierError : public Error {
 public:
  explicit DegenerateClassifierError(const std::string& what) : Error(what) {}
};

class EvaluatorError : public Error {
 public:
  explicit EvaluatorError(const std::string& what) : Error(what, false) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, false) {}
};

}  // namespace priorclean

#endif  // PRIORCLEAN_ERROR_HPP_
