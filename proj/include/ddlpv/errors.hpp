#pragma once

#include <stdexcept>
#include <string>

namespace ddlpv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimMismatch : public Error {
 public:
  using Error::Error;
};

class SingularLft : public Error {
 public:
  using Error::Error;
};

class IllPosedLft : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, int rank, int required)
      : Error(what), rank_(rank), required_(required) {}
  int rank() const { return rank_; }
  int required() const { return required_; }

 private:
  int rank_;
  int required_;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class TooManyVertices : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class WeightNotPsd : public Error {
 public:
  using Error::Error;
};

class SingularGram : public Error {
 public:
  using Error::Error;
};

class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

class IllConditionedP : public Error {
 public:
  using Error::Error;
};

class UnstableAtGridPoint : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace ddlpv
