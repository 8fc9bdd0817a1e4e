#ifndef DANE_COMMON_HPP
#define DANE_COMMON_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace dane {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Samples are stored one per row; row-major keeps per-sample access contiguous.
using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// Contract violation on a library call (dimension mismatch, bad argument).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid or incomplete run/experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  explicit ParseError(const std::string& what)
      : std::runtime_error(what), line_(0) {}
  long line() const { return line_; }

 private:
  long line_;
};

// A numeric routine failed to reach its tolerance (CG stagnation, overflow).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative estimator ran out of iterations; carries its best estimate.
class EstimationError : public std::runtime_error {
 public:
  EstimationError(const std::string& what, double best_estimate)
      : std::runtime_error(what), best_estimate_(best_estimate) {}
  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

}  // namespace dane

#endif  // DANE_COMMON_HPP
