#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace stagcn {

/// Dense row-major storage keeps CSV rows and window rows contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr const char* kArtifactVersion = "stagcn 1.0.0";

/// Malformed input data, bad files or invalid parameter values.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values encountered while training.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stagcn
