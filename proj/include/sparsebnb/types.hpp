#ifndef SPARSEBNB_TYPES_HPP_
#define SPARSEBNB_TYPES_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsebnb {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
// One row per BnB node. Row-major so that a node's iterate is contiguous.
template <typename Scalar>
using BatchMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BatchMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using IndexSet = std::vector<Index>;

class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
    using Error::Error;
};

class InfeasibleFixation : public Error {
 public:
    using Error::Error;
};

class NumericalFailure : public Error {
 public:
    using Error::Error;
};

class NoFractional : public Error {
 public:
    using Error::Error;
};

class TooLarge : public Error {
 public:
    using Error::Error;
};

class InvalidSpec : public Error {
 public:
    using Error::Error;
};

class ParseError : public Error {
 public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what), row_(row), column_(column) {}
    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

 private:
    std::size_t row_;
    std::size_t column_;
};

class DimensionMismatch : public Error {
 public:
    using Error::Error;
};

class IoError : public Error {
 public:
    using Error::Error;
};

}  // namespace sparsebnb

#endif  // SPARSEBNB_TYPES_HPP_
