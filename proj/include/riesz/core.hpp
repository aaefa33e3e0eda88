#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace riesz {

// Points are column vectors of length n; point sets are n x N matrices with
// one column per point.
using Point = Eigen::VectorXd;
using PointMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation (x = y for an
// inversion, an atom at the inversion center, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or out-of-range parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Kernel matrix assembly hit coincident nodes.
class AssemblyError : public Error {
 public:
  using Error::Error;
};

// Factorization failed: the matrix is not (numerically) positive definite.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Number of worker threads, from RIESZ_LAB_THREADS (default 1).
unsigned thread_count();

// Runs body(i) for i in [0, count). Work is split into contiguous blocks so
// results are independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Radical-inverse (Halton) coordinate of `index` in the given prime base.
double halton(std::uint64_t index, unsigned base);

// First n primes, for multi-dimensional Halton points.
unsigned nth_prime(int i);

}  // namespace riesz
