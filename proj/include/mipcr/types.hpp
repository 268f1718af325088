#ifndef MIPCR_TYPES_HPP
#define MIPCR_TYPES_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mipcr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Random engine used everywhere a draw is made. Every stochastic routine
/// takes one by reference so callers own the stream.
using Rng = std::mt19937_64;

/// Mixes a root seed with a stream index (splitmix64 finalizer). Streams for
/// different indices are statistically independent and adding streams never
/// changes the value of an existing one.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(root, a), b);
}

/// Thrown for malformed inputs: bad files, shapes, out-of-range arguments.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a numerical procedure cannot produce a valid result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mipcr

#endif
