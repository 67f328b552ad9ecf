#pragma once

#include "opmodel/linalg.hpp"

#include <cstdint>
#include <random>

namespace opmodel {

using Rng = std::mt19937_64;

/// Independent sub-seed for stream `stream` of a base seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Entries i.i.d. standard complex Gaussian (E|z|^2 = 1).
Matrix ginibre(Index rows, Index cols, Rng& rng);
Vector random_vector(Index n, Rng& rng);
/// Haar-distributed unitary via QR with phase correction.
Matrix haar_unitary(Index n, Rng& rng);
/// GUE sample (G + G^H) / 2.
Matrix random_hermitian(Index n, Rng& rng);

}  // namespace opmodel
