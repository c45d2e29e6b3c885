// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "grnlab/numerics/tensor.hpp"

namespace grnlab {

/// Named substreams of one master seed.
enum class Stream : std::uint64_t { Data = 1, Init = 2, Dropout = 3, Eval = 4, Task = 5 };

/// SplitMix64 finaliser applied to master + (stream + 1) * 0x9E3779B97F4A7C15.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded generator: a 64-bit Mersenne Twister (std::mt19937_64) driven by a
/// seed from derive_seed. Uniforms use the top 53 bits, u = (x >> 11) * 2^-53;
/// normals use Box-Muller on (1 - u1, u2) and return the sine branch on the
/// following call.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    static Rng stream(std::uint64_t master, Stream s) { return Rng(derive_seed(master, static_cast<std::uint64_t>(s))); }
    static Rng stream(std::uint64_t master, std::uint64_t id) { return Rng(derive_seed(master, id)); }

    std::uint64_t next_u64() { return eng_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    /// Uniform integer in [0, n), rejection sampled so it is unbiased.
    std::size_t below(std::size_t n);

    Tensor normal_tensor(Shape shape, double stddev = 1.0);
    Tensor uniform_tensor(Shape shape, double lo, double hi);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace grnlab
