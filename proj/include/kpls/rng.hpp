#ifndef KPLS_RNG_HPP
#define KPLS_RNG_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>

namespace kpls {

// Philox4x32-10 counter-based generator. Streams are addressed by
// (seed, stream): the seed is the key, the stream id occupies the upper
// half of the 128-bit counter. Draws depend only on (seed, stream, index),
// so work can be distributed across threads without shared state and
// results are independent of worker count.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    // Uniform on (0,1], 53-bit resolution.
    double uniform();

    // Standard normal via Box-Muller; second value of each pair is cached.
    double gaussian();

    Eigen::VectorXd gaussian_vector(Eigen::Index n);

    // Row-major fill order, so the matrix shape is part of the contract.
    Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols);

    // Symmetric matrix with i.i.d. N(0,1) upper triangle mirrored down.
    Eigen::MatrixXd symmetric_gaussian(Eigen::Index dim);

  private:
    std::array<std::uint32_t, 4> next_block();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 4;
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;

    std::uint32_t next_u32();
};

}  // namespace kpls

#endif
