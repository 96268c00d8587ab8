#pragma once

#include <cstdint>
#include <random>

#include <boost/random/mersenne_twister.hpp>
#include <span>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace wasgd {

/// A reproducible random stream addressed by (seed, stream_id).
///
/// The engine state is derived from both numbers through `std::seed_seq`,
/// so stream r of an experiment never depends on how many draws other
/// streams consumed. Replication r of a Monte-Carlo study uses
/// `RngStream(seed, r)`; serial and parallel runs therefore see the same
/// draws. Normal variates come from Boost's ziggurat sampler, whose output
/// and Boost's Mersenne Twister are fixed across standard library implementations.
class RngStream {
  public:
    using result_type = boost::random::mt19937_64::result_type;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return engine_(); }

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }

    void fill_normal(std::span<double> out);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
};

/// d i.i.d. standard normal draws.
Eigen::VectorXd gaussian_vector(RngStream& rng, Eigen::Index d);

}  // namespace wasgd
