#include "wasgd/rng.hpp"

namespace wasgd {

namespace {

boost::random::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream_id) {
    // Tag word keeps these streams disjoint from any other seed_seq use of
    // the same two integers.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x77617367u};
    return boost::random::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

void RngStream::fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
}

Eigen::VectorXd gaussian_vector(RngStream& rng, Eigen::Index d) {
    Eigen::VectorXd v(d);
    rng.fill_normal(std::span<double>(v.data(), static_cast<std::size_t>(d)));
    return v;
}

}  // namespace wasgd
