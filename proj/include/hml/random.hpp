#pragma once

#include <Eigen/Core>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <cstdint>
#include <initializer_list>

namespace hml {

/// Mixes a master seed with a path of integers into an independent stream id.
/// Used to give every Monte Carlo rollout, run, and particle its own stream.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Seeded random stream. Gaussian draws use a ziggurat sampler because the
/// integrators draw 40 normals per step.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::size_t index(std::size_t n)
    {
        return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    std::uint64_t next_seed() { return engine_(); }

    /// Adds scale * N(0, 1) to every coefficient.
    template <typename Derived>
    void add_normal(Eigen::MatrixBase<Derived>& m, double scale)
    {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.derived().coeffRef(i) += scale * normal();
    }

private:
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
};

}  // namespace hml
