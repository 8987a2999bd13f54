#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace hml {

inline constexpr int kJoints = 20;
inline constexpr int kSynergies = 4;

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using SynergyVecT = Eigen::Matrix<Scalar, kSynergies, 1>;
template <typename Scalar>
using JointVecT = Eigen::Matrix<Scalar, kJoints, 1>;
/// Synergy weights: 2 cursor axes x 4 synergies.
template <typename Scalar>
using WeightMatT = Eigen::Matrix<Scalar, 2, kSynergies>;
/// Synergy basis, one synergy per row.
template <typename Scalar>
using SynergyBasisT = Eigen::Matrix<Scalar, kSynergies, kJoints>;
/// Joint velocity to cursor velocity map.
template <typename Scalar>
using MappingT = Eigen::Matrix<Scalar, 2, kJoints>;

using Vec2 = Vec2T<double>;
using SynergyVec = SynergyVecT<double>;
using JointVec = JointVecT<double>;
using WeightMat = WeightMatT<double>;
using SynergyBasis = SynergyBasisT<double>;
using Mapping = MappingT<double>;

/// Index into GameConfig::targets.
using TargetId = std::size_t;

}  // namespace hml
