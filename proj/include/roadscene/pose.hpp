#pragma once

#include "roadscene/math.hpp"

namespace roadscene {

// Rigid transform x' = rotation * x + translation.
struct Pose6D {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose6D identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  // (*this) * other, i.e. apply `other` first.
  Pose6D compose(const Pose6D& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Pose6D inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  // Frobenius norm of R^T R - I.
  double orthonormality_error() const {
    return (rotation.transpose() * rotation - Mat3::Identity()).norm();
  }

  bool operator==(const Pose6D& o) const { return rotation == o.rotation && translation == o.translation; }
};

inline constexpr double kOrthonormalTolerance = 1e-9;

}  // namespace roadscene
