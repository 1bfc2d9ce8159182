#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>

namespace curvrec {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Uniform scale about a center point: normalized = (x - center) * scale.
struct SimilarityTransform {
  double scale = 1.0;
  Vec3 center = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return (x - center) * scale; }
  Vec3 invert(const Vec3& x) const { return x / scale + center; }
};

/// Value plus first and second spatial derivatives of a scalar field at a point.
struct Jet2 {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();
};

/// A twice-differentiable scalar field over world coordinates. Derivatives
/// returned by eval_jet are taken with respect to the world coordinates.
/// frame_scale() is the multiplier from world to the field's native frame;
/// losses and projections operate on native-frame derivatives
/// (gradient / s, hessian / s^2).
class Field {
 public:
  virtual ~Field() = default;
  virtual double eval(const Vec3& x) const = 0;
  virtual Jet2 eval_jet(const Vec3& x) const = 0;
  virtual double frame_scale() const { return 1.0; }

  Jet2 eval_jet_native_frame(const Vec3& x) const {
    Jet2 j = eval_jet(x);
    const double s = frame_scale();
    j.gradient /= s;
    j.hessian /= s * s;
    return j;
  }

  /// Bulk evaluation; the default forwards to eval() pointwise.
  virtual void eval_many(std::span<const Vec3> xs, std::span<double> out) const {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval(xs[i]);
  }

  /// Bulk first-order jets (value + gradient; hessians may be left zero).
  virtual void eval_jets1_many(std::span<const Vec3> xs, std::span<Jet2> out,
                               int threads = 0) const {
    (void)threads;
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval_jet(xs[i]);
  }
};

/// A field queried through a similarity transform of its input domain, so a
/// network fit against normalized geometry can be evaluated in the original
/// coordinates.
class TransformedField final : public Field {
 public:
  TransformedField(const Field& inner, SimilarityTransform t) : inner_(inner), t_(t) {}

  double eval(const Vec3& x) const override { return inner_.eval(t_.apply(x)); }

  Jet2 eval_jet(const Vec3& x) const override {
    Jet2 j = inner_.eval_jet(t_.apply(x));
    j.gradient *= t_.scale;
    j.hessian *= t_.scale * t_.scale;
    return j;
  }

  double frame_scale() const override { return inner_.frame_scale() * t_.scale; }

 private:
  const Field& inner_;
  SimilarityTransform t_;
};

/// Exact signed distance to a sphere.
class SphereField final : public Field {
 public:
  SphereField(Vec3 center, double radius) : center_(std::move(center)), radius_(radius) {}

  double eval(const Vec3& x) const override { return (x - center_).norm() - radius_; }

  Jet2 eval_jet(const Vec3& x) const override {
    Jet2 j;
    const Vec3 d = x - center_;
    const double r = d.norm();
    j.value = r - radius_;
    const Vec3 n = d / r;
    j.gradient = n;
    j.hessian = (Mat3::Identity() - n * n.transpose()) / r;
    return j;
  }

 private:
  Vec3 center_;
  double radius_;
};

/// Signed distance to a plane n.x = d with unit normal n.
class PlaneField final : public Field {
 public:
  PlaneField(Vec3 normal, double offset) : normal_(normal.normalized()), offset_(offset) {}

  double eval(const Vec3& x) const override { return normal_.dot(x) - offset_; }

  Jet2 eval_jet(const Vec3& x) const override {
    Jet2 j;
    j.value = eval(x);
    j.gradient = normal_;
    return j;
  }

 private:
  Vec3 normal_;
  double offset_;
};

/// Signed distance to an infinite cylinder around the line through `point`
/// with unit direction `axis`.
class CylinderField final : public Field {
 public:
  CylinderField(Vec3 point, Vec3 axis, double radius)
      : point_(std::move(point)), axis_(axis.normalized()), radius_(radius) {}

  double eval(const Vec3& x) const override { return radial(x).norm() - radius_; }

  Jet2 eval_jet(const Vec3& x) const override {
    Jet2 j;
    const Vec3 w = radial(x);
    const double r = w.norm();
    j.value = r - radius_;
    const Vec3 n = w / r;
    const Mat3 proj = Mat3::Identity() - axis_ * axis_.transpose();
    j.gradient = n;
    j.hessian = (proj - n * n.transpose()) / r;
    return j;
  }

 private:
  Vec3 radial(const Vec3& x) const {
    const Vec3 d = x - point_;
    return d - axis_ * axis_.dot(d);
  }

  Vec3 point_;
  Vec3 axis_;
  double radius_;
};

}  // namespace curvrec
