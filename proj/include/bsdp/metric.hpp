#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bsdp/geo.hpp"

namespace bsdp {

/// Pairwise point metric with optional per-point precomputation.
///
/// The indexed distance(i, j) path must return values bitwise identical to
/// the raw distance(a, b) path for the prepared points; the clustering code
/// relies on that when switching between the two.
class PointMetric {
 public:
  virtual ~PointMetric() = default;

  virtual void prepare(std::span<const GeoPoint> points) { points_ = points; }

  virtual double distance(std::size_t i, std::size_t j) const = 0;
  virtual double distance(const GeoPoint& a, const GeoPoint& b) const = 0;

  /// Conservative per-axis coordinate bound: when the result is set, any pair
  /// of prepared points closer than radius_km differs by strictly less than
  /// (d_latitude, d_longitude) in coordinate units. nullopt disables grid
  /// bucketing and forces exhaustive scans.
  virtual std::optional<std::pair<double, double>> coordinate_bound(
      double /*radius_km*/) const {
    return std::nullopt;
  }

  std::span<const GeoPoint> points() const { return points_; }

 protected:
  std::span<const GeoPoint> points_;
};

/// Great-circle metric; caches radians and cosines per point.
class HaversineMetric final : public PointMetric {
 public:
  void prepare(std::span<const GeoPoint> points) override;
  double distance(std::size_t i, std::size_t j) const override;
  double distance(const GeoPoint& a, const GeoPoint& b) const override;
  std::optional<std::pair<double, double>> coordinate_bound(
      double radius_km) const override;

 private:
  std::vector<double> lat_rad_, cos_lat_;
  double min_cos_lat_ = 1.0;
  double lon_span_ = 0.0;
  double max_abs_lat_ = 0.0;
};

/// Euclidean metric on raw coordinates (latitude = y, longitude = x).
/// Used by tests that exercise the clustering math on planar data.
class PlanarMetric final : public PointMetric {
 public:
  double distance(std::size_t i, std::size_t j) const override;
  double distance(const GeoPoint& a, const GeoPoint& b) const override;
  std::optional<std::pair<double, double>> coordinate_bound(
      double radius_km) const override;
};

}  // namespace bsdp
