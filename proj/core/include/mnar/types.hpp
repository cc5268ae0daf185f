#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mnar {

/// Integer rating scale, inclusive on both ends.
struct RatingScale {
  int min = 1;
  int max = 5;

  int levels() const noexcept { return max - min + 1; }
  bool contains(double value) const noexcept;
  /// Rounds to the nearest scale value, clamping to [min, max].
  int snap(double value) const noexcept;
};

/// Dense U x I matrix of true ratings Y or predictions, row-major by user.
class RatingMatrix {
 public:
  RatingMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  RatingMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t u, std::size_t i) const noexcept { return values_[u * cols_ + i]; }
  double& operator()(std::size_t u, std::size_t i) noexcept { return values_[u * cols_ + i]; }

  /// Bounds-checked access; throws InvalidArgument.
  double at(std::size_t u, std::size_t i) const;

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> row(std::size_t u) const noexcept { return {values_.data() + u * cols_, cols_}; }

  /// Throws InvalidArgument unless every entry is an integer on `scale`.
  void require_on_scale(const RatingScale& scale) const;

  bool operator==(const RatingMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

/// One revealed rating.
struct Rating {
  std::size_t user;
  std::size_t item;
  double value;

  bool operator==(const Rating&) const = default;
};

/// Support of the observation indicator O together with the revealed values.
/// Indices are validated to be in range and unique on construction.
class ObservationSample {
 public:
  ObservationSample(std::size_t rows, std::size_t cols, std::vector<Rating> entries = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t cells() const noexcept { return rows_ * cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::span<const Rating> entries() const noexcept { return entries_; }
  const Rating& operator[](std::size_t k) const noexcept { return entries_[k]; }

  /// Checks that every revealed value equals the matching entry of `truth`.
  void require_consistent_with(const RatingMatrix& truth) const;

  /// Entries at the given positions of entries(), in the given order.
  ObservationSample subset(std::span<const std::size_t> positions) const;

  bool operator==(const ObservationSample&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Rating> entries_;
};

/// Default lower bound applied to every emitted propensity.
inline constexpr double kPropensityFloor = 1e-6;

/// Dense U x I matrix of reveal probabilities, every entry in (0, 1].
class PropensityMatrix {
 public:
  PropensityMatrix(std::size_t rows, std::size_t cols, double fill);
  PropensityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t u, std::size_t i) const noexcept { return values_[u * cols_ + i]; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const PropensityMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

void require_same_dims(const RatingMatrix& a, const RatingMatrix& b);
void require_same_dims(const RatingMatrix& a, const PropensityMatrix& b);
void require_same_dims(const ObservationSample& a, const RatingMatrix& b);
void require_same_dims(const ObservationSample& a, const PropensityMatrix& b);

}  // namespace mnar
