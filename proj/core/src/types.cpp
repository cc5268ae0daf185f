#include "mnar/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mnar/errors.hpp"

namespace mnar {
namespace {

std::string dims(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void require_nonempty_dims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw InvalidArgument("matrix dimensions must be positive, got " + dims(rows, cols));
}

}  // namespace

bool RatingScale::contains(double value) const noexcept {
  return value >= min && value <= max && std::floor(value) == value;
}

int RatingScale::snap(double value) const noexcept {
  const double r = std::nearbyint(value);
  if (!(r >= min)) return min;  // also catches NaN
  if (r > max) return max;
  return static_cast<int>(r);
}

RatingMatrix::RatingMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_((require_nonempty_dims(rows, cols), rows * cols), fill) {}

RatingMatrix::RatingMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require_nonempty_dims(rows, cols);
  if (values_.size() != rows * cols) {
    throw InvalidArgument("rating matrix " + dims(rows, cols) + " needs " + std::to_string(rows * cols) +
                          " values, got " + std::to_string(values_.size()));
  }
}

double RatingMatrix::at(std::size_t u, std::size_t i) const {
  if (u >= rows_ || i >= cols_) {
    throw InvalidArgument("index (" + std::to_string(u) + ", " + std::to_string(i) + ") out of range for " +
                          dims(rows_, cols_));
  }
  return (*this)(u, i);
}

void RatingMatrix::require_on_scale(const RatingScale& scale) const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!scale.contains(values_[k])) {
      throw InvalidArgument("true rating " + std::to_string(values_[k]) + " at cell " + std::to_string(k) +
                            " is not on the rating scale");
    }
  }
}

ObservationSample::ObservationSample(std::size_t rows, std::size_t cols, std::vector<Rating> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  require_nonempty_dims(rows, cols);
  std::vector<bool> seen(rows * cols, false);
  for (const Rating& r : entries_) {
    if (r.user >= rows || r.item >= cols) {
      throw InvalidArgument("observation (" + std::to_string(r.user) + ", " + std::to_string(r.item) +
                            ") out of range for " + dims(rows, cols));
    }
    const std::size_t cell = r.user * cols + r.item;
    if (seen[cell]) {
      throw InvalidArgument("duplicate observation (" + std::to_string(r.user) + ", " + std::to_string(r.item) + ")");
    }
    seen[cell] = true;
  }
}

void ObservationSample::require_consistent_with(const RatingMatrix& truth) const {
  require_same_dims(*this, truth);
  for (const Rating& r : entries_) {
    if (truth(r.user, r.item) != r.value) {
      throw InvalidArgument("revealed rating at (" + std::to_string(r.user) + ", " + std::to_string(r.item) +
                            ") disagrees with the true rating");
    }
  }
}

ObservationSample ObservationSample::subset(std::span<const std::size_t> positions) const {
  std::vector<Rating> picked;
  picked.reserve(positions.size());
  for (std::size_t p : positions) picked.push_back(entries_.at(p));
  return ObservationSample(rows_, cols_, std::move(picked));
}

PropensityMatrix::PropensityMatrix(std::size_t rows, std::size_t cols, double fill)
    : PropensityMatrix(rows, cols, std::vector<double>(rows * cols, fill)) {}

PropensityMatrix::PropensityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require_nonempty_dims(rows, cols);
  if (values_.size() != rows * cols) {
    throw InvalidArgument("propensity matrix " + dims(rows, cols) + " needs " + std::to_string(rows * cols) +
                          " values, got " + std::to_string(values_.size()));
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0 && values_[k] <= 1.0)) {
      throw InvalidArgument("propensity " + std::to_string(values_[k]) + " at cell " + std::to_string(k) +
                            " is outside (0, 1]");
    }
  }
}

void require_same_dims(const RatingMatrix& a, const RatingMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("dimension mismatch: " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
}

void require_same_dims(const RatingMatrix& a, const PropensityMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("dimension mismatch: " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
}

void require_same_dims(const ObservationSample& a, const RatingMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("dimension mismatch: " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
}

void require_same_dims(const ObservationSample& a, const PropensityMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("dimension mismatch: " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
}

}  // namespace mnar
