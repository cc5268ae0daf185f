#include "mnar/loss.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "mnar/errors.hpp"

namespace mnar {

LossKind LossKind::parse(const std::string& text) {
  std::string upper;
  for (char ch : text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));

  const auto at = upper.find('@');
  const std::string head = upper.substr(0, at);
  std::size_t cutoff = 0;
  if (at != std::string::npos) {
    const std::string tail = upper.substr(at + 1);
    if (tail.empty() || !std::all_of(tail.begin(), tail.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw InvalidArgument("bad cutoff in loss name '" + text + "'");
    cutoff = std::stoul(tail);
  }

  if (at == std::string::npos) {
    if (head == "MAE") return mae();
    if (head == "MSE") return mse();
    if (head == "ACC" || head == "ACCURACY") return accuracy();
    if (head == "DCG") return dcg();
  } else {
    if (head == "CG") return cg(cutoff);
    if (head == "DCG") return dcg_at(cutoff);
    if (head == "PREC" || head == "PRECATK") return prec_at(cutoff);
  }
  throw InvalidArgument("unknown loss '" + text + "'");
}

bool LossKind::is_pointwise() const noexcept {
  return kind_ == Kind::MAE || kind_ == Kind::MSE || kind_ == Kind::Accuracy;
}

std::string LossKind::name() const {
  switch (kind_) {
    case Kind::MAE: return "MAE";
    case Kind::MSE: return "MSE";
    case Kind::Accuracy: return "ACC";
    case Kind::CG: return "CG@" + std::to_string(cutoff_);
    case Kind::DCG: return "DCG";
    case Kind::DCGAtK: return "DCG@" + std::to_string(cutoff_);
    case Kind::PrecAtK: return "PREC@" + std::to_string(cutoff_);
  }
  return "?";
}

void LossKind::validate(std::size_t items) const {
  if (kind_ == Kind::CG || kind_ == Kind::DCGAtK || kind_ == Kind::PrecAtK) {
    if (cutoff_ < 1 || cutoff_ > items) {
      throw InvalidArgument(name() + ": cutoff must lie in [1, " + std::to_string(items) + "]");
    }
  }
}

std::vector<std::size_t> rank_rows(const RatingMatrix& pred) {
  const std::size_t cols = pred.cols();
  std::vector<std::size_t> ranks(pred.size());
  std::vector<std::size_t> order(cols);
  for (std::size_t u = 0; u < pred.rows(); ++u) {
    const auto row = pred.row(u);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (row[a] != row[b]) return row[a] > row[b];
      return a < b;
    });
    for (std::size_t pos = 0; pos < cols; ++pos) ranks[u * cols + order[pos]] = pos + 1;
  }
  return ranks;
}

LossEvaluator::LossEvaluator(const RatingMatrix& pred, LossKind kind, RatingScale scale)
    : pred_(pred), kind_(kind), scale_(scale) {
  kind_.validate(pred.cols());
  if (kind_.kind() == LossKind::Kind::CG) {
    for (std::size_t u = 0; u < pred.rows(); ++u) {
      std::size_t ones = 0;
      for (double v : pred.row(u)) {
        if (v == 1.0) {
          ++ones;
        } else if (v != 0.0) {
          throw InvalidArgument("CG needs a binary recommendation matrix; row " + std::to_string(u) +
                                " has value " + std::to_string(v));
        }
      }
      if (ones != kind_.cutoff()) {
        throw InvalidArgument("CG row " + std::to_string(u) + " recommends " + std::to_string(ones) +
                              " items, budget is " + std::to_string(kind_.cutoff()));
      }
    }
  } else if (!kind_.is_pointwise()) {
    ranks_ = rank_rows(pred);
  }
}

double LossEvaluator::operator()(std::size_t u, std::size_t i, double truth) const noexcept {
  const double yhat = pred_(u, i);
  const auto items = static_cast<double>(pred_.cols());
  const auto cutoff = static_cast<double>(kind_.cutoff());
  switch (kind_.kind()) {
    case LossKind::Kind::MAE:
      return std::abs(truth - yhat);
    case LossKind::Kind::MSE: {
      const double r = truth - yhat;
      return r * r;
    }
    case LossKind::Kind::Accuracy:
      return static_cast<double>(scale_.snap(yhat)) == truth ? 1.0 : 0.0;
    case LossKind::Kind::CG:
      return (items / cutoff) * yhat * truth;
    case LossKind::Kind::DCG:
      return items / std::log2(static_cast<double>(rank(u, i)) + 1.0) * truth;
    case LossKind::Kind::DCGAtK: {
      const std::size_t r = rank(u, i);
      if (r > kind_.cutoff()) return 0.0;
      return items / std::log2(static_cast<double>(r) + 1.0) * truth;
    }
    case LossKind::Kind::PrecAtK:
      return rank(u, i) <= kind_.cutoff() ? (items / cutoff) * truth : 0.0;
  }
  return 0.0;
}

namespace {

void check_index(const RatingMatrix& truth, std::size_t u, std::size_t i) {
  if (u >= truth.rows() || i >= truth.cols()) {
    throw InvalidArgument("index (" + std::to_string(u) + ", " + std::to_string(i) + ") out of range");
  }
}

}  // namespace

double pointwise_loss(std::size_t u, std::size_t i, const RatingMatrix& truth, const RatingMatrix& pred,
                      LossKind kind, RatingScale scale) {
  if (!kind.is_pointwise()) throw InvalidArgument("pointwise_loss called with ranking loss " + kind.name());
  require_same_dims(truth, pred);
  check_index(truth, u, i);
  return LossEvaluator(pred, kind, scale)(u, i, truth(u, i));
}

double ranking_loss(std::size_t u, std::size_t i, const RatingMatrix& truth, const RatingMatrix& pred,
                    LossKind kind) {
  if (kind.is_pointwise()) throw InvalidArgument("ranking_loss called with pointwise loss " + kind.name());
  require_same_dims(truth, pred);
  check_index(truth, u, i);
  return LossEvaluator(pred, kind)(u, i, truth(u, i));
}

std::vector<double> loss_matrix(const RatingMatrix& truth, const RatingMatrix& pred, LossKind kind,
                                RatingScale scale) {
  require_same_dims(truth, pred);
  const LossEvaluator loss(pred, kind, scale);
  std::vector<double> out(truth.size());
  for (std::size_t u = 0; u < truth.rows(); ++u)
    for (std::size_t i = 0; i < truth.cols(); ++i) out[u * truth.cols() + i] = loss(u, i, truth(u, i));
  return out;
}

double true_risk(const RatingMatrix& truth, const RatingMatrix& pred, LossKind kind, RatingScale scale) {
  const auto losses = loss_matrix(truth, pred, kind, scale);
  double sum = 0.0;
  for (double d : losses) sum += d;
  return sum / static_cast<double>(losses.size());
}

}  // namespace mnar
