#include "elgof/dataset.hpp"

#include "elgof/error.hpp"

#include <set>
#include <string>

namespace elgof {
namespace {

Matrix take_columns(const Matrix& x, const std::vector<Index>& cols) {
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Index>(j)) = x.col(cols[j]);
  }
  return out;
}

}  // namespace

Dataset::Dataset(Matrix x, Vector y, std::optional<ColumnSplit> split)
    : x_(std::move(x)), y_(std::move(y)), split_(std::move(split)) {
  if (x_.rows() != y_.size()) {
    throw Error(ErrorCode::invalid_argument,
                "covariate rows and response length differ");
  }
  if (y_.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "need at least 2 observations");
  }
  if (x_.cols() < 1) {
    throw Error(ErrorCode::invalid_argument, "need at least one covariate");
  }
  if (!x_.allFinite() || !y_.allFinite()) {
    throw Error(ErrorCode::invalid_argument, "dataset contains non-finite values");
  }
  if (split_) {
    if (split_->w.empty() || split_->z.empty()) {
      throw Error(ErrorCode::invalid_argument,
                  "column split needs at least one W and one Z column");
    }
    std::set<Index> seen;
    for (const auto& block : {split_->w, split_->z}) {
      for (Index c : block) {
        if (c < 0 || c >= x_.cols() || !seen.insert(c).second) {
          throw Error(ErrorCode::invalid_argument,
                      "invalid or repeated column " + std::to_string(c) +
                          " in W/Z split");
        }
      }
    }
    if (static_cast<Index>(seen.size()) != x_.cols()) {
      throw Error(ErrorCode::invalid_argument,
                  "W and Z columns must cover every covariate");
    }
  }
}

Matrix Dataset::w() const {
  if (!split_) throw Error(ErrorCode::invalid_argument, "dataset has no W/Z split");
  return take_columns(x_, split_->w);
}

Matrix Dataset::z() const {
  if (!split_) throw Error(ErrorCode::invalid_argument, "dataset has no W/Z split");
  return take_columns(x_, split_->z);
}

Dataset Dataset::with_response(Vector y) const { return Dataset(x_, std::move(y), split_); }

}  // namespace elgof
