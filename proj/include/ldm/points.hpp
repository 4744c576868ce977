#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldm {

/// Row-major list of equal-length real vectors.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {
    if (dim_ == 0 || values_.size() % dim_ != 0) {
      throw std::invalid_argument("PointSet: value count " + std::to_string(values_.size()) +
                                  " is not a multiple of dimension " + std::to_string(dim_));
    }
  }

  static PointSet from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("PointSet: no rows");
    PointSet out(rows.front().size());
    for (const auto& r : rows) out.push_back(r);
    return out;
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> operator[](std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) { return {values_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> row) {
    if (row.size() != dim_) {
      throw std::invalid_argument("PointSet: row of length " + std::to_string(row.size()) +
                                  " pushed into set of dimension " + std::to_string(dim_));
    }
    values_.insert(values_.end(), row.begin(), row.end());
  }

  PointSet subset(std::span<const std::size_t> indices) const {
    PointSet out(dim_);
    out.values_.reserve(indices.size() * dim_);
    for (std::size_t i : indices) out.push_back((*this)[i]);
    return out;
  }

  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Feature rows with integer class labels in [0, num_classes).
struct Dataset {
  PointSet x;
  std::vector<int> y;
  int num_classes = 0;

  std::size_t size() const noexcept { return y.size(); }
  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out{x.subset(indices), {}, num_classes};
    out.y.reserve(indices.size());
    for (std::size_t i : indices) out.y.push_back(y[i]);
    return out;
  }
};

}  // namespace ldm
