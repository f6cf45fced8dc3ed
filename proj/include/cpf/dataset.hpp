#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cpf {

/// Observational data (X, D, Y). Covariates are stored row-major, n x p.
///
/// The constructor does not validate; call validate() (load_csv does) before
/// handing a Dataset to training code. Once constructed a Dataset is never
/// mutated, so it can be shared across threads freely.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<double> covariates, std::size_t num_features,
          std::vector<std::uint8_t> treatments, std::vector<double> outcomes);

  std::size_t num_rows() const noexcept { return treatments_.size(); }
  std::size_t num_features() const noexcept { return num_features_; }

  std::span<const double> row(std::size_t i) const {
    return {covariates_.data() + i * num_features_, num_features_};
  }
  double covariate(std::size_t i, std::size_t j) const {
    return covariates_[i * num_features_ + j];
  }
  bool treated(std::size_t i) const { return treatments_[i] != 0; }
  double outcome(std::size_t i) const { return outcomes_[i]; }

  const std::vector<double>& covariates() const noexcept { return covariates_; }
  const std::vector<std::uint8_t>& treatments() const noexcept { return treatments_; }
  const std::vector<double>& outcomes() const noexcept { return outcomes_; }

  /// Copy with the outcome vector replaced (same length required).
  Dataset with_outcomes(std::vector<double> outcomes) const;

 private:
  std::vector<double> covariates_;
  std::size_t num_features_ = 0;
  std::vector<std::uint8_t> treatments_;
  std::vector<double> outcomes_;
};

/// Throws ValidationError (one ValidationFailure per violated invariant) if
/// the dataset is empty, has no covariates, has inconsistent lengths, a
/// treatment outside {0,1}, or any non-finite value. Datasets where every
/// unit is in one arm pass; arm coverage is a training-time check.
void validate(const Dataset& ds);

/// Ordered list of distinct row indices into a Dataset.
class IndexSet {
 public:
  IndexSet() = default;
  /// Throws InputError on duplicates or indices >= n.
  IndexSet(std::vector<std::size_t> indices, std::size_t n);

  static IndexSet all(std::size_t n);

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }
  std::span<const std::size_t> view() const noexcept { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

struct ArmCounts {
  std::size_t treated = 0;
  std::size_t control = 0;
};

ArmCounts count_arms(const Dataset& ds, std::span<const std::size_t> rows);

}  // namespace cpf
