#include "cpf/dataset.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cpf/errors.hpp"

namespace cpf {

Dataset::Dataset(std::vector<double> covariates, std::size_t num_features,
                 std::vector<std::uint8_t> treatments, std::vector<double> outcomes)
    : covariates_(std::move(covariates)),
      num_features_(num_features),
      treatments_(std::move(treatments)),
      outcomes_(std::move(outcomes)) {}

Dataset Dataset::with_outcomes(std::vector<double> outcomes) const {
  if (outcomes.size() != outcomes_.size()) {
    throw InputError("with_outcomes: length mismatch");
  }
  return Dataset(covariates_, num_features_, treatments_, std::move(outcomes));
}

void validate(const Dataset& ds) {
  const std::size_t n = ds.treatments().size();
  const std::size_t p = ds.num_features();
  if (n == 0) {
    throw ValidationError(ValidationFailure::kEmpty, "dataset has no rows");
  }
  if (p == 0) {
    throw ValidationError(ValidationFailure::kNoCovariates, "dataset has no covariates");
  }
  if (ds.outcomes().size() != n || ds.covariates().size() != n * p) {
    throw ValidationError(
        ValidationFailure::kLengthMismatch,
        "length mismatch: " + std::to_string(ds.covariates().size() / p) + " covariate rows, " +
            std::to_string(n) + " treatments, " + std::to_string(ds.outcomes().size()) +
            " outcomes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.treatments()[i] > 1) {
      throw ValidationError(ValidationFailure::kBadTreatment,
                            "treatment at row " + std::to_string(i) + " is not 0 or 1");
    }
    if (!std::isfinite(ds.outcomes()[i])) {
      throw ValidationError(ValidationFailure::kNonFinite,
                            "non-finite outcome at row " + std::to_string(i));
    }
  }
  for (std::size_t k = 0; k < ds.covariates().size(); ++k) {
    if (!std::isfinite(ds.covariates()[k])) {
      throw ValidationError(ValidationFailure::kNonFinite,
                            "non-finite covariate at row " + std::to_string(k / p) +
                                ", column " + std::to_string(k % p));
    }
  }
}

IndexSet::IndexSet(std::vector<std::size_t> indices, std::size_t n) : indices_(std::move(indices)) {
  std::vector<bool> seen(n, false);
  for (std::size_t idx : indices_) {
    if (idx >= n) {
      throw InputError("index " + std::to_string(idx) + " out of range for n=" + std::to_string(n));
    }
    if (seen[idx]) {
      throw InputError("duplicate index " + std::to_string(idx));
    }
    seen[idx] = true;
  }
}

IndexSet IndexSet::all(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  IndexSet out;
  out.indices_ = std::move(idx);
  return out;
}

ArmCounts count_arms(const Dataset& ds, std::span<const std::size_t> rows) {
  ArmCounts c;
  for (std::size_t i : rows) {
    if (ds.treated(i)) {
      ++c.treated;
    } else {
      ++c.control;
    }
  }
  return c;
}

}  // namespace cpf
