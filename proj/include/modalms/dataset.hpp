#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modalms {

//! One observation: a covariate vector and a possibly missing response.
struct Sample {
  std::vector<double> x;
  std::optional<double> y;

  bool observed() const { return y.has_value(); }
};

//! Names of the covariate columns and the response column in a CSV file.
struct ColumnSpec {
  std::vector<std::string> covariates;
  std::string response;
};

//! A validated sample of regression data. Responses may be missing; the
//! per-row observation indicator is exactly "the response is present".
//! Construction rejects non-finite values, inconsistent covariate
//! dimensions, and samples with no observed response at all.
class Dataset {
 public:
  static Dataset from_samples(const std::vector<Sample>& samples);

  std::size_t size() const { return obs_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> x(std::size_t i) const {
    return {xs_.data() + i * dim_, dim_};
  }
  bool observed(std::size_t i) const { return obs_[i] != 0; }
  //! Response for row i. Only valid when observed(i).
  double y(std::size_t i) const { return ys_[i]; }
  std::optional<double> y_opt(std::size_t i) const {
    if (!observed(i)) return std::nullopt;
    return ys_[i];
  }

  std::size_t observed_count() const { return n_observed_; }
  std::size_t missing_count() const { return size() - n_observed_; }
  double observed_y_min() const { return y_min_; }
  double observed_y_max() const { return y_max_; }
  double observed_y_range() const { return y_max_ - y_min_; }

  //! Copy with row i's response replaced (marking it observed).
  Dataset with_response(std::size_t i, double value) const;
  //! Copy with row i's response removed.
  Dataset without_response(std::size_t i) const;

  Sample sample(std::size_t i) const;
  std::vector<Sample> to_samples() const;

 private:
  std::vector<double> xs_;  // row-major, size() * dim()
  std::vector<double> ys_;  // NaN where missing
  std::vector<std::uint8_t> obs_;
  std::size_t dim_ = 0;
  std::size_t n_observed_ = 0;
  double y_min_ = 0.0;
  double y_max_ = 0.0;

  void refresh_summaries();
};

//! Reads a CSV file with a header row. Covariate cells must be numeric;
//! a response cell that is empty or the literal NA marks a missing value.
Dataset load_dataset(const std::string& path, const ColumnSpec& spec);

//! Writes a CSV file that round-trips through load_dataset exactly.
//! Missing responses are written as empty cells.
void save_dataset(const Dataset& ds, const std::string& path,
                  const ColumnSpec& spec);

//! Fraction of rows with an observed response.
double observed_fraction(const Dataset& ds);

//! Standard deviation of the observed responses (denominator n-1).
double observed_y_sd(const Dataset& ds);

//! Per-dimension minima and maxima of the covariates.
struct CovariateRange {
  std::vector<double> lo;
  std::vector<double> hi;
};
CovariateRange covariate_range(const Dataset& ds);

}  // namespace modalms
