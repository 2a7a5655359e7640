#include "modalms/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "modalms/errors.hpp"

namespace modalms {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view cell, std::size_t row,
                    const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError("data row " + std::to_string(row) + ", column '" + column +
                     "': cannot parse '" + std::string(cell) + "' as a number");
  return value;
}

bool is_missing_cell(std::string_view cell) {
  return cell.empty() || cell == "NA";
}

std::string format_full(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset Dataset::from_samples(const std::vector<Sample>& samples) {
  Dataset ds;
  if (samples.empty())
    throw ValidityError("dataset must contain at least one row");
  ds.dim_ = samples.front().x.size();
  if (ds.dim_ == 0)
    throw ValidityError("dataset rows must have at least one covariate");
  ds.xs_.reserve(samples.size() * ds.dim_);
  ds.ys_.reserve(samples.size());
  ds.obs_.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.x.size() != ds.dim_)
      throw ValidityError("row " + std::to_string(i + 1) + " has " +
                          std::to_string(s.x.size()) + " covariates, expected " +
                          std::to_string(ds.dim_));
    for (double v : s.x)
      if (!std::isfinite(v))
        throw ValidityError("row " + std::to_string(i + 1) +
                            " has a non-finite covariate");
    if (s.y && !std::isfinite(*s.y))
      throw ValidityError("row " + std::to_string(i + 1) +
                          " has a non-finite response");
    ds.xs_.insert(ds.xs_.end(), s.x.begin(), s.x.end());
    ds.ys_.push_back(s.y ? *s.y : std::numeric_limits<double>::quiet_NaN());
    ds.obs_.push_back(s.y ? 1 : 0);
  }
  ds.refresh_summaries();
  if (ds.n_observed_ == 0)
    throw ValidityError("dataset has no observed responses");
  return ds;
}

void Dataset::refresh_summaries() {
  n_observed_ = 0;
  y_min_ = std::numeric_limits<double>::infinity();
  y_max_ = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (!obs_[i]) continue;
    ++n_observed_;
    y_min_ = std::min(y_min_, ys_[i]);
    y_max_ = std::max(y_max_, ys_[i]);
  }
  if (n_observed_ == 0) {
    y_min_ = 0.0;
    y_max_ = 0.0;
  }
}

Dataset Dataset::with_response(std::size_t i, double value) const {
  if (!std::isfinite(value))
    throw ValidityError("imputed response must be finite");
  Dataset out = *this;
  out.ys_[i] = value;
  out.obs_[i] = 1;
  out.refresh_summaries();
  return out;
}

Dataset Dataset::without_response(std::size_t i) const {
  Dataset out = *this;
  out.ys_[i] = std::numeric_limits<double>::quiet_NaN();
  out.obs_[i] = 0;
  out.refresh_summaries();
  if (out.n_observed_ == 0)
    throw ValidityError("dataset has no observed responses");
  return out;
}

Sample Dataset::sample(std::size_t i) const {
  Sample s;
  auto xv = x(i);
  s.x.assign(xv.begin(), xv.end());
  if (observed(i)) s.y = ys_[i];
  return s;
}

std::vector<Sample> Dataset::to_samples() const {
  std::vector<Sample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(sample(i));
  return out;
}

Dataset load_dataset(const std::string& path, const ColumnSpec& spec) {
  if (spec.covariates.empty())
    throw ConfigError("column spec needs at least one covariate column");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line))
    throw SchemaError("'" + path + "' is empty, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_csv_line(line);
  auto find_column = [&](const std::string& name) {
    std::size_t found = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) {
        if (found != header.size())
          throw SchemaError("column '" + name + "' appears more than once");
        found = j;
      }
    }
    if (found == header.size())
      throw SchemaError("required column '" + name + "' not found in header");
    return found;
  };

  std::vector<std::size_t> x_cols;
  x_cols.reserve(spec.covariates.size());
  for (const auto& name : spec.covariates) x_cols.push_back(find_column(name));
  std::size_t y_col = find_column(spec.response);

  std::vector<Sample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_csv_line(line);
    Sample s;
    s.x.reserve(x_cols.size());
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      if (x_cols[j] >= fields.size())
        throw ParseError("data row " + std::to_string(row) +
                         " has too few fields");
      s.x.push_back(
          parse_double(fields[x_cols[j]], row, spec.covariates[j]));
    }
    if (y_col >= fields.size())
      throw ParseError("data row " + std::to_string(row) +
                       " has too few fields");
    if (!is_missing_cell(fields[y_col]))
      s.y = parse_double(fields[y_col], row, spec.response);
    samples.push_back(std::move(s));
  }
  return Dataset::from_samples(samples);
}

void save_dataset(const Dataset& ds, const std::string& path,
                  const ColumnSpec& spec) {
  if (spec.covariates.size() != ds.dim())
    throw ConfigError("column spec has " +
                      std::to_string(spec.covariates.size()) +
                      " covariate names, dataset has " +
                      std::to_string(ds.dim()));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& name : spec.covariates) out << name << ',';
  out << spec.response << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto xv = ds.x(i);
    for (double v : xv) out << format_full(v) << ',';
    if (ds.observed(i)) out << format_full(ds.y(i));
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

double observed_fraction(const Dataset& ds) {
  return static_cast<double>(ds.observed_count()) /
         static_cast<double>(ds.size());
}

double observed_y_sd(const Dataset& ds) {
  std::size_t n = ds.observed_count();
  if (n < 2)
    throw ValidityError("need at least two observed responses for a sd");
  double mean = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.observed(i)) mean += ds.y(i);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.observed(i)) {
      double d = ds.y(i) - mean;
      ss += d * d;
    }
  return std::sqrt(ss / static_cast<double>(n - 1));
}

CovariateRange covariate_range(const Dataset& ds) {
  CovariateRange r;
  r.lo.assign(ds.dim(), std::numeric_limits<double>::infinity());
  r.hi.assign(ds.dim(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto xv = ds.x(i);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      r.lo[j] = std::min(r.lo[j], xv[j]);
      r.hi[j] = std::max(r.hi[j], xv[j]);
    }
  }
  return r;
}

}  // namespace modalms
