#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbelnet/types.hpp"

namespace nbelnet::cli {

/// Raised for unreadable or malformed input; maps to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  ///< column-major
  Index rows = 0;

  /// Position of `name` in the header, or -1.
  Index find(const std::string& name) const;
};

/// Comma-separated, '.' decimal, mandatory header, no missing values.
/// Diagnostics name the file, the 1-based line and the column.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& source);

struct LoadedData {
  Dataset data;
  std::vector<std::string> covariates;
  /// Contents of a `mu` column when present (excluded from the covariates).
  std::vector<double> mu;
};

/// Response from the `y` column (nonnegative integers), every other column
/// except `mu` as a covariate.
LoadedData load_dataset(const std::string& path, double theta);

/// Pretty JSON with sorted keys, floats as %.12e and non-finite floats as null.
std::string format_json(const nlohmann::json& value);

/// %.12e, or "nan"/"inf"/"-inf".
std::string format_double(double v);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace nbelnet::cli
