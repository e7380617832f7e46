#pragma once

// Long-format assay data (lab, dose, response) with a crossed lab x dose
// cell layout, CSV ingestion and response transforms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "trendsim/contrasts.hpp"
#include "trendsim/detail/format.hpp"
#include "trendsim/errors.hpp"

namespace trendsim {

enum class Transform { None, Log, Sqrt, FreemanTukey, Custom };

inline std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::None: return "none";
    case Transform::Log: return "log";
    case Transform::Sqrt: return "sqrt";
    case Transform::FreemanTukey: return "freeman-tukey";
    case Transform::Custom: return "custom";
  }
  return "none";
}

inline Transform parse_transform(std::string_view s) {
  for (auto t : {Transform::None, Transform::Log, Transform::Sqrt, Transform::FreemanTukey}) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown transform '" + std::string(s) + "'");
}

struct Observation {
  std::size_t lab = 0;
  std::size_t dose = 0;
  double response = 0.0;
  std::size_t source_row = 0;  // 1-based data row in the input file, 0 if synthetic
};

struct Dataset {
  std::vector<Observation> observations;
  FactorLevels lab_factor;
  FactorLevels dose_factor;
  std::vector<double> dose_values;
  Transform transform_applied = Transform::None;

  std::size_t lab_count() const { return lab_factor.size(); }
  std::size_t dose_count() const { return dose_factor.size(); }
  std::size_t cell_count() const { return lab_count() * dose_count(); }
  std::size_t size() const { return observations.size(); }

  // lab-major cell index
  std::size_t cell_index(std::size_t lab, std::size_t dose) const { return lab * dose_count() + dose; }

  std::string cell_label(std::size_t cell) const {
    return lab_factor.levels[cell / dose_count()] + ":" + dose_factor.levels[cell % dose_count()];
  }

  std::vector<int> cell_sizes() const {
    std::vector<int> n(cell_count(), 0);
    for (const auto& o : observations) ++n[cell_index(o.lab, o.dose)];
    return n;
  }
};

struct CsvSchema {
  std::string lab_column = "lab";
  std::string dose_column = "conc";
  std::string response_column = "response";
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record; double-quoted fields may contain commas and "".
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + s.size() && std::isfinite(out);
}

}  // namespace detail

// Builds a Dataset from per-observation lab labels and numeric doses. Labs
// keep first-appearance order; doses are sorted ascending, the smallest is
// the control. Every cell of the crossed layout must be present.
inline Dataset make_dataset(const std::vector<std::string>& labs, const std::vector<double>& doses,
                            const std::vector<double>& responses, const std::vector<std::size_t>& source_rows = {}) {
  if (labs.size() != doses.size() || labs.size() != responses.size()) {
    throw DataError("lab, dose and response columns differ in length");
  }
  if (labs.empty()) throw DataError("dataset has no observations");

  std::vector<std::string> lab_levels;
  std::map<std::string, std::size_t> lab_index;
  for (const auto& l : labs) {
    if (lab_index.emplace(l, lab_levels.size()).second) lab_levels.push_back(l);
  }
  std::vector<double> dose_values(doses);
  std::sort(dose_values.begin(), dose_values.end());
  dose_values.erase(std::unique(dose_values.begin(), dose_values.end()), dose_values.end());

  Dataset d;
  d.dose_values = dose_values;
  d.observations.reserve(labs.size());
  for (std::size_t i = 0; i < labs.size(); ++i) {
    const std::size_t row = source_rows.empty() ? 0 : source_rows[i];
    if (!std::isfinite(responses[i])) {
      throw DataError("non-finite response" + (row ? " at row " + std::to_string(row) : std::string{}));
    }
    const auto dose_it = std::lower_bound(dose_values.begin(), dose_values.end(), doses[i]);
    d.observations.push_back(Observation{lab_index.at(labs[i]),
                                         static_cast<std::size_t>(dose_it - dose_values.begin()), responses[i], row});
  }

  std::vector<int> lab_sizes(lab_levels.size(), 0), dose_sizes(dose_values.size(), 0);
  for (const auto& o : d.observations) {
    ++lab_sizes[o.lab];
    ++dose_sizes[o.dose];
  }
  d.lab_factor = FactorLevels{"lab", lab_levels, lab_sizes, false};
  d.dose_factor = FactorLevels{"dose", {}, dose_sizes, true};
  for (double v : dose_values) d.dose_factor.levels.push_back(detail::format_number(v));

  const auto n = d.cell_sizes();
  for (std::size_t c = 0; c < n.size(); ++c) {
    if (n[c] == 0) {
      throw DataError("empty cell (lab " + d.lab_factor.levels[c / d.dose_count()] + ", dose " +
                      d.dose_factor.levels[c % d.dose_count()] + ") in the crossed layout");
    }
  }
  if (lab_levels.size() < 1 || dose_values.size() < 2) {
    throw DataError("need at least 2 dose levels, got " + std::to_string(dose_values.size()));
  }
  return d;
}

inline Dataset parse_csv(std::istream& in, const CsvSchema& schema = {}, const std::string& source = "<input>") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file, expected a header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = detail::split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t lab_col = column(schema.lab_column);
  const std::size_t dose_col = column(schema.dose_column);
  const std::size_t resp_col = column(schema.response_column);
  const std::size_t needed = std::max({lab_col, dose_col, resp_col});

  std::vector<std::string> labs;
  std::vector<double> doses, responses;
  std::vector<std::size_t> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = source + ": row " + std::to_string(row);
    if (fields.size() <= needed) throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    double dose = 0.0, resp = 0.0;
    if (!detail::parse_double(fields[dose_col], dose)) {
      throw DataError(where + ": cannot parse dose '" + fields[dose_col] + "'");
    }
    if (!detail::parse_double(fields[resp_col], resp)) {
      throw DataError(where + ": cannot parse response '" + fields[resp_col] + "'");
    }
    if (fields[lab_col].empty()) throw DataError(where + ": empty lab label");
    labs.push_back(fields[lab_col]);
    doses.push_back(dose);
    responses.push_back(resp);
    rows.push_back(row);
  }
  try {
    return make_dataset(labs, doses, responses, rows);
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return parse_csv(in, schema, path);
}

inline void write_csv(std::ostream& out, const Dataset& d, const CsvSchema& schema = {}) {
  out << schema.lab_column << ',' << schema.dose_column << ',' << schema.response_column << '\n';
  for (const auto& o : d.observations) {
    out << d.lab_factor.levels[o.lab] << ',' << d.dose_factor.levels[o.dose] << ','
        << detail::format_number(o.response) << '\n';
  }
}

// Elementwise response transform with a caller-supplied function. The
// function must return a finite value or throw.
inline Dataset apply_transform(Dataset d, const std::function<double(double)>& fn) {
  for (auto& o : d.observations) {
    const double y = fn(o.response);
    if (!std::isfinite(y)) {
      throw DataError("transform undefined for response " + detail::format_number(o.response) +
                      (o.source_row ? " at row " + std::to_string(o.source_row) : std::string{}));
    }
    o.response = y;
  }
  d.transform_applied = Transform::Custom;
  return d;
}

inline Dataset apply_transform(Dataset d, Transform t) {
  auto check = [](const Observation& o, bool ok, const char* what) {
    if (!ok) {
      throw DataError(std::string(what) + " of " + detail::format_number(o.response) +
                      (o.source_row ? " at row " + std::to_string(o.source_row) : std::string{}));
    }
  };
  switch (t) {
    case Transform::None:
      return d;
    case Transform::Log:
      for (auto& o : d.observations) {
        check(o, o.response > 0.0, "log transform of nonpositive value");
        o.response = std::log(o.response);
      }
      break;
    case Transform::Sqrt:
      for (auto& o : d.observations) {
        check(o, o.response >= 0.0, "sqrt transform of negative value");
        o.response = std::sqrt(o.response);
      }
      break;
    case Transform::FreemanTukey:
      for (auto& o : d.observations) {
        check(o, o.response >= 0.0, "Freeman-Tukey transform of negative value");
        o.response = std::sqrt(o.response) + std::sqrt(o.response + 1.0);
      }
      break;
    case Transform::Custom:
      throw std::invalid_argument("Transform::Custom needs a function; use the callable overload");
  }
  d.transform_applied = t;
  return d;
}

}  // namespace trendsim
