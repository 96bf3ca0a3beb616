#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsim {

/// Malformed or unreadable input data (CSV schema, cell values, I/O).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Covariates {
  std::vector<std::uint8_t> age_group;  // 0 = at most 65, 1 = older
  std::vector<std::uint8_t> gender;     // 0 = female, 1 = male

  bool operator==(const Covariates&) const = default;
};

/// Binary feature matrix with {0,1} labels, optional demographics and ids.
struct Dataset {
  std::size_t n_features = 0;
  std::vector<std::uint8_t> features;  // row-major, size() * n_features
  std::vector<std::uint8_t> labels;
  std::optional<Covariates> covariates;
  std::optional<std::vector<std::int64_t>> ids;

  std::size_t size() const { return labels.size(); }

  const std::uint8_t* row(std::size_t i) const {
    return features.data() + i * n_features;
  }

  void reserve_rows(std::size_t n) {
    features.reserve(n * n_features);
    labels.reserve(n);
    if (covariates) {
      covariates->age_group.reserve(n);
      covariates->gender.reserve(n);
    }
    if (ids) ids->reserve(n);
  }

  /// Copies row i of src onto the end of this dataset. Schemas must match.
  void append_row(const Dataset& src, std::size_t i) {
    if (src.n_features != n_features || src.covariates.has_value() != covariates.has_value() ||
        src.ids.has_value() != ids.has_value())
      throw std::invalid_argument("append_row: dataset schema mismatch");
    features.insert(features.end(), src.row(i), src.row(i) + n_features);
    labels.push_back(src.labels[i]);
    if (covariates) {
      covariates->age_group.push_back(src.covariates->age_group[i]);
      covariates->gender.push_back(src.covariates->gender[i]);
    }
    if (ids) ids->push_back((*src.ids)[i]);
  }

  /// Empty dataset with the same column schema as this one.
  Dataset empty_like() const {
    Dataset out;
    out.n_features = n_features;
    if (covariates) out.covariates = Covariates{};
    if (ids) out.ids = std::vector<std::int64_t>{};
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    cells.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::uint8_t parse_binary_cell(const std::string& cell, std::size_t data_row,
                                      const std::string& column) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  throw DataError("expected 0 or 1 at row " + std::to_string(data_row) + ", column " +
                  column + ", got '" + cell + "'");
}

}  // namespace detail

/// Reads a flattened one-row-per-patient CSV. Reserved columns (matched by
/// header name, any position): SUBJECT_ID (integer, optional), AGE_GROUP and
/// GENDER ({0,1}, optional but paired), MORTALITY ({0,1}, required). Every
/// other column is a binary feature. Row numbers in errors are 1-based data
/// rows (the header is row 0).
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: '" + path + "'");
  const auto header = detail::split_csv_line(line);

  constexpr std::size_t kMissing = static_cast<std::size_t>(-1);
  std::size_t id_col = kMissing, age_col = kMissing, gender_col = kMissing,
              label_col = kMissing;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "SUBJECT_ID")
      id_col = c;
    else if (header[c] == "AGE_GROUP")
      age_col = c;
    else if (header[c] == "GENDER")
      gender_col = c;
    else if (header[c] == "MORTALITY")
      label_col = c;
    else
      feature_cols.push_back(c);
  }
  if (label_col == kMissing) throw DataError("missing MORTALITY column in '" + path + "'");
  if ((age_col == kMissing) != (gender_col == kMissing))
    throw DataError("AGE_GROUP and GENDER must both be present or both absent");
  if (feature_cols.empty()) throw DataError("no feature columns in '" + path + "'");

  Dataset ds;
  ds.n_features = feature_cols.size();
  if (age_col != kMissing) ds.covariates = Covariates{};
  if (id_col != kMissing) ds.ids = std::vector<std::int64_t>{};

  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++data_row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(data_row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (const auto c : feature_cols)
      ds.features.push_back(detail::parse_binary_cell(cells[c], data_row, header[c]));
    ds.labels.push_back(detail::parse_binary_cell(cells[label_col], data_row, "MORTALITY"));
    if (ds.covariates) {
      ds.covariates->age_group.push_back(
          detail::parse_binary_cell(cells[age_col], data_row, "AGE_GROUP"));
      ds.covariates->gender.push_back(
          detail::parse_binary_cell(cells[gender_col], data_row, "GENDER"));
    }
    if (ds.ids) {
      try {
        std::size_t pos = 0;
        const long long v = std::stoll(cells[id_col], &pos);
        if (pos != cells[id_col].size()) throw std::invalid_argument("trailing");
        ds.ids->push_back(v);
      } catch (const std::exception&) {
        throw DataError("bad SUBJECT_ID at row " + std::to_string(data_row) + ": '" +
                        cells[id_col] + "'");
      }
    }
  }
  if (ds.size() == 0) throw DataError("empty dataset: '" + path + "' has a header but no rows");
  return ds;
}

/// Inverse of load_csv. Column order: SUBJECT_ID, AGE_GROUP, GENDER, features
/// F0..F{D-1}, MORTALITY; optional columns are omitted when absent.
inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  if (ds.ids) out << "SUBJECT_ID,";
  if (ds.covariates) out << "AGE_GROUP,GENDER,";
  for (std::size_t j = 0; j < ds.n_features; ++j) out << 'F' << j << ',';
  out << "MORTALITY\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.ids) out << (*ds.ids)[i] << ',';
    if (ds.covariates)
      out << int(ds.covariates->age_group[i]) << ',' << int(ds.covariates->gender[i]) << ',';
    const auto* r = ds.row(i);
    for (std::size_t j = 0; j < ds.n_features; ++j) out << int(r[j]) << ',';
    out << int(ds.labels[i]) << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

struct DatasetSummary {
  std::size_t examples = 0;
  std::size_t features = 0;
  std::size_t labels_zero = 0, labels_one = 0;
  bool has_covariates = false;
  std::size_t age_zero = 0, age_one = 0;
  std::size_t gender_zero = 0, gender_one = 0;
  bool has_ids = false;
};

inline DatasetSummary summarize(const Dataset& ds) {
  DatasetSummary s;
  s.examples = ds.size();
  s.features = ds.n_features;
  for (const auto y : ds.labels) (y ? s.labels_one : s.labels_zero)++;
  s.has_covariates = ds.covariates.has_value();
  if (ds.covariates) {
    for (const auto a : ds.covariates->age_group) (a ? s.age_one : s.age_zero)++;
    for (const auto g : ds.covariates->gender) (g ? s.gender_one : s.gender_zero)++;
  }
  s.has_ids = ds.ids.has_value();
  return s;
}

inline std::string format_summary(const DatasetSummary& s) {
  std::ostringstream out;
  out << "examples    " << s.examples << "\n";
  out << "features    " << s.features << " binary columns\n";
  out << "MORTALITY   0: " << s.labels_zero << "  1: " << s.labels_one << "\n";
  if (s.has_covariates) {
    out << "GENDER      0: " << s.gender_zero << "  1: " << s.gender_one << "\n";
    out << "AGE_GROUP   0: " << s.age_zero << "  1: " << s.age_one << "\n";
  }
  if (s.has_ids) out << "SUBJECT_ID  present\n";
  return out.str();
}

}  // namespace fedsim
