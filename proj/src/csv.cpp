#include "robustmeta/csv.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace robustmeta {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, int line_no, const std::string& column) {
  const std::string s = strip(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                             ": column '" + column + "' is not a number: '" + raw + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file, header required");
  const auto header = split_csv_line(strip(line));

  int id_col = -1, y_col = -1, s2_col = -1, se_col = -1;
  std::vector<int> x_cols;
  std::vector<std::string> x_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string h = strip(header[c]);
    if (h == "id") id_col = static_cast<int>(c);
    else if (h == "y") y_col = static_cast<int>(c);
    else if (h == "s2") s2_col = static_cast<int>(c);
    else if (h == "se") se_col = static_cast<int>(c);
    else if (h.rfind("x_", 0) == 0) {
      x_cols.push_back(static_cast<int>(c));
      x_names.push_back(h);
    } else {
      throw std::runtime_error("'" + path + "': unknown column '" + h + "'");
    }
  }
  if (id_col < 0 || y_col < 0) {
    throw std::runtime_error("'" + path + "': header must contain 'id' and 'y'");
  }
  if ((s2_col < 0) == (se_col < 0)) {
    throw std::runtime_error("'" + path + "': exactly one of 's2' or 'se' is required");
  }

  Dataset data;
  data.name = std::filesystem::path(path).stem().string();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = strip(line);
    if (trimmed.empty()) continue;
    const auto fields = split_csv_line(trimmed);
    if (fields.size() != header.size()) {
      throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, found " + std::to_string(fields.size()));
    }
    Study s;
    s.id = strip(fields[static_cast<std::size_t>(id_col)]);
    s.y = parse_double(fields[static_cast<std::size_t>(y_col)], line_no, "y");
    if (s2_col >= 0) {
      s.s2 = parse_double(fields[static_cast<std::size_t>(s2_col)], line_no, "s2");
    } else {
      const double se = parse_double(fields[static_cast<std::size_t>(se_col)], line_no, "se");
      s.s2 = se * se;
    }
    if (!(s.s2 > 0.0) || !std::isfinite(s.s2)) {
      throw std::runtime_error("validation error at line " + std::to_string(line_no) +
                               ": study '" + s.id + "' has non-positive variance");
    }
    if (!std::isfinite(s.y)) {
      throw std::runtime_error("validation error at line " + std::to_string(line_no) +
                               ": study '" + s.id + "' has non-finite effect size");
    }
    data.studies.push_back(std::move(s));
    if (!x_cols.empty()) {
      std::vector<double> row;
      row.reserve(x_cols.size());
      for (std::size_t j = 0; j < x_cols.size(); ++j) {
        row.push_back(parse_double(fields[static_cast<std::size_t>(x_cols[j])], line_no,
                                   x_names[j]));
      }
      data.covariates.push_back(std::move(row));
    }
  }
  data.covariate_names = x_names;
  data.validate();
  return data;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "id,y,s2";
  std::vector<std::string> x_names = data.covariate_names;
  if (x_names.empty() && data.has_covariates()) {
    for (std::size_t j = 0; j < data.n_covariates(); ++j) {
      x_names.push_back("x_" + std::to_string(j + 1));
    }
  }
  for (const auto& n : x_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    out << s.id << ',' << format_double(s.y) << ',' << format_double(s.s2);
    if (data.has_covariates()) {
      for (double x : data.covariates[i]) out << ',' << format_double(x);
    }
    out << '\n';
  }
}

}  // namespace robustmeta
