#include "bisurv/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& field, const std::string& column, int line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw DataError("column '" + column + "': cannot parse '" + field + "' as a number", line);
  }
  if (!std::isfinite(value)) throw DataError("column '" + column + "' must be finite", line);
  return value;
}

int parse_flag(const std::string& field, const std::string& column, int line, int lo, int hi) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || value < lo || value > hi) {
    throw DataError("column '" + column + "' must be " + std::to_string(lo) + " or " + std::to_string(hi) +
                        ", got '" + field + "'",
                    line);
  }
  return value;
}

struct Partial {
  ClusterObservation obs;
  std::array<bool, 2> seen{false, false};
  int first_line = 0;
};

}  // namespace

DatasetFile read_dataset(std::istream& in, char delimiter) {
  DatasetFile file;
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split(line, delimiter);
      break;
    }
  }
  if (header.empty()) throw DataError("empty dataset file", line_no);
  const std::vector<std::string> fixed{"cluster_id", "member", "time", "status"};
  if (header.size() < fixed.size()) throw DataError("header must start with cluster_id, member, time, status", line_no);
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    if (header[k] != fixed[k]) {
      throw DataError("header column " + std::to_string(k + 1) + " must be '" + fixed[k] + "', got '" + header[k] + "'",
                      line_no);
    }
  }
  for (std::size_t k = fixed.size(); k < header.size(); ++k) {
    const std::string& h = header[k];
    if (h.rfind("x_", 0) == 0) {
      if (!file.v_names.empty()) throw DataError("x_ columns must precede v_ columns", line_no);
      file.x_names.push_back(h);
    } else if (h.rfind("v_", 0) == 0) {
      file.v_names.push_back(h);
    } else {
      throw DataError("unexpected column '" + h + "' (covariates need an x_ or v_ prefix)", line_no);
    }
  }
  if (file.v_names.empty()) throw DataError("at least one v_ column is required", line_no);
  const auto p = static_cast<Eigen::Index>(file.x_names.size());
  const auto q = static_cast<Eigen::Index>(file.v_names.size());

  std::map<std::string, std::size_t> index_of;
  std::vector<Partial> partial;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter);
    if (fields.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()),
                      line_no);
    }
    const std::string& id = fields[0];
    if (id.empty()) throw DataError("empty cluster_id", line_no);
    const int member = parse_flag(fields[1], "member", line_no, 1, 2);
    const double time = parse_double(fields[2], "time", line_no);
    if (time < 0.0) throw DataError("time must be nonnegative", line_no);
    const int status = parse_flag(fields[3], "status", line_no, 0, 1);

    auto [it, inserted] = index_of.try_emplace(id, partial.size());
    if (inserted) {
      partial.emplace_back();
      partial.back().first_line = line_no;
      file.cluster_ids.push_back(id);
    }
    Partial& c = partial[it->second];
    const int j = member - 1;
    if (c.seen[j]) {
      throw DataError("cluster_id '" + id + "' has more than one row for member " + std::to_string(member) +
                          " (each cluster needs exactly members 1 and 2)",
                      line_no);
    }
    c.seen[j] = true;
    c.obs.y[j] = time;
    c.obs.delta[j] = status;
    c.obs.x[j].resize(p);
    c.obs.v[j].resize(q);
    for (Eigen::Index k = 0; k < p; ++k) {
      c.obs.x[j][k] = parse_double(fields[4 + k], file.x_names[k], line_no);
    }
    for (Eigen::Index k = 0; k < q; ++k) {
      c.obs.v[j][k] = parse_double(fields[4 + p + k], file.v_names[k], line_no);
    }
  }
  if (partial.empty()) throw DataError("dataset has no observations", line_no);
  for (std::size_t i = 0; i < partial.size(); ++i) {
    if (!partial[i].seen[0] || !partial[i].seen[1]) {
      throw DataError("cluster_id '" + file.cluster_ids[i] + "' is missing member " +
                          std::string(partial[i].seen[0] ? "2" : "1") + " (each cluster needs exactly members 1 and 2)",
                      partial[i].first_line);
    }
    file.data.push_back(std::move(partial[i].obs));
  }
  return file;
}

DatasetFile read_dataset(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'", 0);
  return read_dataset(in, delimiter);
}

void write_dataset(std::ostream& out, const DatasetFile& file, char delimiter) {
  out << "cluster_id" << delimiter << "member" << delimiter << "time" << delimiter << "status";
  for (const auto& n : file.x_names) out << delimiter << n;
  for (const auto& n : file.v_names) out << delimiter << n;
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < file.data.size(); ++i) {
    const auto& c = file.data[i];
    for (int j = 0; j < 2; ++j) {
      out << file.cluster_ids[i] << delimiter << (j + 1) << delimiter << c.y[j] << delimiter << c.delta[j];
      for (Eigen::Index k = 0; k < c.x[j].size(); ++k) out << delimiter << c.x[j][k];
      for (Eigen::Index k = 0; k < c.v[j].size(); ++k) out << delimiter << c.v[j][k];
      out << '\n';
    }
  }
}

void write_dataset(const std::string& path, const DatasetFile& file, char delimiter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'", 0);
  write_dataset(out, file, delimiter);
}

DatasetFile make_dataset_file(Dataset data) {
  DatasetFile file;
  if (!data.empty()) {
    for (Eigen::Index k = 0; k < data.front().x[0].size(); ++k) file.x_names.push_back("x_" + std::to_string(k + 1));
    for (Eigen::Index k = 0; k < data.front().v[0].size(); ++k) file.v_names.push_back("v_" + std::to_string(k + 1));
  }
  for (std::size_t i = 0; i < data.size(); ++i) file.cluster_ids.push_back(std::to_string(i + 1));
  file.data = std::move(data);
  return file;
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& v) const {
  if (empty()) return v;
  return (v - mean).cwiseQuotient(sd);
}

Standardization fit_standardization(const Dataset& data) {
  validate_dataset(data);
  const int q = index_dim(data);
  Standardization s;
  s.mean = Eigen::VectorXd::Zero(q);
  s.sd = Eigen::VectorXd::Zero(q);
  const double n = 2.0 * static_cast<double>(data.size());
  for (const auto& c : data) s.mean += c.v[0] + c.v[1];
  s.mean /= n;
  for (const auto& c : data) {
    for (int j = 0; j < 2; ++j) s.sd += (c.v[j] - s.mean).array().square().matrix();
  }
  s.sd = (s.sd / (n - 1.0)).cwiseSqrt();
  for (int k = 0; k < q; ++k) {
    if (!(s.sd[k] > 0.0)) throw DataError("nonlinear covariate " + std::to_string(k + 1) + " is constant", 0);
  }
  return s;
}

Dataset standardize(const Dataset& data, const Standardization& s) {
  Dataset out = data;
  for (auto& c : out) {
    for (int j = 0; j < 2; ++j) c.v[j] = s.apply(c.v[j]);
  }
  return out;
}

}  // namespace bisurv
