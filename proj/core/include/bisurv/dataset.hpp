#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bisurv/likelihood.hpp"

namespace bisurv {

// Delimited file with header cluster_id, member, time, status, x_*, v_*.
// Clusters keep the order of first appearance.
struct DatasetFile {
  Dataset data;
  std::vector<std::string> cluster_ids;
  std::vector<std::string> x_names;
  std::vector<std::string> v_names;
};

DatasetFile read_dataset(std::istream& in, char delimiter = ',');
DatasetFile read_dataset(const std::string& path, char delimiter = ',');

void write_dataset(std::ostream& out, const DatasetFile& file, char delimiter = ',');
void write_dataset(const std::string& path, const DatasetFile& file, char delimiter = ',');

// Default names x_1.., v_1.. and cluster ids 1..n.
DatasetFile make_dataset_file(Dataset data);

// v -> (v - mean) / sd, moments over all 2n individuals.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  bool empty() const { return mean.size() == 0; }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
};

Standardization fit_standardization(const Dataset& data);
Dataset standardize(const Dataset& data, const Standardization& s);

}  // namespace bisurv
