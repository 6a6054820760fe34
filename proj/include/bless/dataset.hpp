#pragma once

// Binary response data over a lattice plus subject covariates. Responses are
// stored voxel-major (all subjects contiguous per voxel) because every update
// walks within-voxel. On disk a dataset directory holds y.blsv (count = N
// uint8 frames), mask.blsv (count = 1 uint8) and covariates.csv.

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "bless/io.hpp"
#include "bless/lattice.hpp"

namespace bless {

struct Dataset {
  Eigen::MatrixXd X;  // N x P
  std::vector<std::string> covariates;
  std::vector<std::uint8_t> y;  // y[j * N + i]
  LatticeMask mask;
  NeighborGraph graph;

  std::int64_t n() const { return X.rows(); }
  std::int64_t p() const { return X.cols(); }
  std::int64_t m() const { return mask.n_voxels; }
  std::uint8_t y_at(std::int64_t i, std::int64_t j) const { return y[j * n() + i]; }
  const std::uint8_t* y_col(std::int64_t j) const { return y.data() + j * n(); }
};

struct Hyperparams {
  double nu1 = 10.0;
  double nu0 = std::exp(-20.0);
  double sigma0_sq = 100.0;
  double wishart_df = 0.0;  // 0 resolves to P at use sites

  double resolved_wishart_df(std::int64_t p) const {
    return wishart_df > 0.0 ? wishart_df : static_cast<double>(p);
  }
};

inline std::vector<std::string> csv_split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline void write_dataset(const std::string& dir, const Dataset& data) {
  Volume mask_vol;
  mask_vol.dims = data.mask.dims;
  mask_vol.count = 1;
  mask_vol.dtype = 0;
  mask_vol.u8 = data.mask.inside;
  write_volume(dir + "/mask.blsv", mask_vol);

  const std::int64_t lat = data.mask.lattice_size();
  Volume yv;
  yv.dims = data.mask.dims;
  yv.count = static_cast<std::uint32_t>(data.n());
  yv.dtype = 0;
  yv.u8.assign(static_cast<std::size_t>(lat) * data.n(), 0);
  for (std::int64_t i = 0; i < data.n(); ++i)
    for (std::int64_t j = 0; j < data.m(); ++j)
      yv.u8[i * lat + data.mask.full_of[j]] = data.y_at(i, j);
  write_volume(dir + "/y.blsv", yv);

  CsvWriter csv(dir + "/covariates.csv");
  csv.row(data.covariates);
  for (std::int64_t i = 0; i < data.n(); ++i) {
    std::vector<std::string> row;
    for (std::int64_t p = 0; p < data.p(); ++p) row.push_back(fmt_double(data.X(i, p)));
    csv.row(row);
  }
  csv.close();
}

inline Dataset read_dataset(const std::string& dir) {
  Dataset data;
  Volume mask_vol = read_volume(dir + "/mask.blsv");
  if (mask_vol.dtype != 0 || mask_vol.count != 1)
    throw config_error("mask.blsv must hold a single uint8 frame");
  data.mask = make_mask(mask_vol.dims, mask_vol.u8);
  data.graph = build_graph(data.mask);

  std::ifstream csv(dir + "/covariates.csv");
  if (!csv) throw config_error("cannot open " + dir + "/covariates.csv");
  std::string line;
  if (!std::getline(csv, line)) throw config_error("covariates.csv is empty");
  data.covariates = csv_split_line(line);
  std::vector<double> xs;
  std::int64_t n = 0;
  while (std::getline(csv, line)) {
    if (trim(line).empty()) continue;
    const auto fields = csv_split_line(line);
    if (fields.size() != data.covariates.size())
      throw config_error("covariates.csv row has wrong field count");
    for (const auto& f : fields) xs.push_back(std::stod(f));
    ++n;
  }
  const std::int64_t p = static_cast<std::int64_t>(data.covariates.size());
  data.X.resize(n, p);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t c = 0; c < p; ++c) data.X(i, c) = xs[i * p + c];

  Volume yv = read_volume(dir + "/y.blsv");
  if (yv.dtype != 0) throw config_error("y.blsv must be uint8");
  if (yv.dims != data.mask.dims) throw config_error("y.blsv does not match the mask dimensions");
  if (static_cast<std::int64_t>(yv.count) != n)
    throw config_error("y.blsv frame count does not match covariates.csv rows");
  const std::int64_t lat = data.mask.lattice_size();
  data.y.assign(static_cast<std::size_t>(n) * data.m(), 0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < data.m(); ++j)
      data.y[j * n + i] = yv.u8[i * lat + data.mask.full_of[j]] ? 1 : 0;
  return data;
}

// Embed a dense per-voxel field into a full-lattice frame (zeros outside).
inline std::vector<double> embed_dense(const LatticeMask& mask,
                                       const Eigen::VectorXd& dense) {
  std::vector<double> full(static_cast<std::size_t>(mask.lattice_size()), 0.0);
  for (std::int64_t j = 0; j < mask.n_voxels; ++j) full[mask.full_of[j]] = dense[j];
  return full;
}

}  // namespace bless
