#pragma once

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overparam/csv.hpp"
#include "overparam/errors.hpp"
#include "overparam/rng.hpp"

namespace overparam {

/// n unit-norm input vectors (one per row of X) with real labels y.
struct Dataset {
  Eigen::MatrixXd X;  // n x d, ||row||_2 = 1
  Eigen::VectorXd y;  // n labels, |y_i| expected O(1)

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

inline void validate(const Dataset& ds) {
  if (ds.y.size() != ds.n())
    throw InputError("dataset has " + std::to_string(ds.n()) + " rows but " +
                     std::to_string(ds.y.size()) + " labels");
  if (!ds.X.allFinite() || !ds.y.allFinite())
    throw InputError("dataset contains non-finite values");
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    double norm = ds.X.row(i).norm();
    if (std::abs(norm - 1.0) > 1e-10)
      throw InputError("row " + std::to_string(i) + " has norm " +
                       std::to_string(norm) + ", expected 1");
    if (std::abs(ds.y[i]) > 10.0)
      std::cerr << "warning: label " << i << " has |y| = " << std::abs(ds.y[i])
                << " > 10; the analysis assumes O(1) labels\n";
  }
}

/// n orthonormal inputs in d = n dimensions: the standard basis carried
/// through a random signed permutation. Signed permutations are orthogonal
/// maps whose images stay exactly representable, so pairwise inner products
/// are exactly {0, 1} in floating point; the closed-form Gram oracle and the
/// constant estimates depend on that exactness. Labels are +-1 coin flips.
inline Dataset gen_orthogonal(Eigen::Index n, RngSeed seed) {
  if (n < 1) throw InputError("gen_orthogonal: n must be >= 1");
  SplitRng rng(seed);
  auto perm = rng.permutation(n);
  Dataset ds;
  ds.X = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    ds.X(i, perm[static_cast<std::size_t>(i)]) = rng.sign();
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) ds.y[i] = rng.sign();
  return ds;
}

/// n i.i.d. samples x_i = g / ||g||_2 with g ~ N(0, I_d). Labels +-1.
inline Dataset gen_gaussian_sphere(Eigen::Index n, Eigen::Index d, RngSeed seed) {
  if (n < 1) throw InputError("gen_gaussian_sphere: n must be >= 1");
  if (d < 1) throw InputError("gen_gaussian_sphere: d must be >= 1");
  SplitRng rng(seed);
  Dataset ds;
  ds.X.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd g = rng.gaussian_vector(d);
    double norm = g.norm();
    while (norm <= 1e-12) {  // astronomically unlikely, but keep it total
      g = rng.gaussian_vector(d);
      norm = g.norm();
    }
    ds.X.row(i) = g.transpose() / norm;
  }
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) ds.y[i] = rng.sign();
  return ds;
}

/// Smallest theta with |x_i^T x_j| <= theta / sqrt(n) for all i != j,
/// i.e. sqrt(n) * max_{i != j} |x_i^T x_j|.
inline double theta(const Dataset& ds) {
  if (ds.n() < 2) throw InputError("theta requires at least 2 samples");
  Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  double max_off = 0.0;
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index j = i + 1; j < ds.n(); ++j)
      max_off = std::max(max_off, std::abs(gram(i, j)));
  return std::sqrt(static_cast<double>(ds.n())) * max_off;
}

/// CSV with header `x0,...,x{d-1},y`, decimal floats, '\n' endings.
inline void save_csv(const Dataset& ds, const std::string& path) {
  auto out = open_output(path);
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out << "x" << j << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j)
      out << fmt_double(ds.X(i, j)) << ",";
    out << fmt_double(ds.y[i]) << "\n";
  }
}

/// Loads a dataset CSV. Rows whose norm is within 1e-6 of 1 are snapped back
/// to exact unit norm (round-trip noise); rows further out are rejected
/// unless `normalize` is set. Zero rows cannot be normalized and always fail.
inline Dataset load_csv(const std::string& path, bool normalize = false) {
  auto in = open_input(path);
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "y")
    throw ParseError("expected header x0,...,x{d-1},y", 1);
  auto d = static_cast<Eigen::Index>(header.size() - 1);
  for (Eigen::Index j = 0; j < d; ++j)
    if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j))
      throw ParseError("expected header column x" + std::to_string(j) +
                           ", got '" + header[static_cast<std::size_t>(j)] + "'",
                       1);

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != d + 1)
      throw ParseError("expected " + std::to_string(d + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    Eigen::VectorXd x(d);
    for (Eigen::Index j = 0; j < d; ++j)
      x[j] = parse_double_field(fields[static_cast<std::size_t>(j)], line_no);
    double label = parse_double_field(fields[static_cast<std::size_t>(d)], line_no);

    double norm = x.norm();
    if (norm <= 1e-12)
      throw InputError("row at line " + std::to_string(line_no) +
                       " is (near) zero and cannot be normalized");
    if (std::abs(norm - 1.0) > 1e-6 && !normalize)
      throw InputError("row at line " + std::to_string(line_no) + " has norm " +
                       std::to_string(norm) +
                       "; rerun with --normalize to rescale");
    rows.push_back(x / norm);
    labels.push_back(label);
  }
  if (rows.empty()) throw ParseError("no data rows in '" + path + "'", line_no);

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), d);
  ds.y.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    ds.y[static_cast<Eigen::Index>(i)] = labels[i];
  }
  validate(ds);
  return ds;
}

}  // namespace overparam
