#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "ddlpv/lpv.hpp"

namespace ddlpv {

/// Measured records (u_k, p_k, x_k), one column per sample.
struct DataDictionary {
  Mat u;
  Mat p;
  Mat x;
  std::optional<unsigned long long> seed;

  int nd() const { return static_cast<int>(x.cols()); }
  int nx() const { return static_cast<int>(x.rows()); }
  int nu() const { return static_cast<int>(u.rows()); }
  int np() const { return static_cast<int>(p.rows()); }
  void validate() const;
};

struct DataMatrices {
  Mat u_mat;
  Mat up_mat;
  Mat x_mat;
  Mat xp_mat;
  Mat xplus;
  Mat dp;

  int nx() const { return static_cast<int>(x_mat.rows()); }
  int nu() const { return static_cast<int>(u_mat.rows()); }
  int np() const {
    return x_mat.rows() == 0 ? 0 : static_cast<int>(xp_mat.rows() / x_mat.rows());
  }
  /// Number of regressor columns, N_d - 1.
  int cols() const { return static_cast<int>(dp.cols()); }
};

struct NoisyDictionary {
  Mat u;
  Mat p;
  Mat z;
  std::optional<Mat> true_x;
  std::optional<Mat> eps;
  std::optional<unsigned long long> seed;

  int nd() const { return static_cast<int>(z.cols()); }
  void validate() const;
};

struct NoiseMatrices {
  Mat e;
  Mat ep;
  Mat eplus;
};

struct NoisyMatrices {
  DataMatrices data;
  std::optional<NoiseMatrices> noise;
};

struct PeReport {
  int rank = 0;
  int required = 0;
  bool is_pe = false;
};

DataMatrices build_matrices(const DataDictionary& d);
PeReport check_pe(const DataMatrices& dm, double tol = 1e-8);

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Simulates the plant under i.i.d. uniform u and p. Produces n_cols + 1
/// records so that the data matrices have n_cols columns.
DataDictionary excite(const LpvSs& sys, int n_cols, unsigned long long seed,
                      Interval u_range = {}, Interval p_range = {},
                      const std::optional<Vec>& x0 = std::nullopt);

/// Adds zero-mean Gaussian noise with the given standard deviation per
/// component to the states.
NoisyDictionary add_noise(const DataDictionary& d, double stddev,
                          unsigned long long seed);

NoisyMatrices build_noisy_matrices(const NoisyDictionary& nd);

/// Smallest eps with R R^T <= eps Z+ Z+^T, R = 𝒜 [E; E^p] - E+.
double epsilon_bound(const LpvSs& sys, const NoisyDictionary& nd);

/// CSV with header "k,u_1..,p_1..,x_1.." (or z_ columns for noisy data).
std::string to_csv(const DataDictionary& d);
std::string to_csv(const NoisyDictionary& d);
DataDictionary dictionary_from_csv(const std::string& text);
NoisyDictionary noisy_dictionary_from_csv(const std::string& text);

nlohmann::json to_json(const DataDictionary& d);
DataDictionary dictionary_from_json(const nlohmann::json& j);

/// Loads a dictionary from a .csv or .json file.
DataDictionary load_dictionary(const std::string& path);
NoisyDictionary load_noisy_dictionary(const std::string& path);
/// True when the file stores noisy observations (z_ columns or "z" field).
bool file_is_noisy(const std::string& path);

}  // namespace ddlpv
