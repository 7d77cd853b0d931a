#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "skilladapt/kmp/types.hpp"

namespace skilladapt::kmp {

struct GaussianComponent {
  double prior = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct GmmModel {
  std::vector<GaussianComponent> components;
  // Mean per-sample log-likelihood after each EM iteration.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;

  int dims() const { return components.empty() ? 0 : static_cast<int>(components.front().mean.size()); }
};

struct GmmOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;        // on mean per-sample log-likelihood
  double covariance_floor = 1e-6;
  std::uint64_t seed = 0x5eed;
  int kmeans_iterations = 50;
};

// EM over rows of `data` (one sample per row), k-means++ initialised.
GmmModel fit_gmm(const Eigen::MatrixXd& data, int n_components, const GmmOptions& options = {});

// Time-augmented fit: each row is [t, x, y, z, qw, qx, qy, qz].
GmmModel fit_gmm(std::span<const Demonstration> demos, int n_components,
                 const GmmOptions& options = {});

Eigen::MatrixXd time_augmented_data(std::span<const Demonstration> demos);

double mean_log_likelihood(const GmmModel& gmm, const Eigen::MatrixXd& data);

struct GmrResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Conditions the mixture on its first `input.size()` dimensions.
GmrResult gmr(const GmmModel& gmm, const Eigen::VectorXd& input);

// Equispaced s in [0, 1]; requires a time-augmented 8-D mixture.
std::vector<ReferencePoint> gmr_reference(const GmmModel& gmm, int n_points);

}  // namespace skilladapt::kmp
