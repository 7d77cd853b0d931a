#include "skilladapt/kmp/gmm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::kmp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Log-density of every row of `data` under N(mean, cov).
Eigen::VectorXd log_gaussian(const Eigen::MatrixXd& data, const Eigen::VectorXd& mean,
                             const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularComponent, "component covariance is not positive definite");
  }
  const Eigen::MatrixXd centered = (data.rowwise() - mean.transpose()).transpose();
  const Eigen::MatrixXd z = llt.matrixL().solve(centered);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double d = static_cast<double>(mean.size());
  return (-0.5 * (d * kLog2Pi + log_det + z.colwise().squaredNorm().array())).matrix().transpose();
}

Eigen::MatrixXd kmeans_pp(const Eigen::MatrixXd& data, int k, std::mt19937_64& rng,
                          int iterations) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centers(k, data.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = data.row(pick(rng));
  Eigen::VectorXd d2 = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target <= 0.0) {
          chosen = i;
          break;
        }
        chosen = i;
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = data.row(chosen);
    d2 = d2.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> label(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - data.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (label[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        label[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(label[static_cast<std::size_t>(i)]) += data.row(i);
      counts(label[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
    }
    if (!changed) break;
  }
  return centers;
}

}  // namespace

Eigen::MatrixXd time_augmented_data(std::span<const Demonstration> demos) {
  std::size_t rows = 0;
  for (const auto& d : demos) rows += d.samples.size();
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows), 1 + kPoseDim);
  Eigen::Index r = 0;
  Vector4d anchor = Vector4d::Zero();
  for (const auto& demo : demos) {
    Vector4d prev = demo.samples.front().quat;
    if (anchor.isZero()) anchor = prev;
    double sign = prev.dot(anchor) < 0.0 ? -1.0 : 1.0;
    for (const auto& s : demo.samples) {
      if (s.quat.dot(prev) < 0.0) sign = -sign;
      prev = s.quat;
      data(r, 0) = s.t;
      data.block<1, 3>(r, 1) = s.pos.transpose();
      data.block<1, 4>(r, 4) = (sign * s.quat).transpose();
      ++r;
    }
  }
  return data;
}

double mean_log_likelihood(const GmmModel& gmm, const Eigen::MatrixXd& data) {
  const auto k = static_cast<Eigen::Index>(gmm.components.size());
  Eigen::MatrixXd logp(data.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& comp = gmm.components[static_cast<std::size_t>(c)];
    logp.col(c) = log_gaussian(data, comp.mean, comp.cov).array() + std::log(comp.prior);
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) total += log_sum_exp(logp.row(i).transpose());
  return total / static_cast<double>(data.rows());
}

GmmModel fit_gmm(const Eigen::MatrixXd& data, int n_components, const GmmOptions& options) {
  const Eigen::Index n = data.rows();
  const Eigen::Index dim = data.cols();
  if (n == 0 || dim == 0) throw Error(ErrorCode::EmptyData, "no samples to fit");
  if (n_components < 1 || n_components > n) {
    throw Error(ErrorCode::InvalidArgument,
                "n_components must lie in [1, " + std::to_string(n) + "]");
  }
  if (!data.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite sample data");

  const Eigen::MatrixXd floor = options.covariance_floor * Eigen::MatrixXd::Identity(dim, dim);
  std::mt19937_64 rng(options.seed);
  const Eigen::MatrixXd centers = kmeans_pp(data, n_components, rng, options.kmeans_iterations);

  GmmModel gmm;
  gmm.components.resize(static_cast<std::size_t>(n_components));
  {
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n_components));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - data.row(i)).rowwise().squaredNorm().minCoeff(&best);
      members[static_cast<std::size_t>(best)].push_back(i);
    }
    const Eigen::RowVectorXd global_mean = data.colwise().mean();
    const Eigen::MatrixXd global_centered = data.rowwise() - global_mean;
    const Eigen::MatrixXd global_cov =
        global_centered.transpose() * global_centered / static_cast<double>(n);
    for (int c = 0; c < n_components; ++c) {
      auto& comp = gmm.components[static_cast<std::size_t>(c)];
      const auto& idx = members[static_cast<std::size_t>(c)];
      comp.mean = centers.row(c).transpose();
      if (idx.size() >= 2) {
        Eigen::MatrixXd centered(static_cast<Eigen::Index>(idx.size()), dim);
        for (std::size_t j = 0; j < idx.size(); ++j) {
          centered.row(static_cast<Eigen::Index>(j)) = data.row(idx[j]) - centers.row(c);
        }
        comp.cov = centered.transpose() * centered / static_cast<double>(idx.size()) + floor;
      } else {
        comp.cov = global_cov / static_cast<double>(n_components * n_components) + floor;
      }
      comp.prior = std::max<double>(static_cast<double>(idx.size()), 1.0);
    }
    double total = 0.0;
    for (const auto& comp : gmm.components) total += comp.prior;
    for (auto& comp : gmm.components) comp.prior /= total;
  }

  Eigen::MatrixXd logp(n, n_components);
  double previous = -std::numeric_limits<double>::infinity();
  std::vector<GaussianComponent> last;
  for (int it = 0; it < options.max_iterations; ++it) {
    for (int c = 0; c < n_components; ++c) {
      const auto& comp = gmm.components[static_cast<std::size_t>(c)];
      logp.col(c) = log_gaussian(data, comp.mean, comp.cov).array() + std::log(comp.prior);
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lse = log_sum_exp(logp.row(i).transpose());
      ll += lse;
      logp.row(i) = (logp.row(i).array() - lse).exp();
    }
    ll /= static_cast<double>(n);
    // The covariance floor makes EM only approximately monotone. A drop means
    // the fit has settled at the floor; keep the better previous parameters.
    if (ll < previous) {
      gmm.components = std::move(last);
      gmm.converged = true;
      break;
    }
    gmm.log_likelihood_trace.push_back(ll);
    gmm.iterations = it;
    if (ll - previous < options.tolerance) {
      gmm.converged = true;
      break;
    }
    previous = ll;
    last = gmm.components;

    // M-step; logp now holds responsibilities.
    for (int c = 0; c < n_components; ++c) {
      const Eigen::VectorXd r = logp.col(c);
      const double nk = r.sum();
      if (!(nk > 1e-10)) {
        throw Error(ErrorCode::SingularComponent,
                    "component " + std::to_string(c) + " lost all responsibility");
      }
      auto& comp = gmm.components[static_cast<std::size_t>(c)];
      comp.prior = nk / static_cast<double>(n);
      comp.mean = data.transpose() * r / nk;
      const Eigen::MatrixXd centered = data.rowwise() - comp.mean.transpose();
      comp.cov = centered.transpose() * r.asDiagonal() * centered / nk + floor;
      comp.cov = 0.5 * (comp.cov + comp.cov.transpose()).eval();
      if (!comp.cov.allFinite() || Eigen::LLT<Eigen::MatrixXd>(comp.cov).info() != Eigen::Success) {
        throw Error(ErrorCode::SingularComponent,
                    "component " + std::to_string(c) + " covariance is singular after flooring");
      }
    }
    gmm.iterations = it + 1;
  }
  return gmm;
}

GmmModel fit_gmm(std::span<const Demonstration> demos, int n_components,
                 const GmmOptions& options) {
  if (demos.empty()) throw Error(ErrorCode::EmptyData, "no demonstrations");
  for (const auto& d : demos) validate(d);
  return fit_gmm(time_augmented_data(demos), n_components, options);
}

GmrResult gmr(const GmmModel& gmm, const Eigen::VectorXd& input) {
  const auto in = input.size();
  const auto dim = static_cast<Eigen::Index>(gmm.dims());
  if (in <= 0 || in >= dim) throw Error(ErrorCode::InvalidArgument, "bad GMR input dimension");
  const auto out = dim - in;
  const auto k = gmm.components.size();

  Eigen::VectorXd log_w(static_cast<Eigen::Index>(k));
  std::vector<Eigen::VectorXd> means(k);
  std::vector<Eigen::MatrixXd> covs(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& comp = gmm.components[c];
    const Eigen::MatrixXd s_ii = comp.cov.topLeftCorner(in, in);
    const Eigen::MatrixXd s_oi = comp.cov.bottomLeftCorner(out, in);
    Eigen::LLT<Eigen::MatrixXd> llt(s_ii);
    if (llt.info() != Eigen::Success || s_ii.diagonal().minCoeff() < 1e-300) {
      throw Error(ErrorCode::DegenerateTimeMarginal,
                  "component " + std::to_string(c) + " has a degenerate input marginal");
    }
    const Eigen::VectorXd diff = input - comp.mean.head(in);
    const Eigen::VectorXd z = llt.matrixL().solve(diff);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    log_w(static_cast<Eigen::Index>(c)) =
        std::log(comp.prior) - 0.5 * (static_cast<double>(in) * kLog2Pi + log_det + z.squaredNorm());
    means[c] = comp.mean.tail(out) + s_oi * llt.solve(diff);
    covs[c] = comp.cov.bottomRightCorner(out, out) - s_oi * llt.solve(s_oi.transpose());
  }
  const Eigen::VectorXd w = (log_w.array() - log_sum_exp(log_w)).exp();

  GmrResult result;
  result.mean = Eigen::VectorXd::Zero(out);
  for (std::size_t c = 0; c < k; ++c) result.mean += w(static_cast<Eigen::Index>(c)) * means[c];
  result.cov = Eigen::MatrixXd::Zero(out, out);
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::VectorXd d = means[c] - result.mean;
    result.cov += w(static_cast<Eigen::Index>(c)) * (covs[c] + d * d.transpose());
  }
  result.cov = 0.5 * (result.cov + result.cov.transpose()).eval();
  return result;
}

std::vector<ReferencePoint> gmr_reference(const GmmModel& gmm, int n_points) {
  if (n_points < 2) throw Error(ErrorCode::InvalidArgument, "gmr_reference needs n_points >= 2");
  if (gmm.dims() != 1 + kPoseDim) {
    throw Error(ErrorCode::InvalidArgument, "gmr_reference expects a time-augmented pose mixture");
  }
  std::vector<ReferencePoint> refs(static_cast<std::size_t>(n_points));
  Eigen::VectorXd in(1);
  for (int i = 0; i < n_points; ++i) {
    auto& ref = refs[static_cast<std::size_t>(i)];
    ref.s = i == n_points - 1 ? 1.0 : static_cast<double>(i) / (n_points - 1);
    in(0) = ref.s;
    const GmrResult g = gmr(gmm, in);
    ref.mu = g.mean;
    ref.sigma = g.cov;
  }
  return refs;
}

}  // namespace skilladapt::kmp
