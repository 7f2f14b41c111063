#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "melgen/rng.hpp"

namespace melgen::metrics {

struct MetricConfig {
  int bins = 20;        // equal-width bins per latent dimension
  double split = 0.2;   // held-out fraction for the SAP classifier
  std::uint64_t seed = 0;
};

struct MetricReport {
  Eigen::VectorXd mig_per_factor;
  double mig_mean = 0.0;
  Eigen::VectorXd modularity_per_dim;
  double modularity_mean = 0.0;
  Eigen::VectorXd sap_per_factor;
  double sap_mean = 0.0;
  MetricConfig config;
  Eigen::Index samples = 0, dims = 0, factors = 0;

  std::string to_text(std::span<const std::string> factor_names = {}) const;
};

namespace metric_detail {

inline void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " contains non-finite values");
}

// Maps arbitrary integer labels to dense ids 0..k-1 (ascending value order).
inline std::vector<int> compact(const Eigen::Ref<const Eigen::VectorXi>& v, int& k) {
  std::map<int, int> ids;
  for (Eigen::Index i = 0; i < v.size(); ++i) ids.emplace(v[i], 0);
  int next = 0;
  for (auto& [value, id] : ids) id = next++;
  std::vector<int> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = ids.at(v[i]);
  k = next;
  return out;
}

}  // namespace metric_detail

// Equal-width binning per dimension over the observed min-max range.
// Constant dimensions map to bin 0.
inline Eigen::MatrixXi discretize(const Eigen::MatrixXd& codes, int bins) {
  if (bins < 2) throw std::invalid_argument("bins must be >= 2");
  metric_detail::check_finite(codes, "codes");
  Eigen::MatrixXi out(codes.rows(), codes.cols());
  for (Eigen::Index d = 0; d < codes.cols(); ++d) {
    const double lo = codes.col(d).minCoeff();
    const double hi = codes.col(d).maxCoeff();
    if (hi <= lo) {
      out.col(d).setZero();
      continue;
    }
    const double width = (hi - lo) / bins;
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
      const int b = static_cast<int>((codes(i, d) - lo) / width);
      out(i, d) = std::clamp(b, 0, bins - 1);
    }
  }
  return out;
}

// Plug-in empirical entropy in nats.
inline double entropy(const Eigen::Ref<const Eigen::VectorXi>& y) {
  if (y.size() == 0) return 0.0;
  int k = 0;
  const auto ids = metric_detail::compact(y, k);
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (const int id : ids) counts[static_cast<std::size_t>(id)] += 1.0;
  const double n = static_cast<double>(y.size());
  double h = 0.0;
  for (const double c : counts) {
    if (c > 0.0) {
      const double p = c / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

// Plug-in mutual information (nats) from the joint empirical histogram.
inline double mutual_info(const Eigen::Ref<const Eigen::VectorXi>& x, const Eigen::Ref<const Eigen::VectorXi>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("mutual_info requires equal-length columns");
  if (x.size() < 2) throw std::invalid_argument("mutual_info requires at least 2 samples");
  int kx = 0, ky = 0;
  const auto xi = metric_detail::compact(x, kx);
  const auto yi = metric_detail::compact(y, ky);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(kx, ky);
  for (Eigen::Index i = 0; i < x.size(); ++i) joint(xi[static_cast<std::size_t>(i)], yi[static_cast<std::size_t>(i)]) += 1.0;
  const double n = static_cast<double>(x.size());
  joint /= n;
  const Eigen::VectorXd px = joint.rowwise().sum();
  const Eigen::VectorXd py = joint.colwise().sum();
  double mi = 0.0;
  for (int a = 0; a < kx; ++a) {
    for (int b = 0; b < ky; ++b) {
      const double p = joint(a, b);
      if (p > 0.0) mi += p * std::log(p / (px[a] * py[b]));
    }
  }
  return std::max(mi, 0.0);
}

namespace metric_detail {

inline void check_aligned(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors) {
  if (codes.rows() != factors.rows()) throw std::invalid_argument("codes and factors are not row-aligned");
  if (codes.rows() < 2) throw std::invalid_argument("need at least 2 samples");
  if (codes.cols() < 2) throw std::invalid_argument("need at least 2 latent dimensions");
}

// MI of every (latent dimension, factor) pair on binned codes.
inline Eigen::MatrixXd mi_matrix(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors, int bins) {
  const Eigen::MatrixXi binned = discretize(codes, bins);
  Eigen::MatrixXd mi(codes.cols(), factors.cols());
  for (Eigen::Index d = 0; d < codes.cols(); ++d) {
    for (Eigen::Index k = 0; k < factors.cols(); ++k) {
      mi(d, k) = mutual_info(binned.col(d), factors.col(k));
    }
  }
  return mi;
}

}  // namespace metric_detail

// Per-factor mutual information gap: (top MI - second MI) / factor entropy.
inline Eigen::VectorXd mig(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors, int bins) {
  metric_detail::check_aligned(codes, factors);
  const Eigen::MatrixXd mi = metric_detail::mi_matrix(codes, factors, bins);
  Eigen::VectorXd scores(factors.cols());
  for (Eigen::Index k = 0; k < factors.cols(); ++k) {
    const double h = entropy(factors.col(k));
    if (h <= 0.0) throw std::invalid_argument("factor column has zero entropy");
    double top1 = -1.0, top2 = -1.0;
    for (Eigen::Index d = 0; d < codes.cols(); ++d) {
      const double v = mi(d, k);
      if (v > top1) {
        top2 = top1;
        top1 = v;
      } else if (v > top2) {
        top2 = v;
      }
    }
    scores[k] = (top1 - top2) / h;
  }
  return scores;
}

// Per-dimension modularity: 1 - sum of squared off-peak MI over theta^2 (K-1).
// Dimensions with zero peak MI score 0.
inline Eigen::VectorXd modularity(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors, int bins) {
  metric_detail::check_aligned(codes, factors);
  const Eigen::MatrixXd mi = metric_detail::mi_matrix(codes, factors, bins);
  const Eigen::Index num_factors = factors.cols();
  Eigen::VectorXd scores(codes.cols());
  for (Eigen::Index d = 0; d < codes.cols(); ++d) {
    Eigen::Index peak = 0;
    for (Eigen::Index k = 1; k < num_factors; ++k) {
      if (mi(d, k) > mi(d, peak)) peak = k;
    }
    const double theta = mi(d, peak);
    if (theta <= 0.0 || num_factors < 2) {
      scores[d] = 0.0;
      continue;
    }
    double off = 0.0;
    for (Eigen::Index k = 0; k < num_factors; ++k) {
      if (k == peak) continue;
      const double r = mi(d, k) / theta;
      off += r * r;
    }
    scores[d] = std::clamp(1.0 - off / static_cast<double>(num_factors - 1), 0.0, 1.0);
  }
  return scores;
}

namespace metric_detail {

// One-dimensional Gaussian class-conditional classifier with equal priors.
struct GaussianClassifier {
  std::vector<double> mean, var;  // per class

  static GaussianClassifier fit(std::span<const double> x, std::span<const int> cls, int num_classes) {
    GaussianClassifier g;
    g.mean.assign(static_cast<std::size_t>(num_classes), 0.0);
    g.var.assign(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<double> count(static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      count[static_cast<std::size_t>(cls[i])] += 1.0;
      g.mean[static_cast<std::size_t>(cls[i])] += x[i];
    }
    for (int c = 0; c < num_classes; ++c) {
      if (count[static_cast<std::size_t>(c)] == 0.0) {
        throw std::runtime_error("a class is absent from the training split");
      }
      g.mean[static_cast<std::size_t>(c)] /= count[static_cast<std::size_t>(c)];
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - g.mean[static_cast<std::size_t>(cls[i])];
      g.var[static_cast<std::size_t>(cls[i])] += d * d;
    }
    for (int c = 0; c < num_classes; ++c) {
      g.var[static_cast<std::size_t>(c)] =
          std::max(g.var[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)], 1e-12);
    }
    return g;
  }

  int predict(double x) const {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < static_cast<int>(mean.size()); ++c) {
      const double d = x - mean[static_cast<std::size_t>(c)];
      const double score = -0.5 * std::log(var[static_cast<std::size_t>(c)]) -
                           d * d / (2.0 * var[static_cast<std::size_t>(c)]);
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    return best;
  }
};

}  // namespace metric_detail

// Per-factor SAP: gap between the held-out accuracies of the two most
// predictive single latent dimensions.
inline Eigen::VectorXd sap(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors, double split,
                           std::uint64_t seed) {
  metric_detail::check_aligned(codes, factors);
  metric_detail::check_finite(codes, "codes");
  if (split <= 0.0 || split >= 1.0) throw std::invalid_argument("split fraction must be in (0, 1)");

  const Eigen::Index n = codes.rows();
  std::vector<std::uint32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  rng.shuffle(order);
  const Eigen::Index n_test = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(static_cast<double>(n) * split));
  if (n_test >= n) throw std::invalid_argument("split leaves no training rows");

  Eigen::VectorXd scores(factors.cols());
  for (Eigen::Index k = 0; k < factors.cols(); ++k) {
    int num_classes = 0;
    const auto cls = metric_detail::compact(factors.col(k), num_classes);
    if (num_classes < 2) throw std::invalid_argument("factor column has fewer than 2 distinct values");

    Eigen::VectorXd acc(codes.cols());
    std::vector<double> train_x;
    std::vector<int> train_c;
    for (Eigen::Index d = 0; d < codes.cols(); ++d) {
      train_x.clear();
      train_c.clear();
      for (Eigen::Index j = n_test; j < n; ++j) {
        const auto row = order[static_cast<std::size_t>(j)];
        train_x.push_back(codes(row, d));
        train_c.push_back(cls[row]);
      }
      const auto model = metric_detail::GaussianClassifier::fit(train_x, train_c, num_classes);
      double correct = 0.0;
      for (Eigen::Index j = 0; j < n_test; ++j) {
        const auto row = order[static_cast<std::size_t>(j)];
        correct += model.predict(codes(row, d)) == cls[row];
      }
      acc[d] = correct / static_cast<double>(n_test);
    }
    double top1 = -1.0, top2 = -1.0;
    for (Eigen::Index d = 0; d < codes.cols(); ++d) {
      if (acc[d] > top1) {
        top2 = top1;
        top1 = acc[d];
      } else if (acc[d] > top2) {
        top2 = acc[d];
      }
    }
    scores[k] = top1 - top2;
  }
  return scores;
}

inline MetricReport evaluate(const Eigen::MatrixXd& codes, const Eigen::MatrixXi& factors,
                             const MetricConfig& config = {}) {
  metric_detail::check_aligned(codes, factors);
  MetricReport r;
  r.config = config;
  r.samples = codes.rows();
  r.dims = codes.cols();
  r.factors = factors.cols();
  r.mig_per_factor = mig(codes, factors, config.bins);
  r.mig_mean = r.mig_per_factor.mean();
  r.modularity_per_dim = modularity(codes, factors, config.bins);
  r.modularity_mean = r.modularity_per_dim.mean();
  r.sap_per_factor = sap(codes, factors, config.split, config.seed);
  r.sap_mean = r.sap_per_factor.mean();
  return r;
}

inline std::string MetricReport::to_text(std::span<const std::string> factor_names) const {
  std::ostringstream out;
  out.precision(6);
  out << "samples = " << samples << "\n";
  out << "latent_dims = " << dims << "\n";
  out << "factors = " << factors << "\n";
  out << "bins = " << config.bins << "\n";
  out << "split = " << config.split << "\n";
  out << "seed = " << config.seed << "\n";
  const auto factor_label = [&](Eigen::Index k) {
    return k < static_cast<Eigen::Index>(factor_names.size()) ? factor_names[static_cast<std::size_t>(k)]
                                                              : "f" + std::to_string(k);
  };
  out << "mig.mean = " << mig_mean << "\n";
  for (Eigen::Index k = 0; k < mig_per_factor.size(); ++k) {
    out << "mig." << factor_label(k) << " = " << mig_per_factor[k] << "\n";
  }
  out << "modularity.mean = " << modularity_mean << "\n";
  for (Eigen::Index d = 0; d < modularity_per_dim.size(); ++d) {
    out << "modularity.dim" << d << " = " << modularity_per_dim[d] << "\n";
  }
  out << "sap.mean = " << sap_mean << "\n";
  for (Eigen::Index k = 0; k < sap_per_factor.size(); ++k) {
    out << "sap." << factor_label(k) << " = " << sap_per_factor[k] << "\n";
  }
  return out.str();
}

}  // namespace melgen::metrics
