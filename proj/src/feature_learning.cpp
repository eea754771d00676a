// SPDX-License-Identifier: Apache-2.0
#include "azo/feature_learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "azo/numeric_io.hpp"

namespace azo {
namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

FeatureLearningObjective::FeatureLearningObjective(std::vector<Eigen::MatrixXd> inputs,
                                                   std::vector<int> labels,
                                                   Eigen::VectorXd classifier)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), classifier_(std::move(classifier)) {
  if (inputs_.empty()) {
    throw ConfigError("benchmark needs at least one agent");
  }
  if (labels_.empty()) {
    throw ConfigError("benchmark needs at least one sample");
  }
  if (classifier_.size() != static_cast<Eigen::Index>(inputs_.size())) {
    throw ConfigError("classifier needs exactly one weight per agent");
  }
  const auto samples = static_cast<Eigen::Index>(labels_.size());
  for (const auto& d : inputs_) {
    if (d.cols() != samples || d.rows() < 1 || d.rows() != inputs_.front().rows()) {
      throw ConfigError("raw input matrices must share one input_dim x samples shape");
    }
  }
  for (int y : labels_) {
    if (y != 1 && y != -1) {
      throw ConfigError("labels must be +1 or -1");
    }
  }
  layout_ = BlockLayout::uniform(static_cast<int>(inputs_.size()),
                                 static_cast<int>(inputs_.front().rows()));
}

double FeatureLearningObjective::value(const BlockVector& x) const {
  const int n = num_agents();
  const int j_count = num_samples();
  Eigen::VectorXd score = Eigen::VectorXd::Zero(j_count);
  for (int i = 0; i < n; ++i) {
    const auto xi = x.block(i);
    const Eigen::Map<const Eigen::VectorXd> wi(xi.data(), xi.size());
    const Eigen::VectorXd s = inputs_[static_cast<std::size_t>(i)].transpose() * wi;
    for (int j = 0; j < j_count; ++j) {
      score(j) += classifier_(i) * sigmoid(s(j));
    }
  }
  double loss = 0.0;
  for (int j = 0; j < j_count; ++j) {
    loss += softplus(-static_cast<double>(labels_[static_cast<std::size_t>(j)]) * score(j));
  }
  return loss / static_cast<double>(j_count);
}

BlockVector FeatureLearningObjective::gradient(const BlockVector& x) const {
  const int n = num_agents();
  const int j_count = num_samples();
  Eigen::MatrixXd features(n, j_count);  // d_ij
  for (int i = 0; i < n; ++i) {
    const auto xi = x.block(i);
    const Eigen::Map<const Eigen::VectorXd> wi(xi.data(), xi.size());
    const Eigen::VectorXd s = inputs_[static_cast<std::size_t>(i)].transpose() * wi;
    for (int j = 0; j < j_count; ++j) {
      features(i, j) = sigmoid(s(j));
    }
  }
  BlockVector grad(layout_);
  Eigen::VectorXd sample_coeff(j_count);
  for (int j = 0; j < j_count; ++j) {
    const double y = static_cast<double>(labels_[static_cast<std::size_t>(j)]);
    const double z = classifier_.dot(features.col(j));
    // d/dz of softplus(-y z) is -y * sigmoid(-y z).
    sample_coeff(j) = -y * sigmoid(-y * z) / static_cast<double>(j_count);
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd weights(j_count);
    for (int j = 0; j < j_count; ++j) {
      const double d = features(i, j);
      weights(j) = sample_coeff(j) * classifier_(i) * d * (1.0 - d);
    }
    const Eigen::VectorXd gi = inputs_[static_cast<std::size_t>(i)] * weights;
    auto dst = grad.block(i);
    for (Eigen::Index k = 0; k < gi.size(); ++k) {
      dst[static_cast<std::size_t>(k)] = gi(k);
    }
  }
  return grad;
}

double FeatureLearningObjective::lipschitz_bound() const {
  // |softplus'| <= 1 and sigmoid' <= 1/4, so per agent
  // ||grad_i f|| <= |W_i| / (4J) * sum_j ||D_ij||.
  const int n = num_agents();
  const int j_count = num_samples();
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < j_count; ++j) {
      acc += inputs_[static_cast<std::size_t>(i)].col(j).norm();
    }
    const double bound_i = std::abs(classifier_(i)) * acc / (4.0 * j_count);
    sum_sq += bound_i * bound_i;
  }
  return std::sqrt(sum_sq);
}

double FeatureLearningObjective::smoothness_bound() const {
  // Per sample, the Hessian splits into a rank-one logistic part with
  // curvature <= 1/4 acting on a_j (||a_j||^2 <= sum_i W_i^2 ||D_ij||^2 / 16)
  // and a block-diagonal part bounded by max_i |W_i| sup|sigmoid''| ||D_ij||^2.
  const double sigmoid_second_max = 1.0 / (6.0 * std::sqrt(3.0));
  const int n = num_agents();
  const int j_count = num_samples();
  double total = 0.0;
  for (int j = 0; j < j_count; ++j) {
    double a_sq = 0.0;
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      const double col_sq = inputs_[static_cast<std::size_t>(i)].col(j).squaredNorm();
      a_sq += classifier_(i) * classifier_(i) * col_sq / 16.0;
      diag = std::max(diag, std::abs(classifier_(i)) * sigmoid_second_max * col_sq);
    }
    total += 0.25 * a_sq + diag;
  }
  return total / static_cast<double>(j_count);
}

ObjectiveMetadata FeatureLearningObjective::metadata() const {
  ObjectiveMetadata meta;
  meta.lipschitz_l0 = lipschitz_bound();
  meta.smoothness_l1 = smoothness_bound();
  meta.lower_bound = 0.0;  // negative log-likelihood is positive
  meta.provenance = ConstantProvenance::analytic_bound;
  return meta;
}

FeatureLearningObjective make_benchmark(int num_agents, int samples, int input_dim,
                                        RngStream& rng) {
  if (num_agents < 1 || samples < 1 || input_dim < 1) {
    throw ConfigError("benchmark sizes must be positive");
  }
  std::vector<Eigen::MatrixXd> inputs;
  inputs.reserve(static_cast<std::size_t>(num_agents));
  for (int i = 0; i < num_agents; ++i) {
    Eigen::MatrixXd d(input_dim, samples);
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      for (Eigen::Index r = 0; r < d.rows(); ++r) {
        d(r, c) = rng.normal();
      }
    }
    inputs.push_back(std::move(d));
  }
  // Balanced labels, order shuffled by the dataset stream.
  std::vector<int> labels(static_cast<std::size_t>(samples));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    labels[j] = j < labels.size() / 2 ? 1 : -1;
  }
  for (std::size_t j = labels.size(); j > 1; --j) {
    const auto k = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(j));
    std::swap(labels[j - 1], labels[std::min(k, j - 1)]);
  }
  Eigen::VectorXd classifier(num_agents);
  for (int i = 0; i < num_agents; ++i) {
    classifier(i) = rng.normal();
  }
  return FeatureLearningObjective(std::move(inputs), std::move(labels), std::move(classifier));
}

void save_dataset_csv(const FeatureLearningObjective& objective,
                      const std::filesystem::path& stem) {
  const int d = objective.input_dim();
  {
    std::ofstream out(stem.string() + "_inputs.csv");
    out << "agent,sample";
    for (int k = 0; k < d; ++k) out << ",x" << k;
    out << "\n";
    for (int i = 0; i < objective.num_agents(); ++i) {
      for (int j = 0; j < objective.num_samples(); ++j) {
        out << i << "," << j;
        for (int k = 0; k < d; ++k) {
          out << "," << format_double(objective.inputs()[static_cast<std::size_t>(i)](k, j));
        }
        out << "\n";
      }
    }
  }
  {
    std::ofstream out(stem.string() + "_labels.csv");
    out << "sample,label\n";
    for (int j = 0; j < objective.num_samples(); ++j) {
      out << j << "," << objective.labels()[static_cast<std::size_t>(j)] << "\n";
    }
  }
  {
    std::ofstream out(stem.string() + "_classifier.csv");
    out << "agent,weight\n";
    for (int i = 0; i < objective.num_agents(); ++i) {
      out << i << "," << format_double(objective.classifier()(i)) << "\n";
    }
  }
}

FeatureLearningObjective load_dataset_csv(const std::filesystem::path& stem) {
  const auto read_rows = [](const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
      throw ConfigError("cannot open dataset file " + path.string());
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (first) {  // header
        first = false;
        continue;
      }
      rows.push_back(split_csv_line(line));
    }
    return rows;
  };

  const auto label_rows = read_rows(stem.string() + "_labels.csv");
  std::vector<int> labels(label_rows.size());
  for (const auto& row : label_rows) {
    const auto j = static_cast<std::size_t>(std::stol(row.at(0)));
    labels.at(j) = std::stoi(row.at(1));
  }

  const auto classifier_rows = read_rows(stem.string() + "_classifier.csv");
  Eigen::VectorXd classifier(static_cast<Eigen::Index>(classifier_rows.size()));
  for (const auto& row : classifier_rows) {
    classifier(std::stol(row.at(0))) = parse_double(row.at(1));
  }

  const auto input_rows = read_rows(stem.string() + "_inputs.csv");
  if (input_rows.empty()) {
    throw ConfigError("dataset has no input rows: " + stem.string());
  }
  const int input_dim = static_cast<int>(input_rows.front().size()) - 2;
  const int num_agents = static_cast<int>(classifier_rows.size());
  std::vector<Eigen::MatrixXd> inputs(
      static_cast<std::size_t>(num_agents),
      Eigen::MatrixXd::Zero(input_dim, static_cast<Eigen::Index>(labels.size())));
  for (const auto& row : input_rows) {
    const auto i = static_cast<std::size_t>(std::stol(row.at(0)));
    const auto j = static_cast<Eigen::Index>(std::stol(row.at(1)));
    for (int k = 0; k < input_dim; ++k) {
      inputs.at(i)(k, j) = parse_double(row.at(static_cast<std::size_t>(k) + 2));
    }
  }
  return FeatureLearningObjective(std::move(inputs), std::move(labels), std::move(classifier));
}

}  // namespace azo
