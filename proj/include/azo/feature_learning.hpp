// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "azo/objectives.hpp"

namespace azo {

// Distributed feature-learning benchmark. Each agent i owns a single-layer
// feature extractor producing one scalar per sample,
//
//     d_ij = sigmoid(x_i . D_ij),
//
// and a fixed third-party classifier W turns the concatenated features into
// a logistic prediction for label y_j in {-1, +1}. The loss is the average
// negative log-likelihood
//
//     f(x) = -(1/J) sum_j log(1 / (1 + exp(-y_j W.d_j))),
//
// which is strictly positive and finite for finite weights.
class FeatureLearningObjective final : public DifferentiableObjective {
 public:
  // inputs[i] is input_dim x samples: column j holds agent i's raw input for
  // sample j. labels[j] in {-1, +1}. classifier has one weight per agent.
  FeatureLearningObjective(std::vector<Eigen::MatrixXd> inputs, std::vector<int> labels,
                           Eigen::VectorXd classifier);

  double value(const BlockVector& x) const override;
  BlockVector gradient(const BlockVector& x) const override;
  const BlockLayout& layout() const override { return layout_; }

  int num_agents() const { return static_cast<int>(inputs_.size()); }
  int num_samples() const { return static_cast<int>(labels_.size()); }
  int input_dim() const { return static_cast<int>(inputs_.front().rows()); }

  const std::vector<Eigen::MatrixXd>& inputs() const { return inputs_; }
  const std::vector<int>& labels() const { return labels_; }
  const Eigen::VectorXd& classifier() const { return classifier_; }

  // Provable constants derived from the data via the sigmoid/logistic
  // derivative bounds; valid everywhere, not tight.
  double lipschitz_bound() const;
  double smoothness_bound() const;

  ObjectiveMetadata metadata() const;

 private:
  std::vector<Eigen::MatrixXd> inputs_;
  std::vector<int> labels_;
  Eigen::VectorXd classifier_;
  BlockLayout layout_;
};

// Self-generating benchmark instance: standard normal raw inputs, balanced
// +-1 labels in shuffled order, fixed standard normal classifier.
FeatureLearningObjective make_benchmark(int num_agents, int samples, int input_dim,
                                        RngStream& rng);

// Flat CSV serialization: <stem>_inputs.csv (agent,sample,x0..x{d-1}),
// <stem>_labels.csv (sample,label), <stem>_classifier.csv (agent,weight).
void save_dataset_csv(const FeatureLearningObjective& objective,
                      const std::filesystem::path& stem);
FeatureLearningObjective load_dataset_csv(const std::filesystem::path& stem);

}  // namespace azo
