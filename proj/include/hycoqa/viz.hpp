#pragma once

// 2-D data export of positive and negative QA pairs for plotting.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hycoqa/data.hpp"
#include "hycoqa/model.hpp"

namespace hycoqa::viz {

using geom::Vec;

enum class PairLabel { positive, negative };
std::string_view label_name(PairLabel label);

/// q ++ a ++ [d(q, a), ||q||, ||a||], length 2d + 3.
struct PairFeature {
  PairLabel label;
  Vec feature;
};

PairFeature make_pair_feature(const model::QAEmbedding& q, const model::QAEmbedding& a, PairLabel label);

/// Two features per triple, positive first.
std::vector<PairFeature> extract_pair_features(const model::ModelParams& params,
                                               const data::TripleDataset& triples,
                                               const data::EmbeddingStore& questions,
                                               const data::EmbeddingStore& answers,
                                               const model::SequenceLimits& limits = {});

struct Projection2d {
  std::vector<std::array<double, 2>> points;
  std::array<Vec, 2> components;
  std::array<double, 2> variances{};
  double explained_variance_ratio = 0.0;
};

/// Centers the rows and projects them onto the top two principal directions,
/// found by power iteration with deflation from a seeded start vector. Each
/// direction is signed so its largest-magnitude loading is positive. Throws
/// std::invalid_argument for fewer than 2 rows or zero variance.
Projection2d pca_2d(const std::vector<Vec>& rows, std::uint64_t seed = 0);

/// "label,x,y" with header.
std::string points_csv(const std::vector<PairFeature>& features, const Projection2d& projection);

/// "label,f_0,...,f_{D-1}" with header.
std::string features_csv(const std::vector<PairFeature>& features);

}  // namespace hycoqa::viz
