/*
 * Copyright 2026 TransMatch Lab Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "transmatch/imprint.hpp"

#include <cmath>

#include "transmatch/rng.hpp"

namespace transmatch {

CosineHead imprint_weights(const SupportEmbeddings& support, const ImprintConfig& cfg) {
    const int n_way = support.way();
    if (n_way < 1) throw ContractError("imprint_weights: no classes");
    if (support.per_class[0].empty()) throw ContractError("imprint_weights: class 0 has no embeddings");
    const int d = static_cast<int>(support.per_class[0][0].size());

    CosineHead head(n_way, d, cfg.scale);
    for (int c = 0; c < n_way; ++c) {
        const auto& embs = support.per_class[static_cast<std::size_t>(c)];
        if (embs.empty())
            throw ContractError("imprint_weights: class " + std::to_string(c) + " has no embeddings");
        std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
        for (const auto& e : embs) {
            if (static_cast<int>(e.size()) != d)
                throw ContractError("imprint_weights: embedding dim mismatch in class " +
                                    std::to_string(c));
            const std::vector<double> v = cfg.normalize_before_average ? normalize(e) : e;
            for (int k = 0; k < d; ++k) mean[static_cast<std::size_t>(k)] += v[static_cast<std::size_t>(k)];
        }
        for (auto& m : mean) m /= static_cast<double>(embs.size());
        const double nr = l2_norm(mean.data(), mean.size());
        if (nr <= 1e-8)
            throw DegenerateVectorError("imprint_weights: class " + std::to_string(c) +
                                        " mean embedding is degenerate (norm " + std::to_string(nr) +
                                        ")");
        double* row = head.weights.ptr() + static_cast<std::size_t>(c * d);
        for (int k = 0; k < d; ++k) row[k] = mean[static_cast<std::size_t>(k)] / nr;
    }
    return head;
}

CosineHead imprint_from_episode(FeatureExtractor& extractor, const Episode& episode,
                                const ImprintConfig& cfg, const AugmentationPolicy& policy,
                                std::uint64_t seed) {
    if (episode.support.empty()) throw ContractError("imprint_from_episode: empty support set");
    if (cfg.augmentation_copies < 0)
        throw ConfigError("imprint_from_episode: augmentation_copies must be >= 0");

    Rng rng(mix_seed(seed, fnv1a64("imprint-augment")));
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (const auto& ex : episode.support) {
        images.push_back(ex.image);
        labels.push_back(ex.label);
        for (int a = 0; a < cfg.augmentation_copies; ++a) {
            images.push_back(augment(ex.image, policy, rng.next_u64()));
            labels.push_back(ex.label);
        }
    }

    Tensor embs = embed(extractor, images);
    const int d = extractor.embedding_dim();
    SupportEmbeddings support;
    support.per_class.resize(static_cast<std::size_t>(episode.way));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double* e = embs.ptr() + i * static_cast<std::size_t>(d);
        support.per_class[static_cast<std::size_t>(labels[i])].emplace_back(e, e + d);
    }
    return imprint_weights(support, cfg);
}

}  // namespace transmatch
