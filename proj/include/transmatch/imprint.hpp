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

#pragma once

#include "transmatch/augment.hpp"
#include "transmatch/episode.hpp"
#include "transmatch/heads.hpp"
#include "transmatch/model.hpp"

namespace transmatch {

/// Support-set embeddings grouped by episode label 0..N-1.
struct SupportEmbeddings {
    std::vector<std::vector<std::vector<double>>> per_class;  // [class][shot][dim]
    int way() const { return static_cast<int>(per_class.size()); }
};

struct ImprintConfig {
    double scale = 10.0;
    /// Normalize each embedding before averaging (then renormalize the
    /// mean). The alternative averages raw embeddings first; kept for
    /// ablation.
    bool normalize_before_average = true;
    int augmentation_copies = 10;  // extra augmented copies per support image
};

/// Each class weight is the renormalized mean of its support embeddings.
/// Throws DegenerateVectorError naming the class when a mean collapses.
CosineHead imprint_weights(const SupportEmbeddings& support, const ImprintConfig& cfg = {});

/// Embed every support image plus `augmentation_copies` augmented copies,
/// then imprint from the pooled per-class embeddings.
CosineHead imprint_from_episode(FeatureExtractor& extractor, const Episode& episode,
                                const ImprintConfig& cfg, const AugmentationPolicy& policy,
                                std::uint64_t seed);

}  // namespace transmatch
