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

#include <cstdint>
#include <string>
#include <vector>

#include "transmatch/dataset.hpp"

namespace transmatch {

/// How distractor-class unlabeled images relate to the per-class budget U.
/// Replace keeps the total unlabeled budget at N*U and splits it evenly over
/// the N episode classes plus the distractor classes; Add keeps U per episode
/// class and adds U per distractor class on top.
enum class DistractorMode { Replace, Add };

std::string to_string(DistractorMode m);
DistractorMode distractor_mode_from_string(const std::string& s);

/// One N-way K-shot trial. Support/query labels are re-indexed to 0..N-1;
/// support, query and unlabeled never share a source example.
struct Episode {
    std::vector<LabeledExample> support;        // N*K, labels 0..N-1
    std::vector<LabeledExample> query;          // N*Q, labels 0..N-1
    std::vector<Tensor> unlabeled;              // drawn from the episode's N classes
    std::vector<Tensor> distractor_unlabeled;   // drawn from classes outside the N
    int way = 0;
    int shot = 0;
    std::uint64_t episode_seed = 0;

    // Source bookkeeping, kept for the invariant checks and for replay.
    std::vector<int> episode_classes;           // original class ids, index = episode label
    std::vector<int> distractor_classes;        // original class ids
};

/// Sample one episode from the novel pool. Per chosen class the first K
/// shuffled examples become support, the next Q query, and unlabeled draws
/// continue from the remainder, so support/query are identical across
/// different U and distractor settings at the same seed.
Episode sample_episode(const Dataset& dataset, const std::vector<int>& novel_classes,
                       int n_way, int k_shot, int n_query, int n_unlabeled,
                       int num_distractor_classes, DistractorMode mode, std::uint64_t seed);

}  // namespace transmatch
