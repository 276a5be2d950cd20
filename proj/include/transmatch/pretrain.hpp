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
#include <vector>

#include "transmatch/augment.hpp"
#include "transmatch/dataset.hpp"
#include "transmatch/heads.hpp"
#include "transmatch/nn.hpp"

namespace transmatch {

struct PretrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int lr_step_epochs = 10;   // multiply lr by lr_decay every this many epochs
    double lr_decay = 0.1;
    std::uint64_t seed = 7;
    bool augment_images = true;
    AugmentationPolicy policy{};
};

struct PretrainTrace {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_accuracy;
};

/// Re-map arbitrary class ids to 0..C-1 (sorted order); returns the
/// remapped examples and the original class ids per new label.
std::pair<std::vector<LabeledExample>, std::vector<int>> remap_labels(
    const std::vector<LabeledExample>& examples);

/// Cross-entropy training of extractor + head on the given examples
/// (labels must already be 0..head.way()-1). Epochs of shuffled mini
/// batches with SGD momentum, weight decay and a step LR schedule.
/// Throws DivergenceError on a non-finite loss.
PretrainTrace pretrain(FeatureExtractor& extractor, Head& base_head,
                       const std::vector<LabeledExample>& examples, const PretrainConfig& cfg);

/// Training-set accuracy of extractor + head (argmax of logits).
double classification_accuracy(FeatureExtractor& extractor, Head& head,
                               const std::vector<LabeledExample>& examples);

}  // namespace transmatch
