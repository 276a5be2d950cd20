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

#include <memory>

#include "transmatch/heads.hpp"
#include "transmatch/nn.hpp"

namespace transmatch {

/// Feature extractor plus N-way cosine head: the classifier an episode
/// fine-tunes and evaluates. Each fine-tuning run owns its model
/// exclusively; clone before handing one to a worker.
struct NovelModel {
    std::unique_ptr<FeatureExtractor> extractor;
    CosineHead head;

    NovelModel() = default;
    NovelModel(std::unique_ptr<FeatureExtractor> ex, CosineHead hd)
        : extractor(std::move(ex)), head(std::move(hd)) {}

    NovelModel clone() const { return {extractor->clone(), head}; }

    std::vector<Param> parameters(bool include_extractor = true) {
        std::vector<Param> ps;
        if (include_extractor) ps = extractor->parameters();
        for (auto& p : head.parameters()) ps.push_back(p);
        return ps;
    }

    void zero_grad() {
        extractor->zero_grad();
        head.zero_grad();
    }
};

/// Class probabilities for one image: softmax over scaled cosine scores.
std::vector<double> predict(const CosineHead& head, FeatureExtractor& extractor,
                            const Tensor& image);

/// Shadow copy of a model's parameters updated as
/// shadow <- decay*shadow + (1-decay)*params. Used to guess labels; never
/// part of the trainable graph.
struct EmaShadow {
    NovelModel model;
    double decay = 0.999;

    EmaShadow() = default;
    EmaShadow(const NovelModel& source, double decay_) : model(source.clone()), decay(decay_) {
        if (decay_ < 0.0 || decay_ > 1.0) throw ConfigError("EmaShadow: decay must be in [0,1]");
    }

    void update(NovelModel& live);
};

/// Elementwise shadow <- decay*shadow + (1-decay)*live over matching
/// parameter lists. Throws ContractError on any shape mismatch.
void ema_update(const std::vector<Param>& shadow, const std::vector<Param>& live, double decay);

}  // namespace transmatch
