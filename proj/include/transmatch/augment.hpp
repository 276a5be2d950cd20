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

#include "transmatch/tensor.hpp"

namespace transmatch {

/// Stochastic augmentation shared by imprinting, label guessing and MixMatch
/// fine-tuning: reflect-pad + random crop, then horizontal flip. Preserves
/// image shape and the [0,1] value range (pixels are only permuted).
struct AugmentationPolicy {
    int pad_crop_pixels = 2;
    double horizontal_flip_probability = 0.5;
    std::uint64_t rng_seed = 0;

    bool is_identity() const {
        return pad_crop_pixels == 0 && horizontal_flip_probability == 0.0;
    }
};

/// Apply the policy once. Deterministic for a fixed (policy.rng_seed,
/// draw_seed) pair; callers hand out fresh draw seeds per copy.
Tensor augment(const Tensor& image, const AugmentationPolicy& policy, std::uint64_t draw_seed);

}  // namespace transmatch
