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

#include "transmatch/augment.hpp"

#include "transmatch/common.hpp"
#include "transmatch/rng.hpp"

namespace transmatch {

namespace {

// Reflect index into [0, n) without repeating the edge pixel.
inline int reflect(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

}  // namespace

Tensor augment(const Tensor& image, const AugmentationPolicy& policy, std::uint64_t draw_seed) {
    if (image.shape.size() != 3)
        throw ContractError("augment: expected (c,h,w) image, got " + image.shape_str());
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int p = policy.pad_crop_pixels;
    if (p < 0 || p > std::min(h, w) - 1)
        throw ConfigError("augment: pad_crop_pixels " + std::to_string(p) + " out of range");
    if (policy.horizontal_flip_probability < 0.0 || policy.horizontal_flip_probability > 1.0)
        throw ConfigError("augment: horizontal_flip_probability out of [0,1]");

    Rng rng(mix_seed(policy.rng_seed, draw_seed));
    int ox = 0, oy = 0;
    if (p > 0) {
        ox = rng.uniform_int(0, 2 * p);
        oy = rng.uniform_int(0, 2 * p);
    }
    bool flip = false;
    if (policy.horizontal_flip_probability > 0.0)
        flip = rng.bernoulli(policy.horizontal_flip_probability);

    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch) {
        const double* src = image.ptr() + static_cast<std::size_t>(ch * h * w);
        double* dst = out.ptr() + static_cast<std::size_t>(ch * h * w);
        for (int y = 0; y < h; ++y) {
            const int sy = reflect(y + oy - p, h);
            for (int x = 0; x < w; ++x) {
                // crop first, then flip: out[x] = cropped[w-1-x] when flipped
                const int cx = flip ? (w - 1 - x) : x;
                const int sx = reflect(cx + ox - p, w);
                dst[y * w + x] = src[sy * w + sx];
            }
        }
    }
    return out;
}

}  // namespace transmatch
