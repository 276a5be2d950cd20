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
#include <memory>
#include <string>
#include <vector>

#include "transmatch/tensor.hpp"

namespace transmatch {

/// Named view of one trainable array and its gradient buffer. The optimizer
/// and the EMA shadow both walk these views; pointer lifetime is tied to the
/// owning model.
struct Param {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t size = 0;
};

void zero_params_grad(const std::vector<Param>& params);

/// Differentiable image-to-embedding map. forward() caches activations for
/// the matching backward(); inference-only callers just ignore the cache.
/// Implementations must be deep-copyable so episode workers and EMA shadows
/// can own isolated parameter sets.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual int embedding_dim() const = 0;
    virtual std::vector<int> input_shape() const = 0;  // (c,h,w)

    /// images: (n,c,h,w) -> embeddings (n,d). No L2 normalization here;
    /// the cosine head normalizes on its side.
    virtual Tensor forward(const Tensor& images) = 0;

    /// grad_embeddings: (n,d) from the last forward(). Accumulates into
    /// parameter gradients.
    virtual void backward(const Tensor& grad_embeddings) = 0;

    virtual std::vector<Param> parameters() = 0;
    virtual std::unique_ptr<FeatureExtractor> clone() const = 0;

    void zero_grad() { zero_params_grad(parameters()); }
};

/// Small convolutional backbone: conv3x3+ReLU blocks with 2x2 max-pooling
/// after the first three blocks, then a fully connected embedding layer.
/// Input height/width must be divisible by 8.
struct BackboneConfig {
    std::vector<int> input_shape{3, 16, 16};
    std::vector<int> channels{8, 16, 32, 32};
    int embedding_dim = 64;
};

std::unique_ptr<FeatureExtractor> make_conv_backbone(const BackboneConfig& cfg, std::uint64_t seed);

/// Re-create a backbone from the architecture string stored in checkpoints.
BackboneConfig backbone_config_from_json(const std::string& json_text);
std::string backbone_config_to_json(const BackboneConfig& cfg);

/// Stack images into one (n,c,h,w) batch; n = 0 gives an empty batch with
/// the provided shape.
Tensor stack_images(const std::vector<Tensor>& images, const std::vector<int>& image_shape);

/// Batch of d-dim embeddings for a list of images.
Tensor embed(FeatureExtractor& extractor, const std::vector<Tensor>& images);

/// Mean softmax cross-entropy over integer labels; writes dlogits
/// (= (softmax - onehot)/n) for the training path.
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits);

/// Row-wise softmax of a logits matrix.
Tensor softmax_rows(const Tensor& logits);

}  // namespace transmatch
