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
#include <vector>

#include "transmatch/nn.hpp"

namespace transmatch {

/// Trainable classifier head over embeddings: (n,d) -> (n,way) logits.
class Head {
public:
    virtual ~Head() = default;
    virtual int way() const = 0;
    virtual int dim() const = 0;
    virtual Tensor forward(const Tensor& embeddings) = 0;
    virtual Tensor backward(const Tensor& dlogits) = 0;  // accumulates grads, returns dembeddings
    virtual std::vector<Param> parameters() = 0;
    virtual void post_step() {}  // invoked after each optimizer step
    virtual std::unique_ptr<Head> clone_head() const = 0;
    void zero_grad() { zero_params_grad(parameters()); }
};

/// Plain affine head used for base-class pre-training.
class LinearHead final : public Head {
public:
    LinearHead(int way, int dim, std::uint64_t seed);
    int way() const override { return way_; }
    int dim() const override { return dim_; }
    Tensor forward(const Tensor& embeddings) override;
    Tensor backward(const Tensor& dlogits) override;
    std::vector<Param> parameters() override;
    std::unique_ptr<Head> clone_head() const override;

private:
    int way_, dim_;
    std::vector<double> w_, b_, gw_, gb_;
    Tensor input_;
};

/// Scaled cosine-similarity head: logit_c = scale * cos(angle(w_c, x)).
/// Both the class weight and the embedding are normalized inside the
/// forward, so logits depend only on directions; rows are additionally
/// re-normalized after every optimizer step to keep them readable as unit
/// directions.
class CosineHead final : public Head {
public:
    CosineHead() = default;
    CosineHead(int way, int dim, double scale);
    static CosineHead random(int way, int dim, double scale, std::uint64_t seed);

    Tensor weights;       // (way, dim)
    double scale = 10.0;  // trainable positive logit multiplier

    int way() const override { return weights.shape.empty() ? 0 : weights.dim(0); }
    int dim() const override { return weights.shape.empty() ? 0 : weights.dim(1); }

    Tensor forward(const Tensor& embeddings) override;
    Tensor backward(const Tensor& dlogits) override;
    std::vector<Param> parameters() override;
    void post_step() override;  // renormalize rows, clamp scale positive
    std::unique_ptr<Head> clone_head() const override;

    /// Project every row back to unit norm. Throws DegenerateVectorError if
    /// a row has norm <= 1e-8.
    void renormalize_rows();
    double max_row_norm_error() const;

private:
    Tensor weight_grad_;
    double scale_grad_ = 0.0;
    // forward cache
    Tensor emb_, xhat_, what_, cos_;
    std::vector<double> xnorm_, wnorm_;
};

/// x / ||x||. Throws DegenerateVectorError when ||x|| <= 1e-8.
std::vector<double> normalize(const std::vector<double>& v);

/// scale * cos(angle(w_c, x)) for every class row.
std::vector<double> cosine_scores(const CosineHead& head, const std::vector<double>& x);

/// Softmax over cosine scores. Ties in downstream argmax resolve to the
/// lowest class index.
std::vector<double> predict_from_embedding(const CosineHead& head, const std::vector<double>& x);

int argmax_index(const std::vector<double>& v);

}  // namespace transmatch
