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

#include "transmatch/heads.hpp"

#include <cmath>

#include "transmatch/rng.hpp"

namespace transmatch {

namespace {
constexpr double kDegenerateNorm = 1e-8;
constexpr double kMinScale = 1e-3;
}  // namespace

// ---------------------------------------------------------------------------
// LinearHead
// ---------------------------------------------------------------------------

LinearHead::LinearHead(int way, int dim, std::uint64_t seed) : way_(way), dim_(dim) {
    if (way < 1 || dim < 1) throw ConfigError("LinearHead: way and dim must be >= 1");
    w_.resize(static_cast<std::size_t>(way * dim));
    b_.assign(static_cast<std::size_t>(way), 0.0);
    gw_.assign(w_.size(), 0.0);
    gb_.assign(b_.size(), 0.0);
    Rng rng(mix_seed(seed, fnv1a64("linear-head")));
    const double std = std::sqrt(2.0 / dim);
    for (auto& v : w_) v = rng.normal(0.0, std);
}

Tensor LinearHead::forward(const Tensor& embeddings) {
    input_ = embeddings;
    const int n = embeddings.dim(0);
    if (embeddings.dim(1) != dim_) throw ContractError("LinearHead: embedding dim mismatch");
    Tensor out({n, way_});
    for (int i = 0; i < n; ++i) {
        const double* x = embeddings.ptr() + static_cast<std::size_t>(i * dim_);
        double* o = out.ptr() + static_cast<std::size_t>(i * way_);
        for (int c = 0; c < way_; ++c)
            o[c] = b_[static_cast<std::size_t>(c)] +
                   dot(w_.data() + static_cast<std::size_t>(c * dim_), x, static_cast<std::size_t>(dim_));
    }
    return out;
}

Tensor LinearHead::backward(const Tensor& dlogits) {
    const int n = input_.dim(0);
    Tensor gin(input_.shape);
    for (int i = 0; i < n; ++i) {
        const double* x = input_.ptr() + static_cast<std::size_t>(i * dim_);
        const double* g = dlogits.ptr() + static_cast<std::size_t>(i * way_);
        double* gi = gin.ptr() + static_cast<std::size_t>(i * dim_);
        for (int c = 0; c < way_; ++c) {
            gb_[static_cast<std::size_t>(c)] += g[c];
            double* gw = gw_.data() + static_cast<std::size_t>(c * dim_);
            const double* w = w_.data() + static_cast<std::size_t>(c * dim_);
            for (int d = 0; d < dim_; ++d) {
                gw[d] += g[c] * x[d];
                gi[d] += g[c] * w[d];
            }
        }
    }
    return gin;
}

std::vector<Param> LinearHead::parameters() {
    return {{"base_head.weight", w_.data(), gw_.data(), w_.size()},
            {"base_head.bias", b_.data(), gb_.data(), b_.size()}};
}

std::unique_ptr<Head> LinearHead::clone_head() const {
    return std::make_unique<LinearHead>(*this);
}

// ---------------------------------------------------------------------------
// CosineHead
// ---------------------------------------------------------------------------

CosineHead::CosineHead(int way, int dim, double scale_init) {
    if (way < 1 || dim < 1) throw ConfigError("CosineHead: way and dim must be >= 1");
    if (scale_init <= 0.0) throw ConfigError("CosineHead: scale must be positive");
    weights = Tensor({way, dim});
    weight_grad_ = Tensor({way, dim});
    scale = scale_init;
}

CosineHead CosineHead::random(int way, int dim, double scale_init, std::uint64_t seed) {
    CosineHead head(way, dim, scale_init);
    Rng rng(mix_seed(seed, fnv1a64("cosine-head-random")));
    for (auto& v : head.weights.data) v = rng.normal(0.0, 1.0);
    head.renormalize_rows();
    return head;
}

void CosineHead::renormalize_rows() {
    const int n = way(), d = dim();
    for (int c = 0; c < n; ++c) {
        double* row = weights.ptr() + static_cast<std::size_t>(c * d);
        const double nr = l2_norm(row, static_cast<std::size_t>(d));
        if (nr <= kDegenerateNorm)
            throw DegenerateVectorError("CosineHead: weight row " + std::to_string(c) +
                                        " has norm " + std::to_string(nr));
        for (int i = 0; i < d; ++i) row[i] /= nr;
    }
}

double CosineHead::max_row_norm_error() const {
    const int n = way(), d = dim();
    double worst = 0.0;
    for (int c = 0; c < n; ++c) {
        const double nr = l2_norm(weights.ptr() + static_cast<std::size_t>(c * d),
                                  static_cast<std::size_t>(d));
        worst = std::max(worst, std::abs(nr - 1.0));
    }
    return worst;
}

Tensor CosineHead::forward(const Tensor& embeddings) {
    const int n = embeddings.dim(0), nw = way(), d = dim();
    if (embeddings.dim(1) != d) throw ContractError("CosineHead: embedding dim mismatch");

    emb_ = embeddings;
    xhat_ = Tensor({n, d});
    xnorm_.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const double* x = embeddings.ptr() + static_cast<std::size_t>(i * d);
        const double nr = l2_norm(x, static_cast<std::size_t>(d));
        if (nr <= kDegenerateNorm)
            throw DegenerateVectorError("CosineHead: embedding " + std::to_string(i) +
                                        " has norm " + std::to_string(nr));
        xnorm_[static_cast<std::size_t>(i)] = nr;
        double* u = xhat_.ptr() + static_cast<std::size_t>(i * d);
        for (int k = 0; k < d; ++k) u[k] = x[k] / nr;
    }

    what_ = Tensor({nw, d});
    wnorm_.assign(static_cast<std::size_t>(nw), 0.0);
    for (int c = 0; c < nw; ++c) {
        const double* w = weights.ptr() + static_cast<std::size_t>(c * d);
        const double nr = l2_norm(w, static_cast<std::size_t>(d));
        if (nr <= kDegenerateNorm)
            throw DegenerateVectorError("CosineHead: weight row " + std::to_string(c) +
                                        " has norm " + std::to_string(nr));
        wnorm_[static_cast<std::size_t>(c)] = nr;
        double* v = what_.ptr() + static_cast<std::size_t>(c * d);
        for (int k = 0; k < d; ++k) v[k] = w[k] / nr;
    }

    cos_ = Tensor({n, nw});
    Tensor out({n, nw});
    for (int i = 0; i < n; ++i) {
        const double* u = xhat_.ptr() + static_cast<std::size_t>(i * d);
        for (int c = 0; c < nw; ++c) {
            const double cv = dot(what_.ptr() + static_cast<std::size_t>(c * d), u,
                                  static_cast<std::size_t>(d));
            cos_[static_cast<std::size_t>(i * nw + c)] = cv;
            out[static_cast<std::size_t>(i * nw + c)] = scale * cv;
        }
    }
    return out;
}

Tensor CosineHead::backward(const Tensor& dlogits) {
    const int n = emb_.dim(0), nw = way(), d = dim();
    Tensor gin(emb_.shape);

    // d logit_{i,c} / d scale = cos_{i,c}
    for (std::size_t i = 0; i < dlogits.size(); ++i) scale_grad_ += dlogits[i] * cos_[i];

    for (int i = 0; i < n; ++i) {
        const double* u = xhat_.ptr() + static_cast<std::size_t>(i * d);
        const double* g = dlogits.ptr() + static_cast<std::size_t>(i * nw);
        double* gi = gin.ptr() + static_cast<std::size_t>(i * d);

        // accumulate a = sum_c g_c * v_c and the u-projection in one pass
        double proj = 0.0;  // sum_c g_c * cos_{i,c}
        for (int c = 0; c < nw; ++c) {
            const double gc = g[c] * scale;
            const double* v = what_.ptr() + static_cast<std::size_t>(c * d);
            const double cv = cos_[static_cast<std::size_t>(i * nw + c)];
            proj += gc * cv;
            // dcos/dw_c = (u - cos * v) / ||w_c||
            double* gw = weight_grad_.ptr() + static_cast<std::size_t>(c * d);
            const double invw = 1.0 / wnorm_[static_cast<std::size_t>(c)];
            for (int k = 0; k < d; ++k) {
                gw[k] += gc * (u[k] - cv * v[k]) * invw;
                gi[k] += gc * v[k];
            }
        }
        // dcos/dx = (v - cos * u) / ||x||, summed over c: (a - proj * u)/||x||
        const double invx = 1.0 / xnorm_[static_cast<std::size_t>(i)];
        for (int k = 0; k < d; ++k) gi[k] = (gi[k] - proj * u[k]) * invx;
    }
    return gin;
}

std::vector<Param> CosineHead::parameters() {
    return {{"head.weight", weights.ptr(), weight_grad_.ptr(), weights.size()},
            {"head.scale", &scale, &scale_grad_, 1}};
}

void CosineHead::post_step() {
    renormalize_rows();
    if (scale < kMinScale) scale = kMinScale;
}

std::unique_ptr<Head> CosineHead::clone_head() const {
    return std::make_unique<CosineHead>(*this);
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

std::vector<double> normalize(const std::vector<double>& v) {
    const double nr = l2_norm(v.data(), v.size());
    if (nr <= kDegenerateNorm)
        throw DegenerateVectorError("normalize: vector norm " + std::to_string(nr) +
                                    " below threshold");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / nr;
    return out;
}

std::vector<double> cosine_scores(const CosineHead& head, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != head.dim())
        throw ContractError("cosine_scores: embedding dim mismatch");
    const std::vector<double> u = normalize(x);
    const int nw = head.way(), d = head.dim();
    std::vector<double> out(static_cast<std::size_t>(nw));
    for (int c = 0; c < nw; ++c) {
        const double* w = head.weights.ptr() + static_cast<std::size_t>(c * d);
        const double wn = l2_norm(w, static_cast<std::size_t>(d));
        if (wn <= kDegenerateNorm)
            throw DegenerateVectorError("cosine_scores: weight row " + std::to_string(c) +
                                        " is degenerate");
        out[static_cast<std::size_t>(c)] = head.scale * dot(w, u.data(), static_cast<std::size_t>(d)) / wn;
    }
    return out;
}

std::vector<double> predict_from_embedding(const CosineHead& head, const std::vector<double>& x) {
    std::vector<double> z = cosine_scores(head, x);
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (auto& v : z) s += (v = std::exp(v - m));
    for (auto& v : z) v /= s;
    return z;
}

int argmax_index(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
}

}  // namespace transmatch
