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

#include <vector>

#include "transmatch/nn.hpp"

namespace transmatch {

struct SgdConfig {
    double lr = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.0;
};

/// SGD with momentum and L2 weight decay folded into the gradient:
///   v <- momentum*v + g + wd*w;  w <- w - lr*v
class Sgd {
public:
    Sgd(std::vector<Param> params, SgdConfig cfg) : params_(std::move(params)), cfg_(cfg) {
        velocity_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i)
            velocity_[i].assign(params_[i].size, 0.0);
    }

    void step() {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            double* w = params_[i].value;
            const double* g = params_[i].grad;
            double* v = velocity_[i].data();
            for (std::size_t k = 0; k < params_[i].size; ++k) {
                v[k] = cfg_.momentum * v[k] + g[k] + cfg_.weight_decay * w[k];
                w[k] -= cfg_.lr * v[k];
            }
        }
    }

    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }

private:
    std::vector<Param> params_;
    SgdConfig cfg_;
    std::vector<std::vector<double>> velocity_;
};

}  // namespace transmatch
