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

#include "transmatch/model.hpp"

namespace transmatch {

std::vector<double> predict(const CosineHead& head, FeatureExtractor& extractor,
                            const Tensor& image) {
    Tensor batch = stack_images({image}, extractor.input_shape());
    Tensor emb = extractor.forward(batch);
    std::vector<double> x(emb.data.begin(), emb.data.end());
    return predict_from_embedding(head, x);
}

void ema_update(const std::vector<Param>& shadow, const std::vector<Param>& live, double decay) {
    if (shadow.size() != live.size())
        throw ContractError("ema_update: parameter lists differ in length");
    for (std::size_t i = 0; i < shadow.size(); ++i) {
        if (shadow[i].size != live[i].size)
            throw ContractError("ema_update: shape mismatch on parameter '" + shadow[i].name + "'");
        double* s = shadow[i].value;
        const double* p = live[i].value;
        for (std::size_t k = 0; k < shadow[i].size; ++k)
            s[k] = decay * s[k] + (1.0 - decay) * p[k];
    }
}

void EmaShadow::update(NovelModel& live) {
    ema_update(model.parameters(), live.parameters(), decay);
}

}  // namespace transmatch
