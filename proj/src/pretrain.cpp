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

#include "transmatch/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "transmatch/optimizer.hpp"
#include "transmatch/rng.hpp"

namespace transmatch {

std::pair<std::vector<LabeledExample>, std::vector<int>> remap_labels(
    const std::vector<LabeledExample>& examples) {
    std::map<int, int> to_new;
    for (const auto& ex : examples) to_new.emplace(ex.label, 0);
    std::vector<int> originals;
    for (auto& [orig, idx] : to_new) {
        idx = static_cast<int>(originals.size());
        originals.push_back(orig);
    }
    std::vector<LabeledExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back({ex.image, to_new.at(ex.label)});
    return {std::move(out), std::move(originals)};
}

PretrainTrace pretrain(FeatureExtractor& extractor, Head& base_head,
                       const std::vector<LabeledExample>& examples, const PretrainConfig& cfg) {
    if (examples.empty()) throw ConfigError("pretrain: empty training set");
    if (cfg.epochs < 0 || cfg.batch_size < 1) throw ConfigError("pretrain: bad epochs/batch_size");
    for (const auto& ex : examples)
        if (ex.label < 0 || ex.label >= base_head.way())
            throw ContractError("pretrain: label " + std::to_string(ex.label) +
                                " outside head range 0.." + std::to_string(base_head.way() - 1));

    std::vector<Param> params = extractor.parameters();
    for (auto& p : base_head.parameters()) params.push_back(p);
    Sgd opt(params, {cfg.lr, cfg.momentum, cfg.weight_decay});

    Rng rng(mix_seed(cfg.seed, fnv1a64("pretrain")));
    const int n = static_cast<int>(examples.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    PretrainTrace trace;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        opt.set_lr(cfg.lr * std::pow(cfg.lr_decay, cfg.lr_step_epochs > 0 ? epoch / cfg.lr_step_epochs : 0));
        rng.shuffle(order);

        double loss_sum = 0.0;
        int correct = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            std::vector<Tensor> images;
            std::vector<int> labels;
            images.reserve(static_cast<std::size_t>(bsz));
            for (int b = 0; b < bsz; ++b) {
                const auto& ex = examples[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
                images.push_back(cfg.augment_images ? augment(ex.image, cfg.policy, rng.next_u64())
                                                    : ex.image);
                labels.push_back(ex.label);
            }
            extractor.zero_grad();
            base_head.zero_grad();
            Tensor emb = extractor.forward(stack_images(images, extractor.input_shape()));
            Tensor logits = base_head.forward(emb);
            Tensor dlogits;
            const double loss = softmax_cross_entropy(logits, labels, &dlogits);
            if (!std::isfinite(loss))
                throw DivergenceError("pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                                      " (completed " + std::to_string(trace.epoch_loss.size()) +
                                      " epochs; last epoch loss " +
                                      (trace.epoch_loss.empty() ? std::string("n/a")
                                                                : std::to_string(trace.epoch_loss.back())) +
                                      ")");
            for (int b = 0; b < bsz; ++b) {
                const double* row = logits.ptr() + static_cast<std::size_t>(b * base_head.way());
                int arg = 0;
                for (int c = 1; c < base_head.way(); ++c)
                    if (row[c] > row[arg]) arg = c;
                if (arg == labels[static_cast<std::size_t>(b)]) ++correct;
            }
            Tensor demb = base_head.backward(dlogits);
            extractor.backward(demb);
            opt.step();
            base_head.post_step();
            loss_sum += loss * bsz;
        }
        trace.epoch_loss.push_back(loss_sum / n);
        trace.epoch_accuracy.push_back(static_cast<double>(correct) / n);
    }
    return trace;
}

double classification_accuracy(FeatureExtractor& extractor, Head& head,
                               const std::vector<LabeledExample>& examples) {
    if (examples.empty()) return 0.0;
    int correct = 0;
    constexpr int kChunk = 256;
    for (std::size_t start = 0; start < examples.size(); start += kChunk) {
        const std::size_t end = std::min(examples.size(), start + kChunk);
        std::vector<Tensor> images;
        for (std::size_t i = start; i < end; ++i) images.push_back(examples[i].image);
        Tensor logits = head.forward(extractor.forward(stack_images(images, extractor.input_shape())));
        for (std::size_t i = start; i < end; ++i) {
            const double* row = logits.ptr() + (i - start) * static_cast<std::size_t>(head.way());
            int arg = 0;
            for (int c = 1; c < head.way(); ++c)
                if (row[c] > row[arg]) arg = c;
            if (arg == examples[i].label) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace transmatch
