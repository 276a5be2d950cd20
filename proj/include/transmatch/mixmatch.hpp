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
#include "transmatch/episode.hpp"
#include "transmatch/model.hpp"
#include "transmatch/rng.hpp"

namespace transmatch {

/// Nonnegative length-N vector summing to 1 (within 1e-6 at op boundaries).
using ProbVector = std::vector<double>;

bool is_prob_vector(const ProbVector& p, double tol = 1e-6);
void require_prob_vector(const ProbVector& p, const char* where);
ProbVector one_hot(int n, int index);
double entropy(const ProbVector& p);

/// Temperature sharpening: entry j proportional to p_j^(1/T). T < 1 lowers
/// entropy; the argmax never moves.
ProbVector sharpen(const ProbVector& p, double temperature);

/// Convex combination of two (image, target) pairs with coefficient
/// lambda' = max(lambda_draw, 1 - lambda_draw) on the first argument, so the
/// output stays closer to its first source.
struct MixedExample {
    Tensor image;
    ProbVector target;
};

MixedExample mixup(const Tensor& image_a, const ProbVector& target_a, const Tensor& image_b,
                   const ProbVector& target_b, double lambda_draw);

struct MixEntry {
    Tensor image;
    ProbVector target;
};

struct MixmatchBatch {
    std::vector<MixedExample> x1;  // |labeled| entries
    std::vector<MixedExample> x2;  // |unlabeled| entries
};

/// Deterministic core of the batch build: partners[i] indexes into the
/// concatenation labeled+unlabeled and must be a permutation; lambdas has
/// one draw per output example. Exposed separately so tests can enumerate
/// permutations exactly.
MixmatchBatch mix_with_partners(const std::vector<MixEntry>& labeled,
                                const std::vector<MixEntry>& unlabeled,
                                const std::vector<int>& partners,
                                const std::vector<double>& lambdas);

/// Augment each labeled image once, shuffle the combined pool into mix
/// partners and draw lambda ~ Beta(alpha, alpha) per output example.
/// Unlabeled entries are used as given (callers pass already-augmented
/// copies). Empty unlabeled is allowed and reduces to supervised MixUp;
/// empty labeled is a configuration error.
MixmatchBatch build_mixmatch_batch(const std::vector<MixEntry>& labeled,
                                   const std::vector<MixEntry>& unlabeled,
                                   const AugmentationPolicy& policy, double alpha, Rng& rng);

/// Soft label for one unlabeled image: mean prediction over M augmented
/// copies through the (EMA) snapshot, then sharpened. Inference only; no
/// gradient reaches the snapshot.
ProbVector guess_label(const NovelModel& snapshot, const Tensor& image, int num_augmentations,
                       double temperature, const AugmentationPolicy& policy, Rng& rng);

/// Soft-target cross entropy -sum_c p_c log q_c with q clamped at 1e-12.
double soft_cross_entropy(const ProbVector& target, const ProbVector& prediction);

/// Mean soft-target cross entropy of the model over the mixed labeled set.
double loss_l1(const std::vector<MixedExample>& x1, NovelModel& model);

/// Mean squared probability error over the mixed unlabeled set, normalized
/// by way * |x2|; zero when x2 is empty.
double loss_l2(const std::vector<MixedExample>& x2, NovelModel& model, int n_way);

struct SslConfig {
    int guess_augmentations = 2;    // M
    double temperature = 0.5;       // T
    double gamma = 5.0;             // unlabeled loss weight
    double alpha = 0.75;            // Beta(alpha, alpha) for MixUp
    int batch_labeled = 16;         // B
    int batch_unlabeled = 16;
    int epochs = 10;
    int batches_per_epoch = 64;
    double lr = 0.001;
    double weight_decay = 0.04;
    double momentum = 0.9;
    double ema_decay = 0.999;
    // resolved protocol choices (all overridable)
    bool gamma_ramp = false;          // linear 0->gamma over epochs instead of constant
    bool freeze_extractor = false;    // fine-tune the head only
    bool evaluate_with_ema = false;   // copy EMA params into the model after training
    double pseudo_threshold = 0.8;    // Pseudo-Label acceptance gate
    double pseudo_weight = 1.0;       // max weight of the pseudo-labeled loss term

    void validate() const;
};

struct FinetuneTrace {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_l1;
    std::vector<double> epoch_l2;
};

/// MixMatch fine-tuning of an (imprinted) novel model on one episode:
/// per step draw labeled/unlabeled batches, guess labels through the EMA
/// snapshot, build the mixed batch, descend l1 + gamma*l2, re-normalize the
/// head rows and update the EMA. Deterministic for a fixed seed.
FinetuneTrace finetune_transmatch(NovelModel& model, const Episode& episode, const SslConfig& cfg,
                                  const AugmentationPolicy& policy, std::uint64_t seed);

/// Entropy-minimization baseline: hard pseudo-labels from the live model,
/// accepted above a confidence threshold, weighted by a linear ramp.
FinetuneTrace finetune_pseudo_label(NovelModel& model, const Episode& episode, const SslConfig& cfg,
                                    const AugmentationPolicy& policy, std::uint64_t seed);

/// Supervised-only baseline: plain cross-entropy on the few-shot labels.
FinetuneTrace finetune_supervised(NovelModel& model, const Episode& episode, const SslConfig& cfg,
                                  const AugmentationPolicy& policy, std::uint64_t seed);

}  // namespace transmatch
