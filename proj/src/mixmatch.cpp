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

#include "transmatch/mixmatch.hpp"

#include <algorithm>
#include <cmath>

#include "transmatch/optimizer.hpp"

namespace transmatch {

namespace {
constexpr double kLogClamp = 1e-12;
}

// ---------------------------------------------------------------------------
// ProbVector helpers
// ---------------------------------------------------------------------------

bool is_prob_vector(const ProbVector& p, double tol) {
    if (p.empty()) return false;
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= tol;
}

void require_prob_vector(const ProbVector& p, const char* where) {
    if (!is_prob_vector(p))
        throw ContractError(std::string(where) + ": not a valid probability vector");
}

ProbVector one_hot(int n, int index) {
    if (index < 0 || index >= n) throw ContractError("one_hot: index out of range");
    ProbVector p(static_cast<std::size_t>(n), 0.0);
    p[static_cast<std::size_t>(index)] = 1.0;
    return p;
}

double entropy(const ProbVector& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

ProbVector sharpen(const ProbVector& p, double temperature) {
    if (temperature <= 0.0) throw ConfigError("sharpen: temperature must be positive");
    require_prob_vector(p, "sharpen");
    ProbVector out(p.size());
    const double inv_t = 1.0 / temperature;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += (out[i] = std::pow(p[i], inv_t));
    if (sum <= 0.0) throw ContractError("sharpen: all entries collapsed to zero");
    for (auto& v : out) v /= sum;
    return out;
}

// ---------------------------------------------------------------------------
// MixUp and batch construction
// ---------------------------------------------------------------------------

MixedExample mixup(const Tensor& image_a, const ProbVector& target_a, const Tensor& image_b,
                   const ProbVector& target_b, double lambda_draw) {
    if (lambda_draw < 0.0 || lambda_draw > 1.0)
        throw ContractError("mixup: lambda_draw outside [0,1]");
    if (!image_a.same_shape(image_b))
        throw ContractError("mixup: image shapes differ: " + image_a.shape_str() + " vs " +
                            image_b.shape_str());
    if (target_a.size() != target_b.size()) throw ContractError("mixup: target sizes differ");

    const double lam = std::max(lambda_draw, 1.0 - lambda_draw);
    MixedExample out;
    out.image = Tensor(image_a.shape);
    for (std::size_t i = 0; i < image_a.size(); ++i)
        out.image[i] = lam * image_a[i] + (1.0 - lam) * image_b[i];
    out.target.resize(target_a.size());
    for (std::size_t i = 0; i < target_a.size(); ++i)
        out.target[i] = lam * target_a[i] + (1.0 - lam) * target_b[i];
    return out;
}

MixmatchBatch mix_with_partners(const std::vector<MixEntry>& labeled,
                                const std::vector<MixEntry>& unlabeled,
                                const std::vector<int>& partners,
                                const std::vector<double>& lambdas) {
    const std::size_t total = labeled.size() + unlabeled.size();
    if (partners.size() != total || lambdas.size() != total)
        throw ContractError("mix_with_partners: permutation/lambda size mismatch");
    auto entry = [&](int idx) -> const MixEntry& {
        if (idx < 0 || static_cast<std::size_t>(idx) >= total)
            throw ContractError("mix_with_partners: partner index out of range");
        return static_cast<std::size_t>(idx) < labeled.size()
                   ? labeled[static_cast<std::size_t>(idx)]
                   : unlabeled[static_cast<std::size_t>(idx) - labeled.size()];
    };

    MixmatchBatch out;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const MixEntry& w = entry(partners[i]);
        out.x1.push_back(mixup(labeled[i].image, labeled[i].target, w.image, w.target, lambdas[i]));
    }
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
        const MixEntry& w = entry(partners[labeled.size() + i]);
        out.x2.push_back(mixup(unlabeled[i].image, unlabeled[i].target, w.image, w.target,
                               lambdas[labeled.size() + i]));
    }
    return out;
}

MixmatchBatch build_mixmatch_batch(const std::vector<MixEntry>& labeled,
                                   const std::vector<MixEntry>& unlabeled,
                                   const AugmentationPolicy& policy, double alpha, Rng& rng) {
    if (labeled.empty())
        throw ConfigError("build_mixmatch_batch: labeled batch is empty (l1 undefined)");
    if (alpha <= 0.0) throw ConfigError("build_mixmatch_batch: alpha must be positive");
    for (const auto& e : labeled) require_prob_vector(e.target, "build_mixmatch_batch (labeled)");
    for (const auto& e : unlabeled) require_prob_vector(e.target, "build_mixmatch_batch (unlabeled)");

    std::vector<MixEntry> aug_labeled;
    aug_labeled.reserve(labeled.size());
    for (const auto& e : labeled)
        aug_labeled.push_back({augment(e.image, policy, rng.next_u64()), e.target});

    const std::size_t total = aug_labeled.size() + unlabeled.size();
    std::vector<int> partners(total);
    for (std::size_t i = 0; i < total; ++i) partners[i] = static_cast<int>(i);
    rng.shuffle(partners);

    std::vector<double> lambdas(total);
    for (auto& l : lambdas) l = rng.beta(alpha);

    return mix_with_partners(aug_labeled, unlabeled, partners, lambdas);
}

// ---------------------------------------------------------------------------
// Label guessing and losses
// ---------------------------------------------------------------------------

ProbVector guess_label(const NovelModel& snapshot, const Tensor& image, int num_augmentations,
                       double temperature, const AugmentationPolicy& policy, Rng& rng) {
    if (num_augmentations < 1) throw ConfigError("guess_label: need at least one augmentation");
    const int n_way = snapshot.head.way();
    ProbVector mean(static_cast<std::size_t>(n_way), 0.0);
    for (int m = 0; m < num_augmentations; ++m) {
        const Tensor copy = augment(image, policy, rng.next_u64());
        const ProbVector p = predict(snapshot.head, *snapshot.extractor, copy);
        for (int c = 0; c < n_way; ++c) mean[static_cast<std::size_t>(c)] += p[static_cast<std::size_t>(c)];
    }
    for (auto& v : mean) v /= num_augmentations;
    return sharpen(mean, temperature);
}

double soft_cross_entropy(const ProbVector& target, const ProbVector& prediction) {
    if (target.size() != prediction.size())
        throw ContractError("soft_cross_entropy: size mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
        loss -= target[i] * std::log(std::max(prediction[i], kLogClamp));
    return loss;
}

namespace {

// Forward the mixed examples through the model in one batch.
Tensor forward_mixed(NovelModel& model, const std::vector<MixedExample>& examples) {
    std::vector<Tensor> images;
    images.reserve(examples.size());
    for (const auto& e : examples) images.push_back(e.image);
    Tensor emb = model.extractor->forward(stack_images(images, model.extractor->input_shape()));
    return model.head.forward(emb);
}

}  // namespace

double loss_l1(const std::vector<MixedExample>& x1, NovelModel& model) {
    if (x1.empty()) throw ConfigError("loss_l1: empty mixed labeled set");
    Tensor probs = softmax_rows(forward_mixed(model, x1));
    const int n_way = model.head.way();
    double loss = 0.0;
    for (std::size_t i = 0; i < x1.size(); ++i) {
        const double* p = probs.ptr() + i * static_cast<std::size_t>(n_way);
        loss += soft_cross_entropy(x1[i].target, ProbVector(p, p + n_way));
    }
    return loss / static_cast<double>(x1.size());
}

double loss_l2(const std::vector<MixedExample>& x2, NovelModel& model, int n_way) {
    if (n_way < 1) throw ConfigError("loss_l2: n_way must be >= 1");
    if (x2.empty()) return 0.0;
    Tensor probs = softmax_rows(forward_mixed(model, x2));
    double loss = 0.0;
    for (std::size_t i = 0; i < x2.size(); ++i) {
        const double* p = probs.ptr() + i * static_cast<std::size_t>(n_way);
        for (int c = 0; c < n_way; ++c) {
            const double diff = x2[i].target[static_cast<std::size_t>(c)] - p[c];
            loss += diff * diff;
        }
    }
    return loss / (static_cast<double>(n_way) * static_cast<double>(x2.size()));
}

// ---------------------------------------------------------------------------
// Fine-tuning loops
// ---------------------------------------------------------------------------

void SslConfig::validate() const {
    if (guess_augmentations < 1) throw ConfigError("ssl: M (guess_augmentations) must be >= 1");
    if (temperature <= 0.0) throw ConfigError("ssl: temperature must be positive");
    if (gamma < 0.0) throw ConfigError("ssl: gamma must be >= 0");
    if (alpha <= 0.0) throw ConfigError("ssl: alpha must be positive");
    if (batch_labeled < 1) throw ConfigError("ssl: batch_labeled must be >= 1");
    if (batch_unlabeled < 0) throw ConfigError("ssl: batch_unlabeled must be >= 0");
    if (epochs < 0 || batches_per_epoch < 1) throw ConfigError("ssl: bad epochs/batches_per_epoch");
    if (ema_decay < 0.0 || ema_decay > 1.0) throw ConfigError("ssl: ema_decay must be in [0,1]");
    if (pseudo_threshold < 0.0 || pseudo_threshold > 1.0)
        throw ConfigError("ssl: pseudo_threshold must be in [0,1]");
}

namespace {

// Combined forward/backward over [x1; x2]: loss = l1 + gamma*l2.
// dlogits for the l1 rows is (softmax - target)/|x1| (softmax+CE composite);
// for the l2 rows the softmax Jacobian is applied to 2(p - target)/(N*|x2|).
struct StepLoss {
    double l1 = 0.0, l2 = 0.0, total = 0.0;
};

StepLoss mixmatch_step_loss(NovelModel& model, const MixmatchBatch& batch, double gamma,
                            bool with_grad) {
    const int n_way = model.head.way();
    std::vector<Tensor> images;
    images.reserve(batch.x1.size() + batch.x2.size());
    for (const auto& e : batch.x1) images.push_back(e.image);
    for (const auto& e : batch.x2) images.push_back(e.image);

    Tensor emb = model.extractor->forward(stack_images(images, model.extractor->input_shape()));
    Tensor logits = model.head.forward(emb);
    Tensor probs = softmax_rows(logits);

    const std::size_t n1 = batch.x1.size(), n2 = batch.x2.size();
    Tensor dlogits({static_cast<int>(n1 + n2), n_way});

    StepLoss out;
    for (std::size_t i = 0; i < n1; ++i) {
        const double* p = probs.ptr() + i * static_cast<std::size_t>(n_way);
        const ProbVector& t = batch.x1[i].target;
        out.l1 += soft_cross_entropy(t, ProbVector(p, p + n_way));
        double* d = dlogits.ptr() + i * static_cast<std::size_t>(n_way);
        for (int c = 0; c < n_way; ++c)
            d[c] = (p[c] - t[static_cast<std::size_t>(c)]) / static_cast<double>(n1);
    }
    out.l1 /= static_cast<double>(n1);

    if (n2 > 0) {
        const double norm = static_cast<double>(n_way) * static_cast<double>(n2);
        for (std::size_t i = 0; i < n2; ++i) {
            const double* p = probs.ptr() + (n1 + i) * static_cast<std::size_t>(n_way);
            const ProbVector& t = batch.x2[i].target;
            double* d = dlogits.ptr() + (n1 + i) * static_cast<std::size_t>(n_way);
            // dl2/dp_c = 2 (p_c - t_c) / (N*|x2|); chain through softmax:
            // dl2/dz_c = p_c * (dl2/dp_c - sum_j dl2/dp_j p_j)
            double dot_dp = 0.0;
            for (int c = 0; c < n_way; ++c) {
                const double diff = p[c] - t[static_cast<std::size_t>(c)];
                out.l2 += diff * diff;
                d[c] = 2.0 * diff / norm;
            }
            for (int c = 0; c < n_way; ++c) dot_dp += d[c] * p[c];
            for (int c = 0; c < n_way; ++c) d[c] = gamma * p[c] * (d[c] - dot_dp);
        }
        out.l2 /= norm;
    }

    out.total = out.l1 + gamma * out.l2;
    if (with_grad) {
        Tensor demb = model.head.backward(dlogits);
        model.extractor->backward(demb);
    }
    return out;
}

std::vector<const Tensor*> unlabeled_pool(const Episode& episode) {
    std::vector<const Tensor*> pool;
    pool.reserve(episode.unlabeled.size() + episode.distractor_unlabeled.size());
    for (const auto& t : episode.unlabeled) pool.push_back(&t);
    for (const auto& t : episode.distractor_unlabeled) pool.push_back(&t);
    return pool;
}

void check_finite(double loss, const char* where, const FinetuneTrace& trace) {
    if (std::isfinite(loss)) return;
    std::string msg = std::string(where) + ": non-finite loss; epoch losses so far:";
    for (double l : trace.epoch_loss) msg += " " + std::to_string(l);
    throw DivergenceError(msg);
}

}  // namespace

FinetuneTrace finetune_transmatch(NovelModel& model, const Episode& episode, const SslConfig& cfg,
                                  const AugmentationPolicy& policy, std::uint64_t seed) {
    cfg.validate();
    if (episode.support.empty()) throw ContractError("finetune_transmatch: empty support set");
    const int n_way = model.head.way();
    if (n_way != episode.way)
        throw ContractError("finetune_transmatch: head way " + std::to_string(n_way) +
                            " != episode way " + std::to_string(episode.way));

    const auto pool = unlabeled_pool(episode);
    EmaShadow ema(model, cfg.ema_decay);
    Sgd opt(model.parameters(!cfg.freeze_extractor), {cfg.lr, cfg.momentum, cfg.weight_decay});
    Rng rng(mix_seed(seed, fnv1a64("finetune-transmatch")));

    FinetuneTrace trace;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double gamma_now =
            cfg.gamma_ramp && cfg.epochs > 1
                ? cfg.gamma * (static_cast<double>(epoch) / (cfg.epochs - 1))
                : cfg.gamma;
        double sum = 0.0, sum1 = 0.0, sum2 = 0.0;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            // labeled batch: sample with replacement over the few-shot set
            std::vector<MixEntry> labeled;
            for (int i = 0; i < cfg.batch_labeled; ++i) {
                const auto& ex = episode.support[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(episode.support.size()) - 1))];
                labeled.push_back({ex.image, one_hot(n_way, ex.label)});
            }
            // unlabeled batch: guessed targets via the EMA snapshot; the
            // training copy is its own augmentation draw
            std::vector<MixEntry> unlabeled;
            if (!pool.empty() && cfg.batch_unlabeled > 0) {
                for (int i = 0; i < cfg.batch_unlabeled; ++i) {
                    const Tensor& img =
                        *pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
                    ProbVector target = guess_label(ema.model, img, cfg.guess_augmentations,
                                                    cfg.temperature, policy, rng);
                    unlabeled.push_back({augment(img, policy, rng.next_u64()), std::move(target)});
                }
            }

            MixmatchBatch batch = build_mixmatch_batch(labeled, unlabeled, policy, cfg.alpha, rng);
            model.zero_grad();
            const StepLoss loss = mixmatch_step_loss(model, batch, gamma_now, /*with_grad=*/true);
            check_finite(loss.total, "finetune_transmatch", trace);
            opt.step();
            model.head.post_step();
            ema.update(model);
            sum += loss.total;
            sum1 += loss.l1;
            sum2 += loss.l2;
        }
        trace.epoch_loss.push_back(sum / cfg.batches_per_epoch);
        trace.epoch_l1.push_back(sum1 / cfg.batches_per_epoch);
        trace.epoch_l2.push_back(sum2 / cfg.batches_per_epoch);
    }

    if (cfg.evaluate_with_ema && cfg.epochs > 0) {
        auto dst = model.parameters();
        auto src = ema.model.parameters();
        for (std::size_t i = 0; i < dst.size(); ++i)
            std::copy(src[i].value, src[i].value + src[i].size, dst[i].value);
    }
    return trace;
}

FinetuneTrace finetune_pseudo_label(NovelModel& model, const Episode& episode, const SslConfig& cfg,
                                    const AugmentationPolicy& policy, std::uint64_t seed) {
    cfg.validate();
    if (episode.support.empty()) throw ContractError("finetune_pseudo_label: empty support set");
    const int n_way = model.head.way();
    if (n_way != episode.way)
        throw ContractError("finetune_pseudo_label: head/episode way mismatch");

    const auto pool = unlabeled_pool(episode);
    Sgd opt(model.parameters(!cfg.freeze_extractor), {cfg.lr, cfg.momentum, cfg.weight_decay});
    Rng rng(mix_seed(seed, fnv1a64("finetune-pseudo-label")));

    FinetuneTrace trace;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // standard ramp for the pseudo-labeled term: 0 at the first epoch up
        // to pseudo_weight at the last
        const double wt = cfg.epochs > 1
                              ? cfg.pseudo_weight * (static_cast<double>(epoch) / (cfg.epochs - 1))
                              : cfg.pseudo_weight;
        double sum = 0.0;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            std::vector<Tensor> images;
            std::vector<int> labels;
            std::vector<double> weights;
            for (int i = 0; i < cfg.batch_labeled; ++i) {
                const auto& ex = episode.support[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(episode.support.size()) - 1))];
                images.push_back(augment(ex.image, policy, rng.next_u64()));
                labels.push_back(ex.label);
                weights.push_back(1.0 / cfg.batch_labeled);
            }
            if (!pool.empty() && cfg.batch_unlabeled > 0 && wt > 0.0) {
                int accepted = 0;
                std::vector<Tensor> cand_images;
                std::vector<int> cand_labels;
                for (int i = 0; i < cfg.batch_unlabeled; ++i) {
                    const Tensor& img =
                        *pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
                    Tensor aug = augment(img, policy, rng.next_u64());
                    const ProbVector p = predict(model.head, *model.extractor, aug);
                    const int arg = argmax_index(p);
                    if (p[static_cast<std::size_t>(arg)] >= cfg.pseudo_threshold) {
                        cand_images.push_back(std::move(aug));
                        cand_labels.push_back(arg);
                        ++accepted;
                    }
                }
                for (int i = 0; i < accepted; ++i) {
                    images.push_back(std::move(cand_images[static_cast<std::size_t>(i)]));
                    labels.push_back(cand_labels[static_cast<std::size_t>(i)]);
                    weights.push_back(wt / accepted);
                }
            }

            model.zero_grad();
            Tensor emb = model.extractor->forward(stack_images(images, model.extractor->input_shape()));
            Tensor logits = model.head.forward(emb);
            Tensor probs = softmax_rows(logits);
            Tensor dlogits(logits.shape);
            double loss = 0.0;
            for (std::size_t i = 0; i < images.size(); ++i) {
                const double* p = probs.ptr() + i * static_cast<std::size_t>(n_way);
                const int y = labels[i];
                loss -= weights[i] * std::log(std::max(p[y], kLogClamp));
                double* d = dlogits.ptr() + i * static_cast<std::size_t>(n_way);
                for (int c = 0; c < n_way; ++c) d[c] = weights[i] * p[c];
                d[y] -= weights[i];
            }
            check_finite(loss, "finetune_pseudo_label", trace);
            Tensor demb = model.head.backward(dlogits);
            model.extractor->backward(demb);
            opt.step();
            model.head.post_step();
            sum += loss;
        }
        trace.epoch_loss.push_back(sum / cfg.batches_per_epoch);
        trace.epoch_l1.push_back(trace.epoch_loss.back());
        trace.epoch_l2.push_back(0.0);
    }
    return trace;
}

FinetuneTrace finetune_supervised(NovelModel& model, const Episode& episode, const SslConfig& cfg,
                                  const AugmentationPolicy& policy, std::uint64_t seed) {
    cfg.validate();
    if (episode.support.empty()) throw ContractError("finetune_supervised: empty support set");
    const int n_way = model.head.way();
    if (n_way != episode.way)
        throw ContractError("finetune_supervised: head/episode way mismatch");

    Sgd opt(model.parameters(!cfg.freeze_extractor), {cfg.lr, cfg.momentum, cfg.weight_decay});
    Rng rng(mix_seed(seed, fnv1a64("finetune-supervised")));

    FinetuneTrace trace;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double sum = 0.0;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            std::vector<Tensor> images;
            std::vector<int> labels;
            for (int i = 0; i < cfg.batch_labeled; ++i) {
                const auto& ex = episode.support[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(episode.support.size()) - 1))];
                images.push_back(augment(ex.image, policy, rng.next_u64()));
                labels.push_back(ex.label);
            }
            model.zero_grad();
            Tensor emb = model.extractor->forward(stack_images(images, model.extractor->input_shape()));
            Tensor logits = model.head.forward(emb);
            Tensor dlogits;
            const double loss = softmax_cross_entropy(logits, labels, &dlogits);
            check_finite(loss, "finetune_supervised", trace);
            Tensor demb = model.head.backward(dlogits);
            model.extractor->backward(demb);
            opt.step();
            model.head.post_step();
            sum += loss;
        }
        trace.epoch_loss.push_back(sum / cfg.batches_per_epoch);
        trace.epoch_l1.push_back(trace.epoch_loss.back());
        trace.epoch_l2.push_back(0.0);
    }
    return trace;
}

}  // namespace transmatch
