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

#include "transmatch/episode.hpp"

#include <algorithm>

#include "transmatch/rng.hpp"

namespace transmatch {

std::string to_string(DistractorMode m) {
    return m == DistractorMode::Replace ? "replace" : "add";
}

DistractorMode distractor_mode_from_string(const std::string& s) {
    if (s == "replace") return DistractorMode::Replace;
    if (s == "add") return DistractorMode::Add;
    throw ConfigError("unknown distractor mode '" + s + "' (expected replace|add)");
}

namespace {

// Unlabeled draws per source class. With no distractors every episode class
// contributes exactly U. In replace mode the total budget stays N*U and is
// split evenly over the N+D source classes, episode classes taking the
// remainder first; in add mode every source class contributes U.
void unlabeled_budget(int n_way, int n_unlabeled, int n_distractor, DistractorMode mode,
                      std::vector<int>& per_episode_class, std::vector<int>& per_distractor_class) {
    per_episode_class.assign(static_cast<std::size_t>(n_way), n_unlabeled);
    per_distractor_class.assign(static_cast<std::size_t>(n_distractor), n_unlabeled);
    if (n_distractor == 0 || mode == DistractorMode::Add) return;

    const int total = n_way * n_unlabeled;
    const int sources = n_way + n_distractor;
    const int each = total / sources;
    int rem = total - each * sources;
    for (int i = 0; i < n_way; ++i) {
        per_episode_class[static_cast<std::size_t>(i)] = each + (rem > 0 ? 1 : 0);
        if (rem > 0) --rem;
    }
    for (int i = 0; i < n_distractor; ++i) {
        per_distractor_class[static_cast<std::size_t>(i)] = each + (rem > 0 ? 1 : 0);
        if (rem > 0) --rem;
    }
}

}  // namespace

Episode sample_episode(const Dataset& dataset, const std::vector<int>& novel_classes,
                       int n_way, int k_shot, int n_query, int n_unlabeled,
                       int num_distractor_classes, DistractorMode mode, std::uint64_t seed) {
    if (n_way < 1 || k_shot < 1 || n_query < 0 || n_unlabeled < 0 || num_distractor_classes < 0)
        throw ConfigError("sample_episode: counts must be non-negative and N,K >= 1");
    const int pool = static_cast<int>(novel_classes.size());
    if (n_way + num_distractor_classes > pool)
        throw ConfigError("sample_episode: need " + std::to_string(n_way + num_distractor_classes) +
                          " classes but novel pool has " + std::to_string(pool));

    Rng rng(mix_seed(seed, fnv1a64("episode")));

    std::vector<int> chosen = rng.sample_without_replacement(pool, n_way + num_distractor_classes);
    Episode ep;
    ep.way = n_way;
    ep.shot = k_shot;
    ep.episode_seed = seed;
    for (int i = 0; i < n_way; ++i)
        ep.episode_classes.push_back(novel_classes[static_cast<std::size_t>(chosen[static_cast<std::size_t>(i)])]);
    for (int i = 0; i < num_distractor_classes; ++i)
        ep.distractor_classes.push_back(
            novel_classes[static_cast<std::size_t>(chosen[static_cast<std::size_t>(n_way + i)])]);

    std::vector<int> per_class_u, per_distractor_u;
    unlabeled_budget(n_way, n_unlabeled, num_distractor_classes, mode, per_class_u, per_distractor_u);

    for (int e = 0; e < n_way; ++e) {
        const int cls = ep.episode_classes[static_cast<std::size_t>(e)];
        const int have = dataset.class_size(cls);
        const int need = k_shot + n_query + per_class_u[static_cast<std::size_t>(e)];
        if (need > have)
            throw SamplingError("sample_episode: class '" + dataset.class_name(cls) + "' has " +
                                std::to_string(have) + " examples but needs " + std::to_string(need));
        // One shuffle per class; K support, then Q query, then unlabeled.
        // Keeps support/query fixed when only U or the distractor setting vary.
        Rng crng(mix_seed(seed, fnv1a64("episode-class"), static_cast<std::uint64_t>(cls)));
        std::vector<int> order = crng.sample_without_replacement(have, have);
        int pos = 0;
        for (int k = 0; k < k_shot; ++k)
            ep.support.push_back({dataset.image(cls, order[static_cast<std::size_t>(pos++)]), e});
        for (int q = 0; q < n_query; ++q)
            ep.query.push_back({dataset.image(cls, order[static_cast<std::size_t>(pos++)]), e});
        for (int u = 0; u < per_class_u[static_cast<std::size_t>(e)]; ++u)
            ep.unlabeled.push_back(dataset.image(cls, order[static_cast<std::size_t>(pos++)]));
    }

    for (int d = 0; d < num_distractor_classes; ++d) {
        const int cls = ep.distractor_classes[static_cast<std::size_t>(d)];
        const int have = dataset.class_size(cls);
        const int need = per_distractor_u[static_cast<std::size_t>(d)];
        if (need > have)
            throw SamplingError("sample_episode: distractor class '" + dataset.class_name(cls) +
                                "' has " + std::to_string(have) + " examples but needs " +
                                std::to_string(need));
        Rng crng(mix_seed(seed, fnv1a64("episode-distractor"), static_cast<std::uint64_t>(cls)));
        std::vector<int> order = crng.sample_without_replacement(have, need);
        for (int i : order) ep.distractor_unlabeled.push_back(dataset.image(cls, i));
    }
    return ep;
}

}  // namespace transmatch
