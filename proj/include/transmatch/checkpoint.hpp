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
#include <optional>
#include <string>

#include "transmatch/heads.hpp"
#include "transmatch/nn.hpp"

namespace transmatch {

/// Versioned binary container: magic "TMCK", format version, a JSON metadata
/// block (architecture, training provenance, config hash), then named f64
/// parameter blobs with shapes. Raw little-endian doubles, so a save/load
/// round trip reproduces forward outputs bitwise.
struct CheckpointMeta {
    int format_version = 1;
    int embedding_dim = 0;
    int class_count = 0;  // 0 when no head is stored
    int epochs = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string arch_json;  // backbone_config_to_json output
};

void save_checkpoint(const std::string& path, FeatureExtractor& extractor,
                     const CosineHead* head, const CheckpointMeta& meta);

struct Checkpoint {
    CheckpointMeta meta;
    std::unique_ptr<FeatureExtractor> extractor;
    std::optional<CosineHead> head;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace transmatch
