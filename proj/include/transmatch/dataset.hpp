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
#include <set>
#include <string>
#include <vector>

#include "transmatch/tensor.hpp"

namespace transmatch {

/// One image with its integer class id. Pixel values live in [0,1].
struct LabeledExample {
    Tensor image;  // (channels, height, width)
    int label = -1;
};

/// In-memory dataset: uniform image shape, examples grouped by class.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<int> image_shape, std::vector<std::string> class_names)
        : image_shape_(std::move(image_shape)),
          class_names_(std::move(class_names)),
          by_class_(class_names_.size()) {}

    void add(int label, Tensor image);

    int num_classes() const { return static_cast<int>(class_names_.size()); }
    const std::vector<int>& image_shape() const { return image_shape_; }
    const std::string& class_name(int c) const { return class_names_[static_cast<std::size_t>(c)]; }

    int class_size(int c) const { return static_cast<int>(by_class_[static_cast<std::size_t>(c)].size()); }
    const Tensor& image(int c, int i) const { return by_class_[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]; }

    /// All examples of the given classes, flattened (used for pre-training).
    std::vector<LabeledExample> examples_of(const std::vector<int>& classes) const;

private:
    std::vector<int> image_shape_;
    std::vector<std::string> class_names_;
    std::vector<std::vector<Tensor>> by_class_;
};

/// Disjoint partition of class ids into base / validation / novel roles.
struct ClassSplit {
    std::vector<int> base_classes;
    std::vector<int> validation_classes;
    std::vector<int> novel_classes;
};

/// Randomly partition 0..num_classes-1 into the three roles.
/// counts = (base, validation, novel) and must sum to num_classes.
ClassSplit make_split(int num_classes, int base_count, int validation_count, int novel_count,
                      std::uint64_t seed);

/// Procedural image family used as the desk-scale dataset. Every class is a
/// horizontally mirrored constellation of colored Gaussian bumps; examples
/// vary by global translation, per-bump jitter, amplitude noise and pixel
/// noise, which is what makes a single shot a noisy estimate of the class.
struct SyntheticConfig {
    int num_classes = 30;
    int examples_per_class = 60;
    int channels = 3;
    int height = 16;
    int width = 16;
    int bumps_per_class = 3;
    double translate_max = 2.0;   // global shift, pixels
    double bump_jitter = 1.2;     // per-bump shift, pixels
    double amp_sigma = 0.35;      // log-normal amplitude noise
    double pixel_noise = 0.02;
    double background = 0.08;
    std::uint64_t seed = 1;
};

Dataset make_synthetic_dataset(const SyntheticConfig& cfg);

/// One directory per class with binary PPM images, plus manifest.json listing
/// class names and split membership. Any source laid out this way loads.
void save_dataset_dir(const Dataset& ds, const ClassSplit& split, const std::string& dir);

struct LoadedDataset {
    Dataset dataset;
    ClassSplit split;
};
LoadedDataset load_dataset_dir(const std::string& dir);

}  // namespace transmatch
