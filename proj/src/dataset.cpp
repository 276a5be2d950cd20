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

#include "transmatch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "transmatch/rng.hpp"

namespace fs = std::filesystem;

namespace transmatch {

void Dataset::add(int label, Tensor image) {
    if (label < 0 || label >= num_classes())
        throw ContractError("Dataset::add: label " + std::to_string(label) + " out of range");
    if (image.shape != image_shape_)
        throw ContractError("Dataset::add: image shape " + image.shape_str() +
                            " does not match dataset shape");
    by_class_[static_cast<std::size_t>(label)].push_back(std::move(image));
}

std::vector<LabeledExample> Dataset::examples_of(const std::vector<int>& classes) const {
    std::vector<LabeledExample> out;
    for (int c : classes) {
        for (int i = 0; i < class_size(c); ++i) out.push_back({image(c, i), c});
    }
    return out;
}

ClassSplit make_split(int num_classes, int base_count, int validation_count, int novel_count,
                      std::uint64_t seed) {
    if (base_count < 0 || validation_count < 0 || novel_count < 0 ||
        base_count + validation_count + novel_count != num_classes) {
        throw ConfigError("make_split: counts (" + std::to_string(base_count) + "," +
                          std::to_string(validation_count) + "," + std::to_string(novel_count) +
                          ") do not partition " + std::to_string(num_classes) + " classes");
    }
    Rng rng(mix_seed(seed, fnv1a64("class-split")));
    std::vector<int> ids(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < num_classes; ++i) ids[static_cast<std::size_t>(i)] = i;
    rng.shuffle(ids);

    ClassSplit split;
    split.base_classes.assign(ids.begin(), ids.begin() + base_count);
    split.validation_classes.assign(ids.begin() + base_count,
                                    ids.begin() + base_count + validation_count);
    split.novel_classes.assign(ids.begin() + base_count + validation_count, ids.end());
    std::sort(split.base_classes.begin(), split.base_classes.end());
    std::sort(split.validation_classes.begin(), split.validation_classes.end());
    std::sort(split.novel_classes.begin(), split.novel_classes.end());
    return split;
}

namespace {

struct Bump {
    double cx, cy, sigma;
    std::vector<double> amp;  // per channel
};

}  // namespace

Dataset make_synthetic_dataset(const SyntheticConfig& cfg) {
    if (cfg.num_classes < 1 || cfg.examples_per_class < 1)
        throw ConfigError("make_synthetic_dataset: class and example counts must be positive");

    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(cfg.num_classes));
    for (int c = 0; c < cfg.num_classes; ++c) names.push_back("class_" + std::to_string(c));

    Dataset ds({cfg.channels, cfg.height, cfg.width}, std::move(names));
    const double w = cfg.width, h = cfg.height;

    for (int c = 0; c < cfg.num_classes; ++c) {
        // Class template: bump constellation mirrored across the vertical
        // axis so a horizontal flip maps the class distribution to itself.
        Rng crng(mix_seed(cfg.seed, fnv1a64("synthetic-class"), static_cast<std::uint64_t>(c)));
        std::vector<Bump> base;
        for (int g = 0; g < cfg.bumps_per_class; ++g) {
            Bump b;
            b.cx = crng.uniform(2.5, w - 3.5);
            b.cy = crng.uniform(2.5, h - 3.5);
            b.sigma = crng.uniform(1.4, 2.4);
            for (int ch = 0; ch < cfg.channels; ++ch) b.amp.push_back(crng.uniform(0.25, 0.95));
            base.push_back(b);
            Bump m = b;
            m.cx = (w - 1.0) - b.cx;
            base.push_back(m);
        }

        for (int i = 0; i < cfg.examples_per_class; ++i) {
            Rng erng(mix_seed(cfg.seed, fnv1a64("synthetic-example"),
                              mix_seed(static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i))));
            const double dx = erng.uniform(-cfg.translate_max, cfg.translate_max);
            const double dy = erng.uniform(-cfg.translate_max, cfg.translate_max);

            Tensor img({cfg.channels, cfg.height, cfg.width});
            for (auto& v : img.data) v = cfg.background;

            std::vector<double> kernel(static_cast<std::size_t>(cfg.height * cfg.width));
            for (const Bump& b : base) {
                const double cx = b.cx + dx + erng.uniform(-cfg.bump_jitter, cfg.bump_jitter);
                const double cy = b.cy + dy + erng.uniform(-cfg.bump_jitter, cfg.bump_jitter);
                const double s = std::exp(erng.normal(0.0, cfg.amp_sigma));
                const double inv = 1.0 / (2.0 * b.sigma * b.sigma);
                for (int y = 0; y < cfg.height; ++y) {
                    for (int x = 0; x < cfg.width; ++x) {
                        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                        kernel[static_cast<std::size_t>(y * cfg.width + x)] = std::exp(-d2 * inv);
                    }
                }
                for (int ch = 0; ch < cfg.channels; ++ch) {
                    double* plane = img.ptr() + static_cast<std::size_t>(ch * cfg.height * cfg.width);
                    const double a = b.amp[static_cast<std::size_t>(ch)] * s;
                    for (int p = 0; p < cfg.height * cfg.width; ++p)
                        plane[p] += a * kernel[static_cast<std::size_t>(p)];
                }
            }
            for (auto& v : img.data) {
                v += erng.normal(0.0, cfg.pixel_noise);
                v = std::clamp(v, 0.0, 1.0);
            }
            ds.add(c, std::move(img));
        }
    }
    return ds;
}

namespace {

constexpr double kPpmScale = 255.0;

void write_ppm(const fs::path& path, const Tensor& img) {
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    if (c != 3) throw ContractError("write_ppm: expected 3-channel image, got " + img.shape_str());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_ppm: cannot open " + path.string());
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w * 3));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                const double v = img[static_cast<std::size_t>((ch * h + y) * w + x)];
                row[static_cast<std::size_t>(x * 3 + ch)] =
                    static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * kPpmScale));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

Tensor read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("read_ppm: cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
        throw ConfigError("read_ppm: unsupported PPM header in " + path.string());
    in.get();  // single whitespace after header
    std::vector<unsigned char> raw(static_cast<std::size_t>(w * h * 3));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw ConfigError("read_ppm: truncated file " + path.string());
    Tensor img({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img[static_cast<std::size_t>((ch * h + y) * w + x)] =
                    raw[static_cast<std::size_t>((y * w + x) * 3 + ch)] / kPpmScale;
    return img;
}

const char* split_name(const ClassSplit& split, int c) {
    auto contains = [c](const std::vector<int>& v) {
        return std::find(v.begin(), v.end(), c) != v.end();
    };
    if (contains(split.base_classes)) return "base";
    if (contains(split.validation_classes)) return "validation";
    if (contains(split.novel_classes)) return "novel";
    throw ContractError("split does not cover class " + std::to_string(c));
}

}  // namespace

void save_dataset_dir(const Dataset& ds, const ClassSplit& split, const std::string& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "transmatch-dataset";
    manifest["version"] = 1;
    auto classes = nlohmann::json::array();
    for (int c = 0; c < ds.num_classes(); ++c) {
        const std::string& name = ds.class_name(c);
        fs::create_directories(fs::path(dir) / name);
        for (int i = 0; i < ds.class_size(c); ++i) {
            char fname[32];
            std::snprintf(fname, sizeof(fname), "%05d.ppm", i);
            write_ppm(fs::path(dir) / name / fname, ds.image(c, i));
        }
        classes.push_back({{"name", name}, {"split", split_name(split, c)}});
    }
    manifest["classes"] = classes;
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
}

LoadedDataset load_dataset_dir(const std::string& dir) {
    const fs::path mpath = fs::path(dir) / "manifest.json";
    std::ifstream in(mpath);
    if (!in) throw ConfigError("load_dataset_dir: missing manifest " + mpath.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("load_dataset_dir: bad manifest: " + std::string(e.what()));
    }
    if (!manifest.contains("classes") || !manifest["classes"].is_array())
        throw ConfigError("load_dataset_dir: manifest has no class list");

    std::vector<std::string> names;
    std::vector<std::string> roles;
    for (const auto& entry : manifest["classes"]) {
        names.push_back(entry.at("name").get<std::string>());
        roles.push_back(entry.at("split").get<std::string>());
    }

    // Image shape comes from the first file found.
    std::vector<int> shape;
    Dataset ds;
    ClassSplit split;
    bool ds_ready = false;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const fs::path cdir = fs::path(dir) / names[c];
        if (!fs::is_directory(cdir))
            throw ConfigError("load_dataset_dir: missing class directory " + cdir.string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(cdir))
            if (e.path().extension() == ".ppm") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw ConfigError("load_dataset_dir: class " + names[c] + " has no images");
        for (const auto& f : files) {
            Tensor img = read_ppm(f);
            if (!ds_ready) {
                shape = img.shape;
                ds = Dataset(shape, names);
                ds_ready = true;
            }
            ds.add(static_cast<int>(c), std::move(img));
        }
        const int ci = static_cast<int>(c);
        if (roles[c] == "base") split.base_classes.push_back(ci);
        else if (roles[c] == "validation") split.validation_classes.push_back(ci);
        else if (roles[c] == "novel") split.novel_classes.push_back(ci);
        else throw ConfigError("load_dataset_dir: unknown split role '" + roles[c] + "'");
    }
    return {std::move(ds), std::move(split)};
}

}  // namespace transmatch
