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

#include "transmatch/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

namespace transmatch {

namespace {

constexpr char kMagic[4] = {'T', 'M', 'C', 'K'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_str(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::string read_str(std::istream& in) {
    const std::uint64_t n = read_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

struct Blob {
    std::string name;
    std::vector<std::uint64_t> dims;
    const double* data;
    std::size_t count;
};

void write_blob(std::ostream& out, const Blob& b) {
    write_str(out, b.name);
    write_str(out, "f64");
    write_u64(out, b.dims.size());
    for (auto d : b.dims) write_u64(out, d);
    write_u64(out, b.count);
    out.write(reinterpret_cast<const char*>(b.data),
              static_cast<std::streamsize>(b.count * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, FeatureExtractor& extractor,
                     const CosineHead* head, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_checkpoint: cannot open " + path);

    out.write(kMagic, 4);
    write_u32(out, static_cast<std::uint32_t>(meta.format_version));

    nlohmann::json j;
    j["embedding_dim"] = meta.embedding_dim;
    j["class_count"] = meta.class_count;
    j["epochs"] = meta.epochs;
    j["seed"] = meta.seed;
    j["config_hash"] = meta.config_hash;
    j["arch"] = nlohmann::json::parse(meta.arch_json);
    if (head) j["head_scale"] = true;
    write_str(out, j.dump());

    std::vector<Blob> blobs;
    for (const Param& p : extractor.parameters())
        blobs.push_back({p.name, {p.size}, p.value, p.size});
    double scale_copy = 0.0;
    if (head) {
        blobs.push_back({"head.weight",
                         {static_cast<std::uint64_t>(head->way()), static_cast<std::uint64_t>(head->dim())},
                         head->weights.ptr(), head->weights.size()});
        scale_copy = head->scale;
        blobs.push_back({"head.scale", {1}, &scale_copy, 1});
    }
    write_u32(out, static_cast<std::uint32_t>(blobs.size()));
    for (const auto& b : blobs) write_blob(out, b);
    if (!out) throw ConfigError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_checkpoint: cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError("load_checkpoint: not a checkpoint file: " + path);
    Checkpoint ck;
    ck.meta.format_version = static_cast<int>(read_u32(in));
    if (ck.meta.format_version != 1)
        throw ConfigError("load_checkpoint: unsupported format version " +
                          std::to_string(ck.meta.format_version));

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_str(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("load_checkpoint: bad metadata: " + std::string(e.what()));
    }
    ck.meta.embedding_dim = j.at("embedding_dim").get<int>();
    ck.meta.class_count = j.at("class_count").get<int>();
    ck.meta.epochs = j.value("epochs", 0);
    ck.meta.seed = j.value("seed", std::uint64_t{0});
    ck.meta.config_hash = j.value("config_hash", "");
    ck.meta.arch_json = j.at("arch").dump();

    ck.extractor = make_conv_backbone(backbone_config_from_json(ck.meta.arch_json), /*seed=*/0);

    std::map<std::string, std::vector<double>> blobs;
    std::map<std::string, std::vector<std::uint64_t>> blob_dims;
    const std::uint32_t nblobs = read_u32(in);
    for (std::uint32_t b = 0; b < nblobs; ++b) {
        const std::string name = read_str(in);
        const std::string dtype = read_str(in);
        if (dtype != "f64")
            throw ConfigError("load_checkpoint: unsupported dtype '" + dtype + "'");
        const std::uint64_t ndims = read_u64(in);
        std::vector<std::uint64_t> dims(ndims);
        for (auto& d : dims) d = read_u64(in);
        const std::uint64_t count = read_u64(in);
        std::vector<double> data(count);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!in) throw ConfigError("load_checkpoint: truncated blob '" + name + "'");
        blobs.emplace(name, std::move(data));
        blob_dims.emplace(name, std::move(dims));
    }

    for (const Param& p : ck.extractor->parameters()) {
        auto it = blobs.find(p.name);
        if (it == blobs.end())
            throw ConfigError("load_checkpoint: missing parameter blob '" + p.name + "'");
        if (it->second.size() != p.size)
            throw ConfigError("load_checkpoint: size mismatch for '" + p.name + "'");
        std::copy(it->second.begin(), it->second.end(), p.value);
    }

    if (blobs.count("head.weight")) {
        const auto& dims = blob_dims.at("head.weight");
        if (dims.size() != 2) throw ConfigError("load_checkpoint: bad head.weight dims");
        CosineHead head(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                        blobs.at("head.scale")[0]);
        std::copy(blobs.at("head.weight").begin(), blobs.at("head.weight").end(),
                  head.weights.ptr());
        ck.head = std::move(head);
    }
    return ck;
}

}  // namespace transmatch
