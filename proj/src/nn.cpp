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

#include "transmatch/nn.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <json.hpp>

#include "transmatch/rng.hpp"

namespace transmatch {

void zero_params_grad(const std::vector<Param>& params) {
    for (const Param& p : params) std::fill(p.grad, p.grad + p.size, 0.0);
}

namespace {

// ---------------------------------------------------------------------------
// Layers. 3x3 stride-1 pad-1 convolution, ReLU, 2x2 max pooling and a fully
// connected layer are all the pipeline needs. Each layer caches what its
// backward pass requires; the inner loops are laid out so the x-dimension is
// contiguous and vectorizable.
// ---------------------------------------------------------------------------

struct Conv3x3 {
    int in_ch = 0, out_ch = 0;
    std::vector<double> w, b, gw, gb;  // w: (out,in,3,3)
    Tensor input;                      // cached for backward

    Conv3x3(int in_c, int out_c, Rng& rng) : in_ch(in_c), out_ch(out_c) {
        w.resize(static_cast<std::size_t>(out_c * in_c * 9));
        b.assign(static_cast<std::size_t>(out_c), 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(b.size(), 0.0);
        const double std = std::sqrt(2.0 / (in_c * 9.0));  // He init
        for (auto& v : w) v = rng.normal(0.0, std);
    }

    Tensor forward(const Tensor& x) {
        input = x;
        const int n = x.dim(0), h = x.dim(2), wd = x.dim(3);
        Tensor out({n, out_ch, h, wd});
        const std::size_t plane = static_cast<std::size_t>(h * wd);
        for (int ni = 0; ni < n; ++ni) {
            const double* xin = x.ptr() + static_cast<std::size_t>(ni) * static_cast<std::size_t>(in_ch) * plane;
            double* xout = out.ptr() + static_cast<std::size_t>(ni) * static_cast<std::size_t>(out_ch) * plane;
            for (int co = 0; co < out_ch; ++co) {
                double* dst0 = xout + static_cast<std::size_t>(co) * plane;
                std::fill(dst0, dst0 + plane, b[static_cast<std::size_t>(co)]);
                for (int ci = 0; ci < in_ch; ++ci) {
                    const double* src0 = xin + static_cast<std::size_t>(ci) * plane;
                    const double* wk = w.data() + static_cast<std::size_t>((co * in_ch + ci) * 9);
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y0 = std::max(0, 1 - ky), y1 = std::min(h, h + 1 - ky);
                        for (int kx = 0; kx < 3; ++kx) {
                            const double wv = wk[ky * 3 + kx];
                            const int x0 = std::max(0, 1 - kx), x1 = std::min(wd, wd + 1 - kx);
                            for (int y = y0; y < y1; ++y) {
                                const double* src = src0 + (y + ky - 1) * wd + (kx - 1);
                                double* dst = dst0 + y * wd;
                                for (int xi = x0; xi < x1; ++xi) dst[xi] += wv * src[xi];
                            }
                        }
                    }
                }
            }
        }
        return out;
    }

    Tensor backward(const Tensor& gout) {
        const Tensor& x = input;
        const int n = x.dim(0), h = x.dim(2), wd = x.dim(3);
        Tensor gin(x.shape);
        const std::size_t plane = static_cast<std::size_t>(h * wd);
        for (int ni = 0; ni < n; ++ni) {
            const double* xin = x.ptr() + static_cast<std::size_t>(ni) * static_cast<std::size_t>(in_ch) * plane;
            const double* go = gout.ptr() + static_cast<std::size_t>(ni) * static_cast<std::size_t>(out_ch) * plane;
            double* gi = gin.ptr() + static_cast<std::size_t>(ni) * static_cast<std::size_t>(in_ch) * plane;
            for (int co = 0; co < out_ch; ++co) {
                const double* g0 = go + static_cast<std::size_t>(co) * plane;
                double acc = 0.0;
                for (std::size_t p = 0; p < plane; ++p) acc += g0[p];
                gb[static_cast<std::size_t>(co)] += acc;
                for (int ci = 0; ci < in_ch; ++ci) {
                    const double* src0 = xin + static_cast<std::size_t>(ci) * plane;
                    double* gi0 = gi + static_cast<std::size_t>(ci) * plane;
                    const double* wk = w.data() + static_cast<std::size_t>((co * in_ch + ci) * 9);
                    double* gwk = gw.data() + static_cast<std::size_t>((co * in_ch + ci) * 9);
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y0 = std::max(0, 1 - ky), y1 = std::min(h, h + 1 - ky);
                        for (int kx = 0; kx < 3; ++kx) {
                            const double wv = wk[ky * 3 + kx];
                            const int x0 = std::max(0, 1 - kx), x1 = std::min(wd, wd + 1 - kx);
                            double wsum = 0.0;
                            for (int y = y0; y < y1; ++y) {
                                const double* src = src0 + (y + ky - 1) * wd + (kx - 1);
                                double* gsrc = gi0 + (y + ky - 1) * wd + (kx - 1);
                                const double* g = g0 + y * wd;
                                for (int xi = x0; xi < x1; ++xi) {
                                    wsum += g[xi] * src[xi];
                                    gsrc[xi] += wv * g[xi];
                                }
                            }
                            gwk[ky * 3 + kx] += wsum;
                        }
                    }
                }
            }
        }
        return gin;
    }
};

struct Relu {
    Tensor input;
    Tensor forward(const Tensor& x) {
        input = x;
        Tensor out(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
        return out;
    }
    Tensor backward(const Tensor& gout) {
        Tensor gin(input.shape);
        for (std::size_t i = 0; i < input.size(); ++i) gin[i] = input[i] > 0.0 ? gout[i] : 0.0;
        return gin;
    }
};

struct MaxPool2 {
    std::vector<int> in_shape;
    std::vector<std::size_t> argmax;  // flat source index per output element
    Tensor forward(const Tensor& x) {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        in_shape = x.shape;
        Tensor out({n, c, h / 2, w / 2});
        argmax.assign(out.size(), 0);
        std::size_t o = 0;
        for (int ni = 0; ni < n; ++ni)
            for (int ci = 0; ci < c; ++ci) {
                const std::size_t base = static_cast<std::size_t>((ni * c + ci) * h * w);
                for (int y = 0; y < h; y += 2)
                    for (int xw = 0; xw < w; xw += 2) {
                        std::size_t best = base + static_cast<std::size_t>(y * w + xw);
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const std::size_t idx = base + static_cast<std::size_t>((y + dy) * w + (xw + dx));
                                if (x[idx] > x[best]) best = idx;
                            }
                        out[o] = x[best];
                        argmax[o++] = best;
                    }
            }
        return out;
    }
    Tensor backward(const Tensor& gout) {
        Tensor gin(in_shape);
        for (std::size_t i = 0; i < gout.size(); ++i) gin[argmax[i]] += gout[i];
        return gin;
    }
};

struct Dense {
    int in_dim = 0, out_dim = 0;
    std::vector<double> w, b, gw, gb;  // w: (out,in)
    Tensor input;

    Dense(int in_d, int out_d, Rng& rng) : in_dim(in_d), out_dim(out_d) {
        w.resize(static_cast<std::size_t>(out_d * in_d));
        b.assign(static_cast<std::size_t>(out_d), 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(b.size(), 0.0);
        const double std = std::sqrt(2.0 / in_d);
        for (auto& v : w) v = rng.normal(0.0, std);
    }

    Tensor forward(const Tensor& x) {  // x: (n, in) flattened by caller
        input = x;
        const int n = x.dim(0);
        Tensor out({n, out_dim});
        for (int ni = 0; ni < n; ++ni) {
            const double* xi = x.ptr() + static_cast<std::size_t>(ni * in_dim);
            double* oi = out.ptr() + static_cast<std::size_t>(ni * out_dim);
            for (int o = 0; o < out_dim; ++o)
                oi[o] = b[static_cast<std::size_t>(o)] +
                        dot(w.data() + static_cast<std::size_t>(o * in_dim), xi,
                            static_cast<std::size_t>(in_dim));
        }
        return out;
    }

    Tensor backward(const Tensor& gout) {
        const int n = input.dim(0);
        Tensor gin(input.shape);
        for (int ni = 0; ni < n; ++ni) {
            const double* xi = input.ptr() + static_cast<std::size_t>(ni * in_dim);
            const double* go = gout.ptr() + static_cast<std::size_t>(ni * out_dim);
            double* gi = gin.ptr() + static_cast<std::size_t>(ni * in_dim);
            for (int o = 0; o < out_dim; ++o) {
                const double g = go[o];
                gb[static_cast<std::size_t>(o)] += g;
                double* gwrow = gw.data() + static_cast<std::size_t>(o * in_dim);
                const double* wrow = w.data() + static_cast<std::size_t>(o * in_dim);
                for (int i = 0; i < in_dim; ++i) {
                    gwrow[i] += g * xi[i];
                    gi[i] += g * wrow[i];
                }
            }
        }
        return gin;
    }
};

class ConvBackbone final : public FeatureExtractor {
public:
    ConvBackbone(const BackboneConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        if (cfg.input_shape.size() != 3)
            throw ConfigError("backbone: input_shape must be (c,h,w)");
        const int h = cfg.input_shape[1], w = cfg.input_shape[2];
        if (cfg.channels.size() != 4)
            throw ConfigError("backbone: expected 4 conv block widths");
        if (h % 8 != 0 || w % 8 != 0 || h < 8 || w < 8)
            throw ConfigError("backbone: input height/width must be multiples of 8");
        if (cfg.embedding_dim < 1) throw ConfigError("backbone: embedding_dim must be >= 1");

        Rng rng(mix_seed(seed, fnv1a64("backbone-init")));
        int c = cfg.input_shape[0];
        for (int i = 0; i < 4; ++i) {
            convs_.emplace_back(c, cfg.channels[static_cast<std::size_t>(i)], rng);
            c = cfg.channels[static_cast<std::size_t>(i)];
        }
        flat_dim_ = c * (h / 8) * (w / 8);
        fc_ = std::make_unique<Dense>(flat_dim_, cfg.embedding_dim, rng);
    }

    ConvBackbone(const ConvBackbone& o)
        : cfg_(o.cfg_), convs_(o.convs_), flat_dim_(o.flat_dim_) {
        fc_ = std::make_unique<Dense>(*o.fc_);
    }

    int embedding_dim() const override { return cfg_.embedding_dim; }
    std::vector<int> input_shape() const override { return cfg_.input_shape; }
    const BackboneConfig& config() const { return cfg_; }

    Tensor forward(const Tensor& images) override {
        if (images.shape.size() != 4 || images.dim(1) != cfg_.input_shape[0] ||
            images.dim(2) != cfg_.input_shape[1] || images.dim(3) != cfg_.input_shape[2])
            throw ContractError("backbone: input batch shape " + images.shape_str() +
                                " does not match expected (n," + std::to_string(cfg_.input_shape[0]) +
                                "," + std::to_string(cfg_.input_shape[1]) + "," +
                                std::to_string(cfg_.input_shape[2]) + ")");
        Tensor t = images;
        for (int i = 0; i < 4; ++i) {
            t = convs_[static_cast<std::size_t>(i)].forward(t);
            t = relus_[static_cast<std::size_t>(i)].forward(t);
            if (i < 3) t = pools_[static_cast<std::size_t>(i)].forward(t);
        }
        const int n = t.dim(0);
        t.shape = {n, flat_dim_};  // flatten view
        return fc_->forward(t);
    }

    void backward(const Tensor& grad_embeddings) override {
        Tensor g = fc_->backward(grad_embeddings);
        const int n = g.dim(0);
        const int h8 = cfg_.input_shape[1] / 8, w8 = cfg_.input_shape[2] / 8;
        g.shape = {n, cfg_.channels[3], h8, w8};
        for (int i = 3; i >= 0; --i) {
            if (i < 3) g = pools_[static_cast<std::size_t>(i)].backward(g);
            g = relus_[static_cast<std::size_t>(i)].backward(g);
            g = convs_[static_cast<std::size_t>(i)].backward(g);
        }
    }

    std::vector<Param> parameters() override {
        std::vector<Param> ps;
        for (int i = 0; i < 4; ++i) {
            auto& c = convs_[static_cast<std::size_t>(i)];
            const std::string tag = "conv" + std::to_string(i + 1);
            ps.push_back({tag + ".weight", c.w.data(), c.gw.data(), c.w.size()});
            ps.push_back({tag + ".bias", c.b.data(), c.gb.data(), c.b.size()});
        }
        ps.push_back({"embed.weight", fc_->w.data(), fc_->gw.data(), fc_->w.size()});
        ps.push_back({"embed.bias", fc_->b.data(), fc_->gb.data(), fc_->b.size()});
        return ps;
    }

    std::unique_ptr<FeatureExtractor> clone() const override {
        return std::make_unique<ConvBackbone>(*this);
    }

private:
    BackboneConfig cfg_;
    std::vector<Conv3x3> convs_;
    std::array<Relu, 4> relus_;
    std::array<MaxPool2, 3> pools_;
    std::unique_ptr<Dense> fc_;
    int flat_dim_ = 0;
};

}  // namespace

std::unique_ptr<FeatureExtractor> make_conv_backbone(const BackboneConfig& cfg, std::uint64_t seed) {
    return std::make_unique<ConvBackbone>(cfg, seed);
}

std::string backbone_config_to_json(const BackboneConfig& cfg) {
    nlohmann::json j;
    j["type"] = "conv_backbone";
    j["input_shape"] = cfg.input_shape;
    j["channels"] = cfg.channels;
    j["embedding_dim"] = cfg.embedding_dim;
    return j.dump();
}

BackboneConfig backbone_config_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.value("type", "") != "conv_backbone")
        throw ConfigError("unknown backbone type in checkpoint: " + j.value("type", "?"));
    BackboneConfig cfg;
    cfg.input_shape = j.at("input_shape").get<std::vector<int>>();
    cfg.channels = j.at("channels").get<std::vector<int>>();
    cfg.embedding_dim = j.at("embedding_dim").get<int>();
    return cfg;
}

Tensor stack_images(const std::vector<Tensor>& images, const std::vector<int>& image_shape) {
    std::vector<int> shape;
    shape.push_back(static_cast<int>(images.size()));
    shape.insert(shape.end(), image_shape.begin(), image_shape.end());
    Tensor out(shape);
    const std::size_t per = static_cast<std::size_t>(Tensor::count(image_shape));
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].shape != image_shape)
            throw ContractError("stack_images: image " + std::to_string(i) + " has shape " +
                                images[i].shape_str());
        std::copy(images[i].data.begin(), images[i].data.end(), out.data.begin() + i * per);
    }
    return out;
}

Tensor embed(FeatureExtractor& extractor, const std::vector<Tensor>& images) {
    if (images.empty()) return Tensor({0, extractor.embedding_dim()});
    return extractor.forward(stack_images(images, extractor.input_shape()));
}

Tensor softmax_rows(const Tensor& logits) {
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor out(logits.shape);
    for (int i = 0; i < n; ++i) {
        const double* z = logits.ptr() + static_cast<std::size_t>(i * k);
        double* p = out.ptr() + static_cast<std::size_t>(i * k);
        double m = z[0];
        for (int j = 1; j < k; ++j) m = std::max(m, z[j]);
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += (p[j] = std::exp(z[j] - m));
        for (int j = 0; j < k; ++j) p[j] /= s;
    }
    return out;
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits) {
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw ContractError("softmax_cross_entropy: label count does not match batch");
    Tensor probs = softmax_rows(logits);
    if (dlogits) *dlogits = Tensor(logits.shape);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= k) throw ContractError("softmax_cross_entropy: label out of range");
        const double* p = probs.ptr() + static_cast<std::size_t>(i * k);
        loss -= std::log(std::max(p[y], 1e-12));
        if (dlogits) {
            double* d = dlogits->ptr() + static_cast<std::size_t>(i * k);
            for (int j = 0; j < k; ++j) d[j] = p[j] / n;
            d[y] -= 1.0 / n;
        }
    }
    return loss / n;
}

}  // namespace transmatch
