/*
 * Copyright 2026 The mumis authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "mumis/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mumis/util.hpp"

namespace mumis::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

Tensor init_weight(Tensor::Shape shape, int fan_in, Rng& rng) {
  Tensor t(shape);
  const double std = std::sqrt(1.0 / std::max(1, fan_in));
  double* p = t.data();
  const std::int64_t n = t.numel();
  for (std::int64_t i = 0; i < n; ++i) p[i] = rng.normal() * std;
  return t;
}

}  // namespace

int ArchConfig::input_numel() const {
  if (tag == "mlp") return in_dim;
  return in_channels * height * width;
}

Tensor::Shape ArchConfig::input_shape(int batch) const {
  if (tag == "mlp") return {batch, in_dim};
  return {batch, in_channels, height, width};
}

Model::Model(ArchConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  Rng rng(init_seed);
  auto add_param = [&](const std::string& name, Tensor t) {
    params_.emplace_back(name, ag::leaf(std::move(t), true));
  };
  if (cfg_.tag == "mlp") {
    if (cfg_.in_dim <= 0) throw ConfigError("mlp arch requires in_dim > 0");
    int prev = cfg_.in_dim;
    for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
      const int h = cfg_.hidden[i];
      add_param("fc" + std::to_string(i) + ".weight", init_weight({h, prev}, prev, rng));
      add_param("fc" + std::to_string(i) + ".bias", Tensor::zeros({h}));
      prev = h;
    }
    add_param("head.weight", init_weight({cfg_.num_classes, prev}, prev, rng));
    add_param("head.bias", Tensor::zeros({cfg_.num_classes}));
  } else if (cfg_.tag == "smallconv") {
    if (cfg_.height % (1 << cfg_.channels.size()) != 0 ||
        cfg_.width % (1 << cfg_.channels.size()) != 0)
      throw ConfigError("smallconv: spatial dims must be divisible by 2^blocks");
    int in_c = cfg_.in_channels;
    for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
      const int out_c = cfg_.channels[i];
      const std::string p = "conv" + std::to_string(i);
      add_param(p + ".weight", init_weight({out_c, in_c, 3, 3}, in_c * 9, rng));
      add_param(p + ".bias", Tensor::zeros({out_c}));
      const std::string bn = "bn" + std::to_string(i);
      add_param(bn + ".gamma", Tensor::full({out_c}, 1.0));
      add_param(bn + ".beta", Tensor::zeros({out_c}));
      buffers_.emplace_back(bn + ".running_mean", Tensor::zeros({out_c}));
      buffers_.emplace_back(bn + ".running_var", Tensor::full({out_c}, 1.0));
      in_c = out_c;
    }
    const int sh = cfg_.height >> cfg_.channels.size();
    const int sw = cfg_.width >> cfg_.channels.size();
    const int feat = in_c * sh * sw;
    add_param("head.weight", init_weight({cfg_.num_classes, feat}, feat, rng));
    add_param("head.bias", Tensor::zeros({cfg_.num_classes}));
  } else {
    throw ConfigError("unknown arch tag: " + cfg_.tag);
  }
}

ag::Var Model::param(const std::string& name) const {
  for (const auto& [n, v] : params_) {
    if (n == name) return v;
  }
  throw std::out_of_range("no parameter named " + name);
}

void Model::set_param(const std::string& name, Tensor value) {
  for (auto& [n, v] : params_) {
    if (n == name) {
      if (!same_shape(v->value, value)) throw std::invalid_argument("set_param shape mismatch");
      v->value = std::move(value);
      return;
    }
  }
  throw std::out_of_range("no parameter named " + name);
}

void Model::set_buffer(const std::string& name, Tensor value) {
  for (auto& [n, t] : buffers_) {
    if (n == name) {
      if (!same_shape(t, value)) throw std::invalid_argument("set_buffer shape mismatch");
      t = std::move(value);
      return;
    }
  }
  throw std::out_of_range("no buffer named " + name);
}

std::int64_t Model::param_count() const {
  std::int64_t n = 0;
  for (const auto& [name, v] : params_) n += v->value.numel();
  return n;
}

std::uint64_t Model::params_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, v] : params_) {
    h = fnv1a64(name, h);
    h = fnv1a64(v->value.data(), static_cast<std::size_t>(v->value.numel()) * sizeof(double), h);
  }
  return h;
}

std::uint64_t Model::buffers_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : buffers_) {
    h = fnv1a64(name, h);
    h = fnv1a64(t.data(), static_cast<std::size_t>(t.numel()) * sizeof(double), h);
  }
  return h;
}

Model Model::clone() const {
  Model m(cfg_, 0);
  for (std::size_t i = 0; i < params_.size(); ++i)
    m.params_[i].second->value = params_[i].second->value.clone();
  for (std::size_t i = 0; i < buffers_.size(); ++i)
    m.buffers_[i].second = buffers_[i].second.clone();
  return m;
}

ag::Var Model::activation(const ag::Var& x) const {
  if (cfg_.activation == "tanh") return ag::tanh_op(x);
  if (cfg_.activation == "relu") return ag::posmask_mul(x, x);
  if (cfg_.activation == "silu") {
    // x * sigmoid(x)
    const auto sig = ag::reciprocal(ag::add_const(ag::exp_op(ag::neg(x)), 1.0));
    return ag::mul(x, sig);
  }
  throw ConfigError("unknown activation: " + cfg_.activation);
}

ag::IndexTable Model::im2col_table(int n, int c, int h, int w) const {
  const auto key = std::make_tuple(0, c, (static_cast<long long>(n) << 24) | (h << 12) | w);
  auto it = table_cache_.find(key);
  if (it != table_cache_.end()) return it->second;
  // 3x3 kernel, stride 1, pad 1 -> same spatial size
  auto table = std::make_shared<std::vector<std::int64_t>>();
  table->resize(static_cast<std::size_t>(n) * h * w * c * 9);
  std::int64_t pos = 0;
  for (int ni = 0; ni < n; ++ni) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ci = 0; ci < c; ++ci) {
          for (int ky = -1; ky <= 1; ++ky) {
            for (int kx = -1; kx <= 1; ++kx) {
              const int sy = y + ky, sx = x + kx;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                (*table)[pos++] = -1;
              } else {
                (*table)[pos++] =
                    ((static_cast<std::int64_t>(ni) * c + ci) * h + sy) * w + sx;
              }
            }
          }
        }
      }
    }
  }
  table_cache_[key] = table;
  return table;
}

ag::IndexTable Model::nhwc_to_nchw_table(int n, int c, int h, int w) const {
  const auto key = std::make_tuple(1, c, (static_cast<long long>(n) << 24) | (h << 12) | w);
  auto it = table_cache_.find(key);
  if (it != table_cache_.end()) return it->second;
  auto table = std::make_shared<std::vector<std::int64_t>>();
  table->resize(static_cast<std::size_t>(n) * c * h * w);
  std::int64_t pos = 0;
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          (*table)[pos++] = ((static_cast<std::int64_t>(ni) * h + y) * w + x) * c + ci;
        }
      }
    }
  }
  table_cache_[key] = table;
  return table;
}

ag::Var Model::batchnorm(const ag::Var& x, int block, int n, int c, int s, bool train_mode) {
  const std::string bn = "bn" + std::to_string(block);
  const auto gamma = param(bn + ".gamma");
  const auto beta = param(bn + ".beta");
  ag::Var xhat;
  if (train_mode) {
    const auto mu = ag::channel_mean(x, n, c, s);
    const auto xc = ag::sub(x, ag::reshape(ag::bcast_channel(mu, n, s), x->value.shape()));
    const auto var = ag::channel_mean(ag::mul(xc, xc), n, c, s);
    const auto istd = ag::reciprocal(ag::sqrt_op(ag::add_const(var, kBnEps)));
    xhat = ag::mul(xc, ag::reshape(ag::bcast_channel(istd, n, s), x->value.shape()));
    // Update running statistics outside the graph (unbiased variance).
    const std::int64_t cnt = static_cast<std::int64_t>(n) * s;
    const double unbias = cnt > 1 ? static_cast<double>(cnt) / (cnt - 1) : 1.0;
    for (auto& [name, buf] : buffers_) {
      if (name == bn + ".running_mean") {
        buf.array() = (1.0 - kBnMomentum) * buf.array() + kBnMomentum * mu->value.array();
      } else if (name == bn + ".running_var") {
        buf.array() =
            (1.0 - kBnMomentum) * buf.array() + kBnMomentum * unbias * var->value.array();
      }
    }
  } else {
    Tensor rm, rv;
    for (const auto& [name, buf] : buffers_) {
      if (name == bn + ".running_mean") rm = buf;
      if (name == bn + ".running_var") rv = buf;
    }
    Tensor istd_t({c});
    istd_t.array() = (rv.array() + kBnEps).sqrt().inverse();
    const auto mean_c = ag::constant(rm);
    const auto istd_c = ag::constant(istd_t);
    const auto xc = ag::sub(x, ag::reshape(ag::bcast_channel(mean_c, n, s), x->value.shape()));
    xhat = ag::mul(xc, ag::reshape(ag::bcast_channel(istd_c, n, s), x->value.shape()));
  }
  const auto scaled =
      ag::mul(xhat, ag::reshape(ag::bcast_channel(gamma, n, s), x->value.shape()));
  return ag::add(scaled, ag::reshape(ag::bcast_channel(beta, n, s), x->value.shape()));
}

ag::Var Model::conv_block(const ag::Var& x, int block, int n, int in_c, int& h, int& w,
                          bool train_mode) {
  const int out_c = cfg_.channels[static_cast<std::size_t>(block)];
  const auto weight = param("conv" + std::to_string(block) + ".weight");
  const auto bias = param("conv" + std::to_string(block) + ".bias");
  const int ckk = in_c * 9;
  const std::int64_t rows = static_cast<std::int64_t>(n) * h * w;

  const auto cols = ag::gather(x, im2col_table(n, in_c, h, w),
                               {static_cast<int>(rows), ckk});
  const auto wmat = ag::transpose2d(ag::reshape(weight, {out_c, ckk}));
  auto mm = ag::matmul(cols, wmat);  // [(n*h*w), out_c]
  mm = ag::add(mm, ag::reshape(ag::bcast_channel(bias, static_cast<int>(rows), 1),
                               mm->value.shape()));
  auto out = ag::gather(mm, nhwc_to_nchw_table(n, out_c, h, w), {n, out_c, h, w});
  out = batchnorm(out, block, n, out_c, h * w, train_mode);
  out = activation(out);
  out = ag::avgpool2(out, n, out_c, h, w);
  h /= 2;
  w /= 2;
  return out;
}

ag::Var Model::forward(const ag::Var& x, bool train_mode) {
  const int n = x->value.dim(0);
  if (cfg_.tag == "mlp") {
    if (x->value.numel() != static_cast<std::int64_t>(n) * cfg_.in_dim)
      throw std::invalid_argument("forward: input does not match in_dim");
    auto h = ag::reshape(x, {n, cfg_.in_dim});
    for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
      const auto w = param("fc" + std::to_string(i) + ".weight");
      const auto b = param("fc" + std::to_string(i) + ".bias");
      h = ag::matmul(h, ag::transpose2d(w));
      h = ag::add(h, ag::reshape(ag::bcast_channel(b, n, 1), h->value.shape()));
      h = activation(h);
    }
    const auto w = param("head.weight");
    const auto b = param("head.bias");
    auto out = ag::matmul(h, ag::transpose2d(w));
    return ag::add(out, ag::reshape(ag::bcast_channel(b, n, 1), out->value.shape()));
  }

  // smallconv
  if (x->value.numel() != static_cast<std::int64_t>(n) * cfg_.input_numel())
    throw std::invalid_argument("forward: input does not match conv geometry");
  auto h = ag::reshape(x, {n, cfg_.in_channels, cfg_.height, cfg_.width});
  int hh = cfg_.height, ww = cfg_.width;
  int in_c = cfg_.in_channels;
  for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
    h = conv_block(h, static_cast<int>(i), n, in_c, hh, ww, train_mode);
    in_c = cfg_.channels[i];
  }
  const int feat = in_c * hh * ww;
  h = ag::reshape(h, {n, feat});
  const auto w = param("head.weight");
  const auto b = param("head.bias");
  auto out = ag::matmul(h, ag::transpose2d(w));
  return ag::add(out, ag::reshape(ag::bcast_channel(b, n, 1), out->value.shape()));
}

Tensor Model::forward_values(const Tensor& x) {
  return forward(ag::constant(x), false)->value;
}

Tensor Model::predict_probs(const Tensor& x) {
  Tensor logits = forward_values(x);
  const int n = logits.dim(0), c = logits.dim(1);
  Tensor probs({n, c});
  auto lm = logits.matrix(n, c);
  auto pm = probs.matrix(n, c);
  for (int i = 0; i < n; ++i) {
    const double mx = lm.row(i).maxCoeff();
    Eigen::ArrayXd e = (lm.row(i).array() - mx).exp();
    pm.row(i) = (e / e.sum()).matrix();
  }
  return probs;
}

std::vector<int> Model::predict(const Tensor& x) {
  Tensor logits = forward_values(x);
  const int n = logits.dim(0), c = logits.dim(1);
  auto lm = logits.matrix(n, c);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    lm.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tensor archive
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'U', 'M', 'I', 'S', 'T', 'N', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_tensor_entry(std::ofstream& out, const std::string& name, std::uint8_t kind,
                        const Tensor& t) {
  write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  out.write(reinterpret_cast<const char*>(&kind), 1);
  write_u32(out, static_cast<std::uint32_t>(t.ndim()));
  for (int d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

}  // namespace

void save_tensors(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(model.params().size() + model.buffers().size()));
  for (const auto& [name, v] : model.params()) write_tensor_entry(out, name, 0, v->value);
  for (const auto& [name, t] : model.buffers()) write_tensor_entry(out, name, 1, t);
}

void load_tensors(const std::string& path, Model& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad tensor archive magic in " + path);
  const std::uint32_t count = read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint8_t kind = 0;
    in.read(reinterpret_cast<char*>(&kind), 1);
    const std::uint32_t ndim = read_u32(in);
    Tensor::Shape shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_u32(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated tensor archive " + path);
    if (kind == 0) {
      model.set_param(name, std::move(t));
    } else {
      model.set_buffer(name, std::move(t));
    }
  }
}

}  // namespace mumis::nn
