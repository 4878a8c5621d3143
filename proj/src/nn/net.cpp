#include "affgan/nn/net.hpp"

#include <sstream>

#include "affgan/core/error.hpp"

namespace affgan::nn {

Tensor Net::forward(const Tensor& x, Mode mode, Rng* rng) {
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur, mode, rng);
  return cur;
}

Tensor Net::backward(const Tensor& dy, bool accumulate_params) {
  Tensor cur = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    cur = (*it)->backward(cur, accumulate_params);
  }
  return cur;
}

Tensor Net::penalty_forward(const Tensor& v) {
  Tensor cur = v;
  for (auto& l : layers_) cur = l->penalty_forward(cur);
  return cur;
}

void Net::set_penalty_ctx(bool on) {
  for (auto& l : layers_) l->set_penalty_ctx(on);
}

void Net::zero_grad() {
  for (Param* p : params()) p->grad.setZero();
}

std::vector<Param*> Net::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) l->collect_params(out);
  return out;
}

int64_t Net::parameter_count() {
  int64_t n = 0;
  for (Param* p : params()) n += p->value.size();
  return n;
}

std::string Net::architecture() const {
  std::string out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (i > 0) out += "; ";
    out += layers_[i]->describe();
  }
  return out;
}

void Net::rename_params() {
  for (size_t i = 0; i < layers_.size(); ++i) {
    std::vector<Param*> ps;
    layers_[i]->collect_params(ps);
    for (Param* p : ps) {
      const std::string base = p->name.substr(p->name.find_last_of('.') + 1);
      p->name = msg("l", i, ".", base);
    }
  }
}

Net net_from_architecture(const std::string& arch, uint64_t init_seed) {
  Net net;
  Rng init = Rng::stream(init_seed, "arch-init");
  std::stringstream layers(arch);
  std::string token;
  while (std::getline(layers, token, ';')) {
    std::stringstream ls(token);
    std::string kind;
    ls >> kind;
    if (kind.empty()) continue;
    if (kind == "conv") {
      int ic, oc, k, s, p, bias, sn;
      ls >> ic >> oc >> k >> s >> p >> bias >> sn;
      net.add<Conv2d>(ic, oc, k, s, p, bias != 0, sn != 0, init);
    } else if (kind == "convt") {
      int ic, oc, k, s, p, bias;
      ls >> ic >> oc >> k >> s >> p >> bias;
      net.add<ConvTranspose2d>(ic, oc, k, s, p, bias != 0, init);
    } else if (kind == "bn") {
      int c;
      ls >> c;
      net.add<BatchNorm2d>(c, init);
    } else if (kind == "lrelu") {
      float slope;
      ls >> slope;
      net.add<LeakyReLU>(slope);
    } else if (kind == "relu") {
      net.add<ReLU>();
    } else if (kind == "tanh") {
      net.add<Tanh>();
    } else if (kind == "dropout") {
      float p;
      ls >> p;
      net.add<Dropout>(p);
    } else if (kind == "linear") {
      int in, out, bias;
      ls >> in >> out >> bias;
      net.add<Linear>(in, out, bias != 0, init);
    } else if (kind == "flatten") {
      net.add<Flatten>();
    } else if (kind == "gap") {
      net.add<GlobalAvgPool>();
    } else {
      throw ValidationError(msg("unknown layer kind '", kind,
                                "' in architecture string"));
    }
    if (ls.fail()) {
      throw ValidationError(msg("malformed layer description '", token, "'"));
    }
  }
  return net;
}

}  // namespace affgan::nn
