#include "rxsentinel/nn/serialize.hpp"

#include "rxsentinel/errors.hpp"

namespace rxsentinel::nn {

namespace {

constexpr std::string_view kMagic = "RXNN";

template <typename T>
std::span<const double> view(const T& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename T>
std::span<double> view_mut(T& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

void write_mlp(ByteWriter& out, const Mlp& net) {
  out.raw(kMagic);
  out.u32(kWeightFormatVersion);
  out.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    out.u64(l.in());
    out.u64(l.out());
    out.u8(static_cast<std::uint8_t>(l.activation));
    out.f64(l.dropout_rate);
    out.u8(l.batch_norm ? 1 : 0);
    out.f64(l.bn_momentum);
    out.f64(l.bn_epsilon);
    out.f64s(view(l.weight));
    out.f64s(view(l.bias));
    if (l.batch_norm) {
      out.f64s(view(l.gamma));
      out.f64s(view(l.beta));
      out.f64s(view(l.running_mean));
      out.f64s(view(l.running_var));
    }
  }
}

Mlp read_mlp(ByteReader& in) {
  if (in.raw(kMagic.size()) != kMagic) throw FormatError("not a weight container");
  const std::uint32_t version = in.u32();
  if (version != kWeightFormatVersion) {
    throw FormatError("unsupported weight container version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  if (count == 0) throw FormatError("weight container has no layers");
  Mlp net;
  for (std::uint32_t i = 0; i < count; ++i) {
    DenseLayer l;
    const std::uint64_t rows = in.u64();
    const std::uint64_t cols = in.u64();
    if (rows == 0 || cols == 0 || rows * cols > in.remaining() / 8) {
      throw FormatError("implausible layer shape in weight container");
    }
    const std::uint8_t act = in.u8();
    if (act > static_cast<std::uint8_t>(Activation::sigmoid)) {
      throw FormatError("unknown activation code");
    }
    l.activation = static_cast<Activation>(act);
    l.dropout_rate = in.f64();
    l.batch_norm = in.u8() != 0;
    l.bn_momentum = in.f64();
    l.bn_epsilon = in.f64();
    l.weight.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.f64s(view_mut(l.weight));
    l.bias.resize(static_cast<Eigen::Index>(cols));
    in.f64s(view_mut(l.bias));
    if (l.batch_norm) {
      for (Row* r : {&l.gamma, &l.beta, &l.running_mean, &l.running_var}) {
        r->resize(static_cast<Eigen::Index>(cols));
        in.f64s(view_mut(*r));
      }
    }
    if (!net.layers.empty() && net.layers.back().out() != l.in()) {
      throw FormatError("layer widths do not chain");
    }
    net.layers.push_back(std::move(l));
  }
  return net;
}

std::string serialize_mlp(const Mlp& net) {
  ByteWriter w;
  write_mlp(w, net);
  return w.take();
}

Mlp deserialize_mlp(const std::string& bytes) {
  ByteReader r(bytes);
  Mlp net = read_mlp(r);
  if (!r.at_end()) throw FormatError("trailing bytes after weight container");
  return net;
}

}  // namespace rxsentinel::nn
