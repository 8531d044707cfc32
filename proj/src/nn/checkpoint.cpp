#include "forged/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace forged::nn {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'G', 'C', 'N', 'N', '0', '1'};

enum class Kind : std::uint32_t { Conv2d = 1, ReLU = 2, MaxPool2d = 3, Flatten = 4, FullyConnected = 5, Softmax = 6 };

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

struct Reader {
  const std::vector<char>& bytes;
  const std::filesystem::path& path;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (pos + n > bytes.size()) {
      throw Error(ErrorCode::TruncatedFile,
                  fmt::format("{}: expected {} more bytes at offset {}, file has {}", path.string(), n, pos,
                              bytes.size()));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  void floats(std::vector<float>& dst) {
    need(dst.size() * 4);
    std::memcpy(dst.data(), bytes.data() + pos, dst.size() * 4);
    pos += dst.size() * 4;
  }
};

}  // namespace

void save_checkpoint(const CnnModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot create {}", path.string()));
  out.write(kMagic, 8);
  const auto in = model.input_shape();
  put_u32(out, static_cast<std::uint32_t>(in.channels));
  put_u32(out, static_cast<std::uint32_t>(in.height));
  put_u32(out, static_cast<std::uint32_t>(in.width));
  put_u32(out, static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& spec : model.layers()) {
    std::uint32_t kind = 0, a = 0, b = 0, stride = 0;
    if (const auto* c = std::get_if<layer::Conv2d>(&spec)) {
      kind = static_cast<std::uint32_t>(Kind::Conv2d);
      a = static_cast<std::uint32_t>(c->in_ch);
      b = static_cast<std::uint32_t>(c->out_ch);
      stride = static_cast<std::uint32_t>(c->stride);
    } else if (const auto* f = std::get_if<layer::FullyConnected>(&spec)) {
      kind = static_cast<std::uint32_t>(Kind::FullyConnected);
      a = static_cast<std::uint32_t>(f->in);
      b = static_cast<std::uint32_t>(f->out);
    } else if (std::holds_alternative<layer::ReLU>(spec)) {
      kind = static_cast<std::uint32_t>(Kind::ReLU);
    } else if (std::holds_alternative<layer::MaxPool2d>(spec)) {
      kind = static_cast<std::uint32_t>(Kind::MaxPool2d);
    } else if (std::holds_alternative<layer::Flatten>(spec)) {
      kind = static_cast<std::uint32_t>(Kind::Flatten);
    } else {
      kind = static_cast<std::uint32_t>(Kind::Softmax);
    }
    for (auto v : {kind, a, b, stride}) put_u32(out, v);
  }
  for (const auto& p : model.params()) {
    out.write(reinterpret_cast<const char*>(p.weight.data()), static_cast<std::streamsize>(p.weight.size() * 4));
    out.write(reinterpret_cast<const char*>(p.bias.data()), static_cast<std::streamsize>(p.bias.size() * 4));
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

CnnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  const std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw Error(ErrorCode::BadMagic, fmt::format("{} is not a model checkpoint", path.string()));
  }
  Reader r{bytes, path, 8};
  Shape3 input;
  input.channels = r.u32();
  input.height = r.u32();
  input.width = r.u32();
  const std::uint32_t n_layers = r.u32();
  std::vector<LayerSpec> layers;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto kind = static_cast<Kind>(r.u32());
    const std::uint32_t a = r.u32(), b = r.u32(), stride = r.u32();
    switch (kind) {
      case Kind::Conv2d: layers.emplace_back(layer::Conv2d{a, b, stride}); break;
      case Kind::ReLU: layers.emplace_back(layer::ReLU{}); break;
      case Kind::MaxPool2d: layers.emplace_back(layer::MaxPool2d{}); break;
      case Kind::Flatten: layers.emplace_back(layer::Flatten{}); break;
      case Kind::FullyConnected: layers.emplace_back(layer::FullyConnected{a, b}); break;
      case Kind::Softmax: layers.emplace_back(layer::Softmax{}); break;
      default:
        throw Error(ErrorCode::BadMagic, fmt::format("{}: unknown layer kind {}", path.string(), i));
    }
  }
  CnnModel model(std::move(layers), input);
  for (auto& p : model.params()) {
    r.floats(p.weight);
    r.floats(p.bias);
  }
  if (r.pos != bytes.size()) {
    throw Error(ErrorCode::BadMagic, fmt::format("{}: {} trailing bytes", path.string(), bytes.size() - r.pos));
  }
  return model;
}

}  // namespace forged::nn
