#include "daema/serialize.hpp"

#include <span>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

static_assert(std::endian::native == std::endian::little, "model container assumes a little-endian host");

namespace daema {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'E', 'M', 'A', 'M', 'F', '\0'};
constexpr std::uint32_t kArchDaema = 1;
constexpr std::uint32_t kArchDae = 2;
// Guards allocation from corrupt headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("model file truncated");
  return v;
}

template <class Vec = std::vector<double>>
Vec get_doubles(std::istream& in, std::uint64_t count) {
  if (count > kMaxElements) throw FormatError("model file declares an implausible array size");
  Vec v(count);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
    throw FormatError("model file truncated");
  }
  return v;
}

void put_layers(std::ostream& out, const std::vector<AffineParams>& layers) {
  put<std::uint64_t>(out, layers.size());
  for (const auto& l : layers) {
    put<std::uint64_t>(out, l.out_dim());
    put<std::uint64_t>(out, l.in_dim());
    put_doubles(out, l.weight.data);
    put_doubles(out, l.bias);
  }
}

void get_layers(std::istream& in, std::vector<AffineParams>& layers) {
  const auto count = get<std::uint64_t>(in);
  if (count != layers.size()) throw FormatError("model file has an unexpected layer count");
  for (auto& l : layers) {
    const auto out = get<std::uint64_t>(in);
    const auto inp = get<std::uint64_t>(in);
    if (out != l.out_dim() || inp != l.in_dim()) throw FormatError("model file layer shape does not match its dims");
    l.weight.data = get_doubles<Buffer>(in, out * inp);
    l.bias = get_doubles<Buffer>(in, out);
  }
}

}  // namespace

std::size_t feature_count(const ModelFile& file) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DaemaModel>) {
          return m.dims().d;
        } else {
          return m.d();
        }
      },
      file.model);
}

void save_model(std::ostream& out, const ModelFile& file) {
  const std::size_t d = feature_count(file);
  if (file.stats.mean.size() != d || file.stats.scale.size() != d) {
    throw DimensionError("save_model: normalization stats do not match the model width");
  }
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kModelFormatVersion);
  if (const auto* m = std::get_if<DaemaModel>(&file.model)) {
    put<std::uint32_t>(out, kArchDaema);
    put<std::uint64_t>(out, m->dims().d);
    put<std::uint64_t>(out, m->dims().d_prime);
    put<std::uint64_t>(out, m->dims().d_z);
    put<std::uint32_t>(out, 0);
  } else {
    const auto& dae = std::get<DaeModel>(file.model);
    put<std::uint32_t>(out, kArchDae);
    put<std::uint64_t>(out, dae.d());
    put<std::uint64_t>(out, 0);
    put<std::uint64_t>(out, 0);
    put<std::uint32_t>(out, dae.input_mode() == DaeInput::data_and_mask ? 0 : 1);
  }
  put<std::uint64_t>(out, file.feature_names.size());
  for (const auto& name : file.feature_names) {
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  put_doubles(out, file.stats.mean);
  put_doubles(out, file.stats.scale);
  std::visit([&](const auto& m) { put_layers(out, m.params()); }, file.model);
  if (!out) throw FormatError("failed writing model");
}

ModelFile load_model(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  const auto arch = get<std::uint32_t>(in);
  const auto d = get<std::uint64_t>(in);
  const auto d_prime = get<std::uint64_t>(in);
  const auto d_z = get<std::uint64_t>(in);
  const auto input_mode = get<std::uint32_t>(in);
  if (d == 0 || d > 1'000'000) throw FormatError("model file declares an implausible feature count");

  ModelFile file;
  if (arch == kArchDaema) {
    if (d_prime == 0 || d_z == 0 || d_prime * d_z > kMaxElements) throw FormatError("bad DAEMA dimensions");
    file.model = DaemaModel(DaemaDims{d, d_prime, d_z});
  } else if (arch == kArchDae) {
    if (input_mode > 1) throw FormatError("bad DAE input mode");
    file.model = DaeModel(d, input_mode == 0 ? DaeInput::data_and_mask : DaeInput::data_only);
  } else {
    throw FormatError("unknown architecture tag " + std::to_string(arch));
  }

  const auto names = get<std::uint64_t>(in);
  if (names > d) throw FormatError("model file lists more feature names than features");
  for (std::uint64_t i = 0; i < names; ++i) {
    const auto len = get<std::uint64_t>(in);
    if (len > (1u << 20)) throw FormatError("feature name too long");
    std::string s(len, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(len))) throw FormatError("model file truncated");
    file.feature_names.push_back(std::move(s));
  }
  file.stats.mean = get_doubles(in, d);
  file.stats.scale = get_doubles(in, d);
  std::visit([&](auto& m) { get_layers(in, m.params()); }, file.model);
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  save_model(out, file);
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_model(in);
}

}  // namespace daema
