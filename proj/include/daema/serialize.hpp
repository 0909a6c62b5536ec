#pragma once

// Versioned binary container for trained imputers.
//
// Layout (little-endian):
//   8 bytes   magic "DAEMAMF\0"
//   u32       format version (1)
//   u32       architecture (1 = DAEMA, 2 = DAE)
//   u64 x 3   d, d', d_z (DAE: d, 0, 0)
//   u32       DAE input mode (0 = data+mask, 1 = data-only; 0 for DAEMA)
//   u64       feature count, then per feature: u64 length + UTF-8 bytes
//   f64 x d   normalization means, f64 x d normalization scales
//   u64       layer count, then per layer: u64 out, u64 in, f64 weights (row-major), f64 bias

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "daema/baselines.hpp"
#include "daema/daema.hpp"
#include "daema/pipeline.hpp"

namespace daema {

inline constexpr std::uint32_t kModelFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelFile {
  std::variant<DaemaModel, DaeModel> model;
  NormStats stats;
  std::vector<std::string> feature_names;
};

void save_model(std::ostream& out, const ModelFile& file);
ModelFile load_model(std::istream& in);
void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

// Feature count the stored network expects.
std::size_t feature_count(const ModelFile& file);

}  // namespace daema
