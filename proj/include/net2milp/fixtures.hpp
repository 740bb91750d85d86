#pragma once

#include <cstdint>
#include <filesystem>

#include "net2milp/network_io.hpp"
#include "net2milp/train.hpp"

namespace net2milp {

/// Deterministic 8×8 digit-like glyph set: per class one base stroke
/// pattern, per instance a small shift, intensity scale and pixel noise.
struct FixtureConfig {
  Index classes = 2;       // 2..10
  Index per_class = 20;
  std::uint64_t seed = 7;
};

LabeledImages make_glyph_images(const FixtureConfig& config);

/// Flattened to length-64 inputs with one-hot targets, ready for training.
Dataset make_glyph_dataset(const FixtureConfig& config);

/// Writes `img_####_label_<L>.txt` grids, the layout load_dataset_dir reads.
void write_glyph_dataset_dir(const std::filesystem::path& dir, const FixtureConfig& config);

Dataset dataset_from_labeled(const LabeledImages& data, Index class_count, bool flatten);

}  // namespace net2milp
