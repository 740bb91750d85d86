#include "net2milp/fixtures.hpp"

#include <array>
#include <stdexcept>

#include "net2milp/rng.hpp"

namespace net2milp {

namespace {

// 6×6 stroke masks, placed into the 8×8 frame with a per-instance shift
constexpr std::array<std::array<const char*, 6>, 10> kGlyphs = {{
    // 0: ring
    {{"######", "#....#", "#....#", "#....#", "#....#", "######"}},
    // 1: vertical bar
    {{"..##..", "..##..", "..##..", "..##..", "..##..", "..##.."}},
    // 2: horizontal bar
    {{"......", "......", "######", "######", "......", "......"}},
    // 3: right angle
    {{"######", "#.....", "#.....", "#.....", "#.....", "#....."}},
    // 4: plus
    {{"..##..", "..##..", "######", "######", "..##..", "..##.."}},
    // 5: diagonal
    {{"#.....", ".#....", "..#...", "...#..", "....#.", ".....#"}},
    // 6: anti-diagonal
    {{".....#", "....#.", "...#..", "..#...", ".#....", "#....."}},
    // 7: top bar with right tail
    {{"######", ".....#", ".....#", ".....#", ".....#", ".....#"}},
    // 8: two bars
    {{"######", "......", "######", "######", "......", "######"}},
    // 9: corner dots
    {{"##..##", "##..##", "......", "......", "##..##", "##..##"}},
}};

}  // namespace

LabeledImages make_glyph_images(const FixtureConfig& config) {
  if (config.classes < 2 || config.classes > 10)
    throw std::invalid_argument("fixtures: classes must lie in 2..10");
  if (config.per_class < 1) throw std::invalid_argument("fixtures: per_class must be positive");

  LabeledImages out;
  Rng root = Rng::rooted(config.seed);
  for (Index cls = 0; cls < config.classes; ++cls) {
    Rng rng = root.child("glyphs" + std::to_string(cls));
    for (Index n = 0; n < config.per_class; ++n) {
      const Index dy = static_cast<Index>(rng.below(3));  // shift 0..2
      const Index dx = static_cast<Index>(rng.below(3));
      const double fg = rng.uniform(0.75, 1.0);
      Tensor img({8, 8});
      for (Index i = 0; i < 8; ++i)
        for (Index j = 0; j < 8; ++j) img(i, j) = rng.uniform(0.0, 0.08);  // background noise
      const auto& glyph = kGlyphs[static_cast<std::size_t>(cls)];
      for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j)
          if (glyph[static_cast<std::size_t>(i)][j] == '#')
            img(i + dy, j + dx) = fg * rng.uniform(0.85, 1.0);
      out.images.push_back(std::move(img));
      out.labels.push_back(cls);
    }
  }
  return out;
}

Dataset dataset_from_labeled(const LabeledImages& data, Index class_count, bool flatten) {
  Dataset ds;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    ds.inputs.push_back(flatten ? data.images[i].reshaped({data.images[i].size()})
                                : data.images[i]);
    ds.targets.push_back(one_hot(data.labels[i], class_count));
  }
  return ds;
}

Dataset make_glyph_dataset(const FixtureConfig& config) {
  return dataset_from_labeled(make_glyph_images(config), config.classes, true);
}

void write_glyph_dataset_dir(const std::filesystem::path& dir, const FixtureConfig& config) {
  const LabeledImages data = make_glyph_images(config);
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "img_%04zu_label_%ld.txt", i,
                  static_cast<long>(data.labels[i]));
    write_text_file(dir / name, save_image_grid(data.images[i]));
  }
}

}  // namespace net2milp
