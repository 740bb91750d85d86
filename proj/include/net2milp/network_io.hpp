#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "net2milp/network.hpp"

namespace net2milp {

/// Weight-file document (JSON text): input_shape, class_count, ordered
/// layers. Reals are decimal and round-trip exact. Schema violations are
/// rejected with the layer index and the expected-vs-actual extents.
NetworkSpec load_network(const std::string& document);
NetworkSpec load_network_file(const std::filesystem::path& path);

std::string save_network(const NetworkSpec& net);
void save_network_file(const NetworkSpec& net, const std::filesystem::path& path);

/// Plain-text grid: one row per line, space-separated reals, taken as-is.
Tensor load_image_grid(const std::string& text);
Tensor load_image_grid_file(const std::filesystem::path& path);
std::string save_image_grid(const Tensor& image);

/// Binary 8-bit PGM (P5); pixel bytes are scaled to [0,1] by dividing by 255.
Tensor load_pgm(const std::filesystem::path& path);
/// Values are clamped to [0,1] and rescaled to 8 bits.
void save_pgm(const Tensor& image, const std::filesystem::path& path);

/// Loads whichever format the extension names (.pgm or text grid).
Tensor load_image(const std::filesystem::path& path);

struct LabeledImages {
  std::vector<Tensor> images;
  std::vector<Index> labels;
};

/// Dataset directory: text grids named `*_label_<L>.txt`, read in
/// lexicographic filename order.
LabeledImages load_dataset_dir(const std::filesystem::path& dir);

/// MNIST IDX pair (images + labels files), scaled to [0,1].
LabeledImages load_mnist_idx(const std::filesystem::path& images_path,
                             const std::filesystem::path& labels_path, std::size_t limit = 0);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// %.17g — every double round-trips exactly.
std::string fmt_real(double v);

}  // namespace net2milp
