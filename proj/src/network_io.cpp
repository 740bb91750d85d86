#include "net2milp/network_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace net2milp {

using nlohmann::json;

std::string fmt_real(double v) {
  if (v == 0.0) return "0";  // normalize -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

namespace {

json tensor2d_to_json(const Tensor& t) {
  json rows = json::array();
  for (Index i = 0; i < t.extent(0); ++i) {
    json row = json::array();
    for (Index j = 0; j < t.extent(1); ++j) row.push_back(t(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor tensor2d_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw std::invalid_argument(what + ": 2-D list expected");
  const Index h = static_cast<Index>(rows.size());
  const Index w = static_cast<Index>(rows[0].size());
  Tensor t({h, w});
  for (Index i = 0; i < h; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != w)
      throw std::invalid_argument(what + ": ragged rows, expected width " + std::to_string(w) +
                                  ", got " + std::to_string(row.size()));
    for (Index j = 0; j < w; ++j) t(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return t;
}

std::string layer_ctx(std::size_t i) { return "layer " + std::to_string(i); }

}  // namespace

std::string save_network(const NetworkSpec& net) {
  json doc;
  doc["input_shape"] = net.input_shape;
  doc["class_count"] = net.class_count;
  json layers = json::array();
  for (const auto& layer : net.layers) {
    json l;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      l["kind"] = "dense";
      l["weights"] = tensor2d_to_json(Tensor::from_matrix(d->weights));
      l["bias"] = std::vector<double>(d->bias.data(), d->bias.data() + d->bias.size());
      l["activation"] = d->activation == Activation::kRelu ? "relu" : "linear";
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      l["kind"] = "conv";
      json ks = json::array();
      for (const Tensor& k : c->kernels) ks.push_back(tensor2d_to_json(k));
      l["kernels"] = std::move(ks);
      l["bias"] = c->bias;
      l["stride"] = c->params.stride;
      l["padding"] = c->params.padding;
    } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
      l["kind"] = "maxpool";
      l["pool_size"] = p->pool_size;
      l["stride"] = p->stride;
    } else {
      l["kind"] = "flatten";
    }
    layers.push_back(std::move(l));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

NetworkSpec load_network(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("weight file: not valid JSON: ") + e.what());
  }
  NetworkSpec net;
  try {
    net.input_shape = doc.at("input_shape").get<std::vector<Index>>();
    net.class_count = doc.at("class_count").get<Index>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("weight file: ") + e.what());
  }
  if (!doc.contains("layers") || !doc["layers"].is_array())
    throw std::invalid_argument("weight file: missing layers list");

  for (std::size_t i = 0; i < doc["layers"].size(); ++i) {
    const json& l = doc["layers"][i];
    std::string kind;
    try {
      kind = l.at("kind").get<std::string>();
    } catch (const json::exception&) {
      throw std::invalid_argument(layer_ctx(i) + ": missing kind");
    }
    try {
      if (kind == "dense") {
        DenseLayer d;
        d.weights = tensor2d_from_json(l.at("weights"), layer_ctx(i) + " weights").map2d();
        auto b = l.at("bias").get<std::vector<double>>();
        d.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Index>(b.size()));
        const std::string act = l.at("activation").get<std::string>();
        if (act == "relu")
          d.activation = Activation::kRelu;
        else if (act == "linear")
          d.activation = Activation::kLinear;
        else
          throw std::invalid_argument("unknown activation '" + act + "'");
        net.layers.emplace_back(std::move(d));
      } else if (kind == "conv") {
        ConvLayer c;
        for (const json& k : l.at("kernels"))
          c.kernels.push_back(tensor2d_from_json(k, layer_ctx(i) + " kernel"));
        c.bias = l.at("bias").get<std::vector<double>>();
        if (c.kernels.empty()) throw std::invalid_argument("no kernels");
        c.params.kernel_size = c.kernels[0].extent(0);
        c.params.stride = l.at("stride").get<Index>();
        c.params.padding = l.at("padding").get<Index>();
        net.layers.emplace_back(std::move(c));
      } else if (kind == "maxpool") {
        MaxPoolLayer p;
        p.pool_size = l.at("pool_size").get<Index>();
        p.stride = l.at("stride").get<Index>();
        net.layers.emplace_back(p);
      } else if (kind == "flatten") {
        net.layers.emplace_back(FlattenLayer{});
      } else {
        throw std::invalid_argument("unknown kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw std::invalid_argument(layer_ctx(i) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(layer_ctx(i) + ": " + e.what());
    }
  }
  net.validate();
  return net;
}

NetworkSpec load_network_file(const std::filesystem::path& path) {
  return load_network(read_text_file(path));
}

void save_network_file(const NetworkSpec& net, const std::filesystem::path& path) {
  write_text_file(path, save_network(net));
}

Tensor load_image_grid(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("image grid: empty");
  const Index w = static_cast<Index>(rows[0].size());
  for (const auto& r : rows)
    if (static_cast<Index>(r.size()) != w)
      throw std::invalid_argument("image grid: ragged rows");
  Tensor t({static_cast<Index>(rows.size()), w});
  for (Index i = 0; i < t.extent(0); ++i)
    for (Index j = 0; j < w; ++j) t(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return t;
}

Tensor load_image_grid_file(const std::filesystem::path& path) {
  return load_image_grid(read_text_file(path));
}

std::string save_image_grid(const Tensor& image) {
  if (image.rank() != 2) throw std::invalid_argument("image grid: rank-2 tensor required");
  std::string out;
  for (Index i = 0; i < image.extent(0); ++i) {
    for (Index j = 0; j < image.extent(1); ++j) {
      if (j) out += " ";
      out += fmt_real(image(i, j));
    }
    out += "\n";
  }
  return out;
}

Tensor load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::invalid_argument("pgm: expected binary P5 format");
  auto next_int = [&in]() {
    // Skip whitespace and '#' comment lines.
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string junk;
        std::getline(in, junk);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v;
    in >> v;
    return v;
  };
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (maxval != 255) throw std::invalid_argument("pgm: 8-bit (maxval 255) required");
  in.get();  // single whitespace after header
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w * h));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw std::invalid_argument("pgm: truncated pixel data");
  Tensor t({static_cast<Index>(h), static_cast<Index>(w)});
  for (Index i = 0; i < t.size(); ++i) t[i] = bytes[static_cast<std::size_t>(i)] / 255.0;
  return t;
}

void save_pgm(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 2) throw std::invalid_argument("pgm: rank-2 tensor required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << image.extent(1) << " " << image.extent(0) << "\n255\n";
  for (Index i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    out.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0))));
  }
}

Tensor load_image(const std::filesystem::path& path) {
  if (path.extension() == ".pgm") return load_pgm(path);
  return load_image_grid_file(path);
}

LabeledImages load_dataset_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  LabeledImages data;
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    const auto pos = stem.rfind("_label_");
    if (pos == std::string::npos) continue;
    data.labels.push_back(std::stol(stem.substr(pos + 7)));
    data.images.push_back(load_image_grid_file(f));
  }
  if (data.images.empty())
    throw std::invalid_argument("dataset dir " + dir.string() + ": no *_label_<L>.txt grids");
  return data;
}

namespace {

std::uint32_t read_be32(std::istream& in) {
  std::uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

LabeledImages load_mnist_idx(const std::filesystem::path& images_path,
                             const std::filesystem::path& labels_path, std::size_t limit) {
  std::ifstream imgs(images_path, std::ios::binary), labs(labels_path, std::ios::binary);
  if (!imgs) throw std::runtime_error("cannot open " + images_path.string());
  if (!labs) throw std::runtime_error("cannot open " + labels_path.string());
  if (read_be32(imgs) != 0x00000803) throw std::invalid_argument("idx: bad image magic");
  if (read_be32(labs) != 0x00000801) throw std::invalid_argument("idx: bad label magic");
  const std::uint32_t n = read_be32(imgs);
  const std::uint32_t h = read_be32(imgs), w = read_be32(imgs);
  if (read_be32(labs) != n) throw std::invalid_argument("idx: image/label count mismatch");
  const std::size_t take = limit == 0 ? n : std::min<std::size_t>(limit, n);
  LabeledImages data;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < take; ++i) {
    imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    Tensor t({static_cast<Index>(h), static_cast<Index>(w)});
    for (Index k = 0; k < t.size(); ++k) t[k] = buf[static_cast<std::size_t>(k)] / 255.0;
    data.images.push_back(std::move(t));
    char lab;
    labs.get(lab);
    data.labels.push_back(static_cast<Index>(static_cast<unsigned char>(lab)));
  }
  if (!imgs || !labs) throw std::invalid_argument("idx: truncated file");
  return data;
}

}  // namespace net2milp
