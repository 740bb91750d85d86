#include "net2milp/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "net2milp/adversarial.hpp"
#include "net2milp/bounds.hpp"
#include "net2milp/branch_and_bound.hpp"
#include "net2milp/capsule.hpp"
#include "net2milp/encode_cnn.hpp"
#include "net2milp/encode_dnn.hpp"
#include "net2milp/fixtures.hpp"
#include "net2milp/network_io.hpp"
#include "net2milp/train.hpp"

namespace net2milp {

namespace {

constexpr const char* kVersion = "net2milp 0.1.0";

namespace fs = std::filesystem;
using nlohmann::json;

int log_level() {
  const char* env = std::getenv("NET2MILP_LOG");
  if (!env) return 0;
  const std::string v = env;
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[net2milp] " << msg << "\n";
}

struct RunContext {
  std::string command;
  std::vector<std::string> inputs;
  json config = json::object();
  std::uint64_t seed = 0;
  int threads = 1;
  fs::path out_dir;
  json result = json::object();
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
};

// manifest.json carries everything needed to reproduce the run and is
// byte-identical across reruns; timing goes to run.log instead.
void write_manifest(const RunContext& ctx) {
  fs::create_directories(ctx.out_dir);
  json doc;
  doc["command"] = ctx.command;
  doc["inputs"] = ctx.inputs;
  doc["config"] = ctx.config;
  doc["seed"] = ctx.seed;
  doc["threads"] = ctx.threads;
  doc["version"] = kVersion;
  doc["result"] = ctx.result;
  write_text_file(ctx.out_dir / "manifest.json", doc.dump(2) + "\n");

  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started).count();
  std::ostringstream log;
  log << ctx.command << " finished, wall time " << wall_s << " s\n";
  write_text_file(ctx.out_dir / "run.log", log.str());
}

// --config JSON overlays defaults before flags are applied
json load_config_overlay(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(read_text_file(path));
  } catch (const std::exception& e) {
    throw CLI::ValidationError(std::string("--config: ") + e.what());
  }
}

template <typename T>
void overlay(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

NetworkSpec build_preset(const std::string& preset, const std::vector<Index>& input_shape,
                         Index classes, InitKind init, Rng& rng) {
  const Index n0 = Tensor::count(input_shape);
  if (preset.rfind("dense-", 0) == 0) {
    std::vector<Index> hidden;
    std::stringstream ss(preset.substr(6));
    std::string part;
    while (std::getline(ss, part, '-')) hidden.push_back(std::stol(part));
    if (init == InitKind::kUniformKernel)
      throw CLI::ValidationError("--init uniform_kernel applies to conv presets");
    return init_dense_network(n0, hidden, classes, Activation::kRelu, rng);
  }
  if (preset == "cnn-8x8") {
    if (input_shape != std::vector<Index>{8, 8})
      throw CLI::ValidationError("preset cnn-8x8 needs 8x8 inputs");
    NetworkSpec net;
    net.input_shape = input_shape;
    net.class_count = classes;
    ConvLayer conv;
    const Index m = 4;
    for (Index g = 0; g < m; ++g) {
      Rng stream = rng.child("kernel" + std::to_string(g));
      conv.kernels.push_back(init == InitKind::kUniformKernel
                                 ? uniform_kernel_init(3, 1, m, stream)
                                 : he_init({3, 3}, 9, stream));
      conv.bias.push_back(0.0);
    }
    conv.params = {3, 1, 0};
    net.layers.emplace_back(std::move(conv));
    net.layers.emplace_back(MaxPoolLayer{2, 2});
    net.layers.emplace_back(FlattenLayer{});
    DenseLayer fc;
    Rng s1 = rng.child("fc");
    fc.weights = he_init({12, 36}, 36, s1).map2d();
    fc.bias = Eigen::VectorXd::Zero(12);
    net.layers.emplace_back(std::move(fc));
    DenseLayer head;
    Rng s2 = rng.child("head");
    head.weights = he_init({classes, 12}, 12, s2).map2d();
    head.bias = Eigen::VectorXd::Zero(classes);
    net.layers.emplace_back(std::move(head));
    net.validate();
    return net;
  }
  throw CLI::ValidationError("unknown preset '" + preset + "' (dense-<n>-<n>... or cnn-8x8)");
}

BoundSet bounds_for(const NetworkSpec& net, const std::string& mode, double budget,
                    const InputMode& input) {
  if (mode == "interval") return interval_propagate(net, input.lb, input.ub);
  if (mode == "lp") return lp_tighten(net, input.lb, input.ub, TightenMode::kLpRelaxation, budget);
  if (mode == "milp") return lp_tighten(net, input.lb, input.ub, TightenMode::kExactMilp, budget);
  throw CLI::ValidationError("--bounds must be interval, lp or milp");
}

BoundSet bounds_for(const NetworkSpec& net, const std::string& mode, double budget) {
  return bounds_for(net, mode, budget, InputMode::unit_box(Tensor::count(net.input_shape)));
}

Tensor load_input_image(const fs::path& path, const NetworkSpec& net) {
  Tensor img = load_image(path);
  const Index want = Tensor::count(net.input_shape);
  if (img.size() != want)
    throw std::invalid_argument("image has " + std::to_string(img.size()) +
                                " pixels, network expects " + std::to_string(want));
  if (img.shape() != net.input_shape) img = img.reshaped(net.input_shape);
  return img;
}

json solve_summary(const SolveResult& r) {
  json j;
  j["status"] = to_string(r.status);
  j["node_count"] = r.node_count;
  if (r.optimal()) {
    j["objective"] = r.objective;
    j["best_bound"] = r.best_bound;
  }
  return j;
}

int exit_for_status(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return kExitOk;
    case SolveStatus::kInfeasible: return kExitInfeasible;
    default: return kExitNumerical;
  }
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_train(RunContext& ctx, const std::string& dataset_dir, const std::string& mnist_images,
              const std::string& mnist_labels, long mnist_limit, const std::string& preset,
              const std::string& init_name, Index epochs, double lr) {
  const LabeledImages data =
      mnist_images.empty()
          ? load_dataset_dir(dataset_dir)
          : load_mnist_idx(mnist_images, mnist_labels, static_cast<std::size_t>(mnist_limit));
  Index classes = 0;
  for (Index l : data.labels) classes = std::max(classes, l + 1);
  const InitKind init =
      init_name == "uniform_kernel" ? InitKind::kUniformKernel : InitKind::kHeGaussian;

  Rng rng = Rng::rooted(ctx.seed).child("train");
  const bool dense = preset.rfind("dense-", 0) == 0;
  const std::vector<Index> input_shape =
      dense ? std::vector<Index>{data.images[0].size()}
            : std::vector<Index>{data.images[0].extent(0), data.images[0].extent(1)};
  NetworkSpec net = build_preset(preset, input_shape, classes, init, rng);
  const Dataset ds = dataset_from_labeled(data, classes, dense);

  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.seed = ctx.seed;
  cfg.init = init;
  log_info("training " + preset + " on " + std::to_string(ds.inputs.size()) + " instances");
  const TrainResult result = train(net, ds, cfg);

  Index correct = 0;
  for (std::size_t i = 0; i < ds.inputs.size(); ++i)
    if (classify(result.net, ds.inputs[i]).label == data.labels[i]) ++correct;

  fs::create_directories(ctx.out_dir);
  save_network_file(result.net, ctx.out_dir / "weights.json");
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e)
    csv += std::to_string(e) + "," + fmt_real(result.loss_history[e]) + "\n";
  write_text_file(ctx.out_dir / "loss.csv", csv);

  ctx.result["final_loss"] = result.loss_history.back();
  ctx.result["train_accuracy"] =
      static_cast<double>(correct) / static_cast<double>(ds.inputs.size());
  ctx.result["classes"] = classes;
  write_manifest(ctx);
  return kExitOk;
}

int cmd_encode(RunContext& ctx, const std::string& weights, const std::string& arch,
               const std::string& bounds_mode, const std::string& input_spec,
               bool include_biases, double gamma, double budget, bool bigm) {
  if (arch != "dnn" && arch != "cnn") throw CLI::ValidationError("--arch must be dnn or cnn");
  const NetworkSpec net = load_network_file(weights);
  const bool dense = net.dense_only();
  if (arch == "dnn" && !dense) {
    for (std::size_t i = 0; i < net.layers.size(); ++i)
      if (!std::holds_alternative<DenseLayer>(net.layers[i]))
        throw std::invalid_argument("--arch dnn but layer " + std::to_string(i) +
                                    " is not dense");
  }
  if (arch == "cnn") validate_cnn_shape(net);  // rejects with the layer index

  InputMode input = InputMode::unit_box(Tensor::count(net.input_shape));
  if (input_spec.rfind("fixed:", 0) == 0) {
    input = InputMode::fixed(load_input_image(input_spec.substr(6), net));
  } else if (input_spec != "box") {
    throw CLI::ValidationError("--input must be 'box' or 'fixed:PATH'");
  }
  // bounds are propagated from the declared input box, which for a fixed
  // input is the image itself
  const BoundSet bounds = bounds_for(net, bounds_mode, budget, input);

  EncodedModel em;
  if (arch == "dnn") {
    DnnEncodeConfig cfg;
    cfg.activation_penalty = gamma;
    cfg.input = input;
    em = encode_dnn(net, bounds, cfg);
  } else {
    CnnEncodeConfig cfg;
    cfg.cost_relu_z = gamma;
    cfg.cost_fc_z = gamma;
    cfg.include_biases = include_biases;
    cfg.input = input;
    em = encode_cnn(net, bounds, cfg);
  }

  const MilpModel& model_out = em.model;
  const std::string lp = write_lp(bigm ? to_big_m(model_out) : model_out);
  fs::create_directories(ctx.out_dir);
  write_text_file(ctx.out_dir / "model.lp", lp);
  write_text_file(ctx.out_dir / "varmap.json", em.varmap.to_json());
  write_text_file(ctx.out_dir / "bounds.json", save_bounds(bounds));

  ctx.result["variables"] = em.model.variables().size();
  ctx.result["linear_constraints"] = em.model.linear_constraints().size();
  ctx.result["indicator_constraints"] = em.model.indicator_constraints().size();
  ctx.result["binaries"] = em.model.binary_count();
  write_manifest(ctx);
  return kExitOk;
}

int cmd_bounds(RunContext& ctx, const std::string& weights, const std::string& mode,
               double budget) {
  const NetworkSpec net = load_network_file(weights);
  const BoundSet bounds = bounds_for(net, mode, budget);
  fs::create_directories(ctx.out_dir);
  write_text_file(ctx.out_dir / "bounds.json", save_bounds(bounds));
  ctx.result["layers"] = bounds.layers.size();
  ctx.result["warnings"] = bounds.warnings.size();
  write_manifest(ctx);
  return kExitOk;
}

int cmd_solve(RunContext& ctx, const std::string& model_path, long node_limit,
              double time_limit) {
  const MilpModel model = parse_lp(read_text_file(model_path));
  BnbConfig cfg;
  if (node_limit > 0) cfg.node_limit = node_limit;
  cfg.time_budget_s = time_limit;
  const SolveResult r = branch_and_bound(model, cfg);

  json sol = solve_summary(r);
  if (r.optimal()) {
    const EvalResult ev = evaluate(model, r.assignment);
    sol["feasible_under_evaluate"] = ev.feasible;
    json assign = json::object();
    for (const auto& v : model.variables())
      assign[v.name] = r.assignment[static_cast<std::size_t>(v.id)];
    sol["assignment"] = std::move(assign);
  }
  fs::create_directories(ctx.out_dir);
  write_text_file(ctx.out_dir / "solution.json", sol.dump(2) + "\n");
  ctx.result = solve_summary(r);
  write_manifest(ctx);
  return exit_for_status(r.status);
}

int cmd_adversarial(RunContext& ctx, const std::string& weights, const std::string& image_path,
                    Index label, const std::string& target_rule, double eps_cap, double margin,
                    const std::string& bounds_mode, double gamma, long node_limit,
                    double time_limit, double budget) {
  const NetworkSpec net = load_network_file(weights);
  const Tensor image = load_input_image(image_path, net);

  const Classification c = classify(net, image);
  if (c.label != label)
    throw std::invalid_argument("oracle classifies the image as " + std::to_string(c.label) +
                                ", not --label " + std::to_string(label));

  AdversarialConfig cfg;
  cfg.eps_cap = eps_cap;
  cfg.margin = margin;
  if (target_rule == "plus5") {
    cfg.rule = TargetRule::kPlusFiveModTen;
  } else if (target_rule.rfind("explicit:", 0) == 0) {
    cfg.rule = TargetRule::kExplicit;
    cfg.explicit_target = std::stol(target_rule.substr(9));
  } else {
    throw CLI::ValidationError("--target-rule must be plus5 or explicit:<label>");
  }

  const BoundSet bounds = bounds_for(net, bounds_mode, budget);
  BnbConfig solver;
  if (node_limit > 0) solver.node_limit = node_limit;
  solver.time_budget_s = time_limit;
  log_info("solving adversarial model");
  const AdversarialRun run = run_adversarial(net, bounds, image, label, cfg, gamma, solver);

  fs::create_directories(ctx.out_dir);
  json report;
  report["original_label"] = label;
  report["target"] = run.build.target;
  report["status"] = to_string(run.solve.status);
  report["node_count"] = run.solve.node_count;
  if (run.solve.optimal()) {
    report["objective"] = run.solve.objective;
    report["margin_achieved"] = run.result.achieved_margin;
    report["eps_total"] = run.result.eps_total;
    report["max_pixel_change"] = run.result.pixel_diff.data().maxCoeff();
    report["verdict"] = run.verdict.ok;
    report["verdict_failures"] = run.verdict.failures;
    Tensor grid = run.result.adversarial;
    if (grid.rank() == 1) {
      // image files are 2-D; recover the grid shape of the source image
      const Tensor src = load_image(image_path);
      grid = grid.reshaped(src.shape());
    }
    write_text_file(ctx.out_dir / "adversarial.txt", save_image_grid(grid));
    save_pgm(grid, ctx.out_dir / "adversarial.pgm");
  } else if (run.solve.status == SolveStatus::kInfeasible) {
    report["certificate"] =
        "no adversarial exists within eps_cap " + fmt_real(eps_cap) + " at margin " +
        fmt_real(margin);
  }
  write_text_file(ctx.out_dir / "report.json", report.dump(2) + "\n");
  ctx.result = report;
  write_manifest(ctx);

  if (run.solve.status == SolveStatus::kInfeasible) return kExitInfeasible;
  if (!run.solve.optimal()) return kExitNumerical;
  return run.verdict.ok ? kExitOk : kExitNumerical;
}

int cmd_verify(RunContext& ctx, const std::string& weights, const std::string& original_path,
               const std::string& adversarial_path, Index label, const std::string& target_rule,
               double eps_cap, double margin) {
  const NetworkSpec net = load_network_file(weights);
  const Tensor original = load_input_image(original_path, net);
  const Tensor adversarial = load_input_image(adversarial_path, net);

  AdversarialConfig cfg;
  cfg.eps_cap = eps_cap;
  cfg.margin = margin;
  if (target_rule.rfind("explicit:", 0) == 0) {
    cfg.rule = TargetRule::kExplicit;
    cfg.explicit_target = std::stol(target_rule.substr(9));
  }
  const Index target = target_label(label, cfg);

  const Classification c = classify(net, adversarial);
  json report;
  report["target"] = target;
  report["achieved_label"] = c.label;
  std::vector<std::string> failures;
  if (c.label != target) failures.push_back("argmax is not the target");
  if (!(c.scores[target] > 0)) failures.push_back("target score is not strictly positive");
  for (Index i = 0; i < c.scores.size(); ++i)
    if (i != target && c.scores[target] < margin * c.scores[i] - 1e-6) {
      failures.push_back("margin violated against class " + std::to_string(i));
      break;
    }
  for (Index j = 0; j < original.size(); ++j)
    if (std::abs(adversarial[j] - original[j]) > eps_cap + 1e-9) {
      failures.push_back("pixel cap violated at " + std::to_string(j));
      break;
    }
  report["verdict"] = failures.empty();
  report["failures"] = failures;
  fs::create_directories(ctx.out_dir);
  write_text_file(ctx.out_dir / "verify.json", report.dump(2) + "\n");
  ctx.result = report;
  write_manifest(ctx);
  return failures.empty() ? kExitOk : kExitInfeasible;
}

int cmd_caps(RunContext& ctx, const std::string& demo, int iterations) {
  std::ostringstream out;
  if (demo == "params") {
    const caps::CapsArchitecture arch;
    const caps::ParamCounts pc = caps::param_count(arch);
    out << "conv layer:          " << pc.conv << "\n"
        << "primarycaps layer:   " << pc.primarycaps << "\n"
        << "digitcaps layer:     " << pc.digitcaps << "\n"
        << "sum (without decoder): " << pc.sum_without_decoder << "\n"
        << "decoder:             " << pc.decoder << "\n"
        << "sum (with decoder):  " << pc.sum_with_decoder << "\n";
    ctx.result["sum_without_decoder"] = pc.sum_without_decoder;
    ctx.result["sum_with_decoder"] = pc.sum_with_decoder;
  } else if (demo == "squash") {
    Eigen::VectorXd unit(3);
    unit << 1, 0, 0;
    out << "||squash(unit)|| = " << caps::squash(unit).norm() << "\n";
    for (double len : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      Eigen::VectorXd s = len * unit;
      out << "||s|| = " << len << " -> ||v|| = " << caps::squash(s).norm() << "\n";
    }
    ctx.result["unit_squash_norm"] = caps::squash(unit).norm();
  } else if (demo == "routing") {
    // boat/house geometry: the boat predictions nearly coincide, the house
    // predictions are perpendicular
    Eigen::VectorXd up(2), side(2), tilted_a(2), tilted_b(2);
    up << 0.0, 0.8;
    side << 0.8, 0.0;
    tilted_a << 0.55, 0.6;
    tilted_b << 0.6, 0.55;
    const std::vector<std::vector<Eigen::VectorXd>> u_hat = {{up, tilted_a}, {side, tilted_b}};
    for (int r = 1; r <= iterations; ++r) {
      const caps::RouteResult res = caps::route(u_hat, r);
      out << "after iteration " << r << ":";
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
          out << " c" << i + 1 << j + 1 << "=" << res.state.couplings(i, j);
      out << " ||v1||=" << res.v[0].norm() << " ||v2||=" << res.v[1].norm() << "\n";
      if (r == iterations) {
        ctx.result["c12"] = res.state.couplings(0, 1);
        ctx.result["c11"] = res.state.couplings(0, 0);
        ctx.result["v2_norm"] = res.v[1].norm();
      }
    }
  } else {
    throw CLI::ValidationError("--demo must be routing, squash or params");
  }
  std::cout << out.str();
  fs::create_directories(ctx.out_dir);
  write_text_file(ctx.out_dir / "caps.txt", out.str());
  write_manifest(ctx);
  return kExitOk;
}

int cmd_fixtures(RunContext& ctx, Index classes, Index per_class) {
  FixtureConfig cfg;
  cfg.classes = classes;
  cfg.per_class = per_class;
  cfg.seed = ctx.seed;
  write_glyph_dataset_dir(ctx.out_dir, cfg);
  ctx.result["images"] = classes * per_class;
  write_manifest(ctx);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"net2milp: exact MILP models of ReLU networks, bound tightening and adversarials"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();  // --seed/--out/--threads may follow the subcommand

  RunContext ctx;
  std::string config_path;
  std::string out_dir = "out";
  app.add_option("--seed", ctx.seed, "root random seed")->capture_default_str();
  app.add_option("--threads", ctx.threads,
                 "worker threads (1 is the reference configuration; higher values are accepted "
                 "and currently run the same sequential path)")
      ->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--config", config_path, "JSON file overriding option defaults");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a toy network with batch gradient descent");
  std::string dataset_dir, preset = "dense-16-8", init_name = "he_gaussian";
  std::string mnist_images, mnist_labels;
  long mnist_limit = 200;
  Index epochs = 500;
  double lr = 0.05;
  train_cmd->add_option("--dataset", dataset_dir, "directory of *_label_<L>.txt grids");
  train_cmd->add_option("--mnist-images", mnist_images, "MNIST IDX image file (instead of --dataset)");
  train_cmd->add_option("--mnist-labels", mnist_labels, "MNIST IDX label file");
  train_cmd->add_option("--mnist-limit", mnist_limit, "instances to take from the IDX files")
      ->capture_default_str();
  train_cmd->add_option("--arch", preset, "dense-<n>-<n>... or cnn-8x8")->capture_default_str();
  train_cmd->add_option("--epochs", epochs)->capture_default_str();
  train_cmd->add_option("--lr", lr, "learning rate")->capture_default_str();
  train_cmd->add_option("--init", init_name, "he_gaussian or uniform_kernel")
      ->capture_default_str();

  // encode / export-lp
  std::string weights, arch = "dnn", bounds_mode = "interval", input_spec = "box";
  bool include_biases = false;
  double gamma = 1.0, budget = 10.0;
  bool bigm = false;
  auto* encode_cmd = app.add_subcommand("encode", "compile a network into the 0-1 MILP");
  auto* export_cmd = app.add_subcommand("export-lp", "compile and emit only the LP file");
  for (auto* cmd : {encode_cmd, export_cmd}) {
    cmd->add_option("--weights", weights)->required();
    cmd->add_option("--arch", arch, "dnn or cnn")->capture_default_str();
    cmd->add_option("--bounds", bounds_mode, "interval, lp or milp")->capture_default_str();
    cmd->add_option("--input", input_spec, "box or fixed:PATH")->capture_default_str();
    cmd->add_flag("--include-biases", include_biases, "keep bias terms in the CNN model");
    cmd->add_option("--gamma", gamma, "activation penalty")->capture_default_str();
    cmd->add_option("--tighten-budget", budget, "per-unit seconds for milp bounds")
        ->capture_default_str();
    cmd->add_flag("--big-m", bigm, "lower indicator constraints to big-M rows");
  }

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "compute and serialize per-unit bounds");
  std::string bounds_only_mode = "interval";
  std::string bounds_weights;
  bounds_cmd->add_option("--weights", bounds_weights)->required();
  bounds_cmd->add_option("--mode", bounds_only_mode, "interval, lp or milp")
      ->capture_default_str();
  bounds_cmd->add_option("--tighten-budget", budget)->capture_default_str();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "branch and bound on an LP-format model");
  std::string model_path;
  long node_limit = 0;
  double time_limit = 0.0;
  solve_cmd->add_option("--model", model_path)->required();
  solve_cmd->add_option("--node-limit", node_limit)->capture_default_str();
  solve_cmd->add_option("--time-limit", time_limit, "seconds")->capture_default_str();

  // adversarial
  auto* adv_cmd = app.add_subcommand("adversarial", "build, solve and verify an adversarial");
  std::string image_path, target_rule = "plus5";
  Index label = -1;
  double eps_cap = 0.2, margin = 1.2;
  adv_cmd->add_option("--weights", weights)->required();
  adv_cmd->add_option("--image", image_path)->required();
  adv_cmd->add_option("--label", label, "label the oracle must assign")->required();
  adv_cmd->add_option("--target-rule", target_rule, "plus5 or explicit:<label>")
      ->capture_default_str();
  adv_cmd->add_option("--eps-cap", eps_cap)->capture_default_str();
  adv_cmd->add_option("--margin", margin)->capture_default_str();
  adv_cmd->add_option("--bounds", bounds_mode)->capture_default_str();
  double adv_gamma = 0.0;  // distance dominates unless asked otherwise
  adv_cmd->add_option("--gamma", adv_gamma, "activation penalty in the adversarial objective")
      ->capture_default_str();
  adv_cmd->add_option("--node-limit", node_limit)->capture_default_str();
  adv_cmd->add_option("--time-limit", time_limit)->capture_default_str();
  adv_cmd->add_option("--tighten-budget", budget)->capture_default_str();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "re-check an adversarial against the oracle");
  std::string original_path, adversarial_path;
  verify_cmd->add_option("--weights", weights)->required();
  verify_cmd->add_option("--original", original_path)->required();
  verify_cmd->add_option("--adversarial", adversarial_path)->required();
  verify_cmd->add_option("--label", label)->required();
  verify_cmd->add_option("--target-rule", target_rule)->capture_default_str();
  verify_cmd->add_option("--eps-cap", eps_cap)->capture_default_str();
  verify_cmd->add_option("--margin", margin)->capture_default_str();

  // caps
  auto* caps_cmd = app.add_subcommand("caps", "capsule reference demos");
  std::string demo = "params";
  int iterations = 3;
  caps_cmd->add_option("--demo", demo, "routing, squash or params")->capture_default_str();
  caps_cmd->add_option("--iterations", iterations)->capture_default_str();

  // fixtures
  auto* fixtures_cmd = app.add_subcommand("fixtures", "generate the glyph dataset");
  Index classes = 2, per_class = 20;
  fixtures_cmd->add_option("--classes", classes)->capture_default_str();
  fixtures_cmd->add_option("--per-class", per_class)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const json overlay_cfg = load_config_overlay(config_path);
    overlay(overlay_cfg, "epochs", epochs);
    overlay(overlay_cfg, "lr", lr);
    overlay(overlay_cfg, "gamma", gamma);
    overlay(overlay_cfg, "eps_cap", eps_cap);
    overlay(overlay_cfg, "margin", margin);
    overlay(overlay_cfg, "node_limit", node_limit);
    overlay(overlay_cfg, "time_limit", time_limit);
    overlay(overlay_cfg, "bounds", bounds_mode);

    ctx.out_dir = out_dir;
    ctx.config = overlay_cfg;

    if (train_cmd->parsed()) {
      ctx.command = "train";
      if (dataset_dir.empty() && mnist_images.empty())
        throw CLI::ValidationError("train needs --dataset or --mnist-images/--mnist-labels");
      ctx.inputs = mnist_images.empty() ? std::vector<std::string>{dataset_dir}
                                        : std::vector<std::string>{mnist_images, mnist_labels};
      ctx.config["arch"] = preset;
      ctx.config["epochs"] = epochs;
      ctx.config["lr"] = lr;
      ctx.config["init"] = init_name;
      return cmd_train(ctx, dataset_dir, mnist_images, mnist_labels, mnist_limit, preset,
                       init_name, epochs, lr);
    }
    if (encode_cmd->parsed() || export_cmd->parsed()) {
      ctx.command = encode_cmd->parsed() ? "encode" : "export-lp";
      ctx.inputs = {weights};
      ctx.config["arch"] = arch;
      ctx.config["bounds"] = bounds_mode;
      ctx.config["input"] = input_spec;
      ctx.config["gamma"] = gamma;
      ctx.config["include_biases"] = include_biases;
      ctx.config["big_m"] = bigm;
      return cmd_encode(ctx, weights, arch, bounds_mode, input_spec, include_biases, gamma,
                        budget, bigm);
    }
    if (bounds_cmd->parsed()) {
      ctx.command = "bounds";
      ctx.inputs = {bounds_weights};
      ctx.config["mode"] = bounds_only_mode;
      return cmd_bounds(ctx, bounds_weights, bounds_only_mode, budget);
    }
    if (solve_cmd->parsed()) {
      ctx.command = "solve";
      ctx.inputs = {model_path};
      ctx.config["node_limit"] = node_limit;
      ctx.config["time_limit"] = time_limit;
      return cmd_solve(ctx, model_path, node_limit, time_limit);
    }
    if (adv_cmd->parsed()) {
      ctx.command = "adversarial";
      ctx.inputs = {weights, image_path};
      ctx.config["target_rule"] = target_rule;
      ctx.config["eps_cap"] = eps_cap;
      ctx.config["margin"] = margin;
      ctx.config["bounds"] = bounds_mode;
      ctx.config["gamma"] = adv_gamma;
      return cmd_adversarial(ctx, weights, image_path, label, target_rule, eps_cap, margin,
                             bounds_mode, adv_gamma, node_limit, time_limit, budget);
    }
    if (verify_cmd->parsed()) {
      ctx.command = "verify";
      ctx.inputs = {weights, original_path, adversarial_path};
      ctx.config["target_rule"] = target_rule;
      ctx.config["eps_cap"] = eps_cap;
      ctx.config["margin"] = margin;
      return cmd_verify(ctx, weights, original_path, adversarial_path, label, target_rule,
                        eps_cap, margin);
    }
    if (caps_cmd->parsed()) {
      ctx.command = "caps";
      ctx.config["demo"] = demo;
      ctx.config["iterations"] = iterations;
      return cmd_caps(ctx, demo, iterations);
    }
    if (fixtures_cmd->parsed()) {
      ctx.command = "fixtures";
      ctx.config["classes"] = classes;
      ctx.config["per_class"] = per_class;
      return cmd_fixtures(ctx, classes, per_class);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace net2milp
