#include "net2milp/bounds.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "net2milp/branch_and_bound.hpp"
#include "net2milp/encode_cnn.hpp"
#include "net2milp/encode_dnn.hpp"

namespace net2milp {

double BoundSet::x_ub(std::size_t layer, Index unit) const {
  return layers.at(layer).post_ub[unit];
}

double BoundSet::s_ub(std::size_t layer, Index unit) const {
  const auto& l = layers.at(layer);
  if (!l.has_pre) throw std::invalid_argument("BoundSet::s_ub: layer has no pre-activation");
  return std::max(0.0, -l.pre_lb[unit]);
}

namespace {

// interval of an affine map: lo picks the weight-sign corner
void affine_interval(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& in_lo, const Eigen::VectorXd& in_hi,
                     Eigen::VectorXd& out_lo, Eigen::VectorXd& out_hi) {
  const Eigen::MatrixXd wp = w.cwiseMax(0.0);
  const Eigen::MatrixXd wn = w.cwiseMin(0.0);
  out_lo = wp * in_lo + wn * in_hi + b;
  out_hi = wp * in_hi + wn * in_lo + b;
}

}  // namespace

BoundSet interval_propagate(const NetworkSpec& net, const Eigen::VectorXd& input_lb,
                            const Eigen::VectorXd& input_ub) {
  net.validate();
  const Index n0 = Tensor::count(net.input_shape);
  if (input_lb.size() != n0 || input_ub.size() != n0)
    throw std::invalid_argument("interval_propagate: box does not match the input shape");
  for (Index i = 0; i < n0; ++i)
    if (!std::isfinite(input_lb(i)) || !std::isfinite(input_ub(i)) || input_lb(i) > input_ub(i))
      throw std::invalid_argument("interval_propagate: input box must be finite with lb <= ub");

  BoundSet bs;
  bs.input_lb = input_lb;
  bs.input_ub = input_ub;

  Tensor lo(net.input_shape, input_lb);
  Tensor hi(net.input_shape, input_ub);

  for (const auto& layer : net.layers) {
    LayerBounds lb;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      Eigen::VectorXd pre_lo, pre_hi;
      affine_interval(d->weights, d->bias, lo.data(), hi.data(), pre_lo, pre_hi);
      lb.has_pre = true;
      lb.pre_lb = Tensor({pre_lo.size()}, pre_lo);
      lb.pre_ub = Tensor({pre_hi.size()}, pre_hi);
      if (d->activation == Activation::kRelu) {
        lb.post_lb = relu(lb.pre_lb);
        lb.post_ub = relu(lb.pre_ub);
      } else {
        lb.post_lb = lb.pre_lb;
        lb.post_ub = lb.pre_ub;
      }
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      const Tensor slo = as_map_stack(lo), shi = as_map_stack(hi);
      const Index alpha = slo.extent(0);
      const Index m = static_cast<Index>(c->kernels.size());
      const Index oh = c->params.out_extent(slo.extent(1));
      const Index ow = c->params.out_extent(slo.extent(2));
      lb.has_pre = true;
      lb.pre_lb = Tensor({m * alpha, oh, ow});
      lb.pre_ub = Tensor({m * alpha, oh, ow});
      for (Index gamma = 0; gamma < m; ++gamma) {
        const Tensor& k = c->kernels[static_cast<std::size_t>(gamma)];
        Tensor kp = k, kn = k;
        kp.data() = k.data().cwiseMax(0.0);
        kn.data() = k.data().cwiseMin(0.0);
        for (Index beta = 0; beta < alpha; ++beta) {
          Tensor mlo({slo.extent(1), slo.extent(2)}), mhi({slo.extent(1), slo.extent(2)});
          mlo.map2d() = slo.map2d(beta);
          mhi.map2d() = shi.map2d(beta);
          const Tensor lo_part = conv2d(mlo, kp, c->params);
          const Tensor lo_neg = conv2d(mhi, kn, c->params);
          const Tensor hi_part = conv2d(mhi, kp, c->params);
          const Tensor hi_neg = conv2d(mlo, kn, c->params);
          const Index delta = beta + gamma * alpha;
          const double bias = c->bias[static_cast<std::size_t>(gamma)];
          lb.pre_lb.map2d(delta) = lo_part.map2d() + lo_neg.map2d();
          lb.pre_lb.map2d(delta).array() += bias;
          lb.pre_ub.map2d(delta) = hi_part.map2d() + hi_neg.map2d();
          lb.pre_ub.map2d(delta).array() += bias;
        }
      }
      lb.post_lb = relu(lb.pre_lb);
      lb.post_ub = relu(lb.pre_ub);
    } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
      const Tensor slo = as_map_stack(lo), shi = as_map_stack(hi);
      const Index alpha = slo.extent(0);
      const Index oh = (slo.extent(1) - p->pool_size) / p->stride + 1;
      const Index ow = (slo.extent(2) - p->pool_size) / p->stride + 1;
      lb.post_lb = Tensor({alpha, oh, ow});
      lb.post_ub = Tensor({alpha, oh, ow});
      for (Index b = 0; b < alpha; ++b) {
        Tensor mlo({slo.extent(1), slo.extent(2)}), mhi({slo.extent(1), slo.extent(2)});
        mlo.map2d() = slo.map2d(b);
        mhi.map2d() = shi.map2d(b);
        lb.post_lb.map2d(b) = maxpool2d(mlo, p->pool_size, p->stride).map2d();
        lb.post_ub.map2d(b) = maxpool2d(mhi, p->pool_size, p->stride).map2d();
      }
    } else {
      lb.post_lb = lo.reshaped({lo.size()});
      lb.post_ub = hi.reshaped({hi.size()});
    }
    lo = lb.post_lb;
    hi = lb.post_ub;
    bs.layers.push_back(std::move(lb));
  }
  return bs;
}

namespace {

// safety margin added to solver optima so numerical slack in the LP never
// cuts off a true forward value
constexpr double kTightenGuard = 1e-7;

struct SubModel {
  MilpModel model;
  std::vector<int> new_id;  // old id → new id, -1 when dropped
};

SubModel truncate_for_unit(const EncodedModel& em, int layer, int unit) {
  auto keep = [&](const StageTag& t) {
    return t.layer < layer || (t.layer == layer && t.unit == unit);
  };
  SubModel sub;
  sub.new_id.assign(em.model.variables().size(), -1);
  for (const auto& v : em.model.variables()) {
    const StageTag& t = em.tags.var_stage[static_cast<std::size_t>(v.id)];
    if (!keep(t)) continue;
    sub.new_id[static_cast<std::size_t>(v.id)] =
        sub.model.add_variable(v.name, v.kind, v.lb, v.ub, 0.0);
  }
  auto remap = [&](const LinearConstraint& c) {
    LinearConstraint out = c;
    for (auto& [id, coef] : out.terms) id = sub.new_id[static_cast<std::size_t>(id)];
    return out;
  };
  for (std::size_t i = 0; i < em.model.linear_constraints().size(); ++i) {
    if (!keep(em.tags.linear_stage[i])) continue;
    sub.model.add_linear(remap(em.model.linear_constraints()[i]));
  }
  for (std::size_t i = 0; i < em.model.indicator_constraints().size(); ++i) {
    if (!keep(em.tags.indicator_stage[i])) continue;
    const auto& ind = em.model.indicator_constraints()[i];
    IndicatorConstraint out;
    out.guard = sub.new_id[static_cast<std::size_t>(ind.guard)];
    out.active_when = ind.active_when;
    out.implied = remap(ind.implied);
    sub.model.add_indicator(std::move(out));
  }
  return sub;
}

enum class Dir { kMax, kMin };

// optimum of one variable over the truncated model; nullopt on failure
std::optional<double> optimize_unit(const EncodedModel& em, int layer, int unit, int var_id,
                                    Dir dir, TightenMode mode, double budget_s,
                                    std::string* why_failed) {
  SubModel sub = truncate_for_unit(em, layer, unit);
  const int target = sub.new_id[static_cast<std::size_t>(var_id)];
  if (target < 0) {
    *why_failed = "target variable dropped by truncation";
    return std::nullopt;
  }
  sub.model.variable(target).cost = dir == Dir::kMax ? -1.0 : 1.0;

  if (mode == TightenMode::kLpRelaxation) {
    const LpResult r = simplex_solve(lp_relaxation_of(sub.model));
    if (r.status != LpStatus::kOptimal) {
      *why_failed = "LP relaxation not optimal";
      return std::nullopt;
    }
    return dir == Dir::kMax ? -r.objective : r.objective;
  }
  BnbConfig cfg;
  cfg.time_budget_s = budget_s;
  const SolveResult r = branch_and_bound(sub.model, cfg);
  if (r.status != SolveStatus::kOptimal) {
    *why_failed = std::string("subproblem ") + to_string(r.status);
    return std::nullopt;
  }
  return dir == Dir::kMax ? -r.objective : r.objective;
}

}  // namespace

BoundSet lp_tighten(const NetworkSpec& net, const Eigen::VectorXd& input_lb,
                    const Eigen::VectorXd& input_ub, TightenMode mode,
                    double per_unit_time_budget_s) {
  BoundSet bs = interval_propagate(net, input_lb, input_ub);

  const bool dense = net.dense_only();
  EncodedModel em;
  if (dense) {
    DnnEncodeConfig cfg;
    cfg.unit_cost = 0.0;
    cfg.activation_penalty = 0.0;
    cfg.input = InputMode::boxed(input_lb, input_ub);
    em = encode_dnn(net, bs, cfg);
  } else {
    CnnEncodeConfig cfg;
    cfg.cost_maps = cfg.cost_conv = cfg.cost_relu = cfg.cost_relu_z = 0.0;
    cfg.cost_zeta = cfg.cost_fc = cfg.cost_fc_z = cfg.cost_output = 0.0;
    cfg.include_biases = true;  // tighten the network that forward evaluates
    cfg.input = InputMode::boxed(input_lb, input_ub);
    em = encode_cnn(net, bs, cfg);
  }

  auto tighten_ub = [&](int var_id, double& stored_ub, int layer, int unit,
                        const std::string& what) {
    std::string why;
    const auto opt = optimize_unit(em, layer, unit, var_id, Dir::kMax, mode,
                                   per_unit_time_budget_s, &why);
    if (!opt) {
      bs.warnings.push_back(what + ": " + why + "; interval bound kept");
      return;
    }
    const double v = *opt + kTightenGuard;
    if (v < stored_ub) {
      stored_ub = v;
      em.model.variable(var_id).ub = v;
    }
  };

  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    LayerBounds& lb = bs.layers[k];
    const Index layer_no = static_cast<Index>(k) + 1;
    const int L = static_cast<int>(k);

    if (const auto* d = std::get_if<DenseLayer>(&net.layers[k])) {
      const bool is_cnn_tail = !dense;
      const bool is_output = k + 1 == net.layers.size();
      for (Index j = 0; j < d->weights.rows(); ++j) {
        std::string xn, sn;
        if (dense) {
          xn = dnn_x(layer_no, j);
          sn = d->activation == Activation::kRelu ? dnn_s(layer_no, j) : "";
        } else {
          xn = is_output ? cnn_psi(j) : cnn_phi(j);
          sn = is_output ? cnn_s_psi(j) : cnn_s_phi(j);
        }
        const int x_id = em.varmap.id(xn);
        if (d->activation == Activation::kRelu || is_cnn_tail) {
          double xu = bs.x_ub(k, j);
          tighten_ub(x_id, xu, L, static_cast<int>(j), xn);
          lb.post_ub[j] = xu;
          lb.pre_ub[j] = std::min(lb.pre_ub[j], xu);

          const int s_id = em.varmap.id(sn);
          double su = std::max(0.0, -lb.pre_lb[j]);
          tighten_ub(s_id, su, L, static_cast<int>(j), sn);
          lb.pre_lb[j] = std::max(lb.pre_lb[j], -su);
        } else {
          // linear head: tighten both ends of the interval directly
          double xu = lb.post_ub[j];
          tighten_ub(x_id, xu, L, static_cast<int>(j), xn);
          lb.post_ub[j] = xu;
          lb.pre_ub[j] = std::min(lb.pre_ub[j], xu);
          std::string why;
          const auto lo = optimize_unit(em, L, static_cast<int>(j), x_id, Dir::kMin, mode,
                                        per_unit_time_budget_s, &why);
          if (lo) {
            const double v = *lo - kTightenGuard;
            if (v > lb.post_lb[j]) {
              lb.post_lb[j] = v;
              lb.pre_lb[j] = std::max(lb.pre_lb[j], v);
              em.model.variable(x_id).lb = v;
            }
          } else {
            bs.warnings.push_back(xn + ": " + why + "; interval bound kept");
          }
        }
      }
    } else if (std::holds_alternative<ConvLayer>(net.layers[k])) {
      const Index block = static_cast<Index>(k / 2) + 1;
      const Tensor& shape_ref = lb.pre_ub;
      for (Index delta = 0; delta < shape_ref.extent(0); ++delta)
        for (Index r = 0; r < shape_ref.extent(1); ++r)
          for (Index col = 0; col < shape_ref.extent(2); ++col) {
            const Index flat = (delta * shape_ref.extent(1) + r) * shape_ref.extent(2) + col;
            const int u = static_cast<int>(flat);
            const int bh_id = em.varmap.id(cnn_bhat(block, delta, r, col));
            double xu = lb.post_ub[flat];
            tighten_ub(bh_id, xu, L, u, cnn_bhat(block, delta, r, col));
            lb.post_ub[flat] = xu;
            lb.pre_ub[flat] = std::min(lb.pre_ub[flat], xu);

            const int s_id = em.varmap.id(cnn_s(block, delta, r, col));
            double su = std::max(0.0, -lb.pre_lb[flat]);
            tighten_ub(s_id, su, L, u, cnn_s(block, delta, r, col));
            lb.pre_lb[flat] = std::max(lb.pre_lb[flat], -su);

            Variable& b_var = em.model.variable(em.varmap.id(cnn_b(block, delta, r, col)));
            b_var.lb = std::max(b_var.lb, lb.pre_lb[flat]);
            b_var.ub = std::min(b_var.ub, lb.pre_ub[flat]);
          }
    } else if (std::holds_alternative<MaxPoolLayer>(net.layers[k])) {
      const Index block = static_cast<Index>(k / 2) + 1;
      for (Index delta = 0; delta < lb.post_ub.extent(0); ++delta)
        for (Index r = 0; r < lb.post_ub.extent(1); ++r)
          for (Index col = 0; col < lb.post_ub.extent(2); ++col) {
            const Index flat =
                (delta * lb.post_ub.extent(1) + r) * lb.post_ub.extent(2) + col;
            const int a_id = em.varmap.id(cnn_a(block + 1, delta, r, col));
            double au = lb.post_ub[flat];
            tighten_ub(a_id, au, L, static_cast<int>(flat), cnn_a(block + 1, delta, r, col));
            lb.post_ub[flat] = au;
          }
    } else {
      // flatten: bounds mirror the source cells, no subproblem needed
      for (Index f = 0; f < lb.post_ub.size(); ++f) {
        const int pi_id = em.varmap.id(cnn_pi(f));
        const auto& prev = bs.layers[k - 1];
        lb.post_ub[f] = prev.post_ub[f];
        lb.post_lb[f] = prev.post_lb[f];
        em.model.variable(pi_id).ub = lb.post_ub[f];
        em.model.variable(pi_id).lb = lb.post_lb[f];
      }
    }
  }
  return bs;
}

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
  nlohmann::json j;
  j["shape"] = t.shape();
  j["data"] = std::vector<double>(t.data().data(), t.data().data() + t.size());
  return j;
}

Tensor tensor_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Index>(data.size()));
  return Tensor(shape, v);
}

}  // namespace

std::string save_bounds(const BoundSet& bounds) {
  nlohmann::json doc;
  doc["input_lb"] =
      std::vector<double>(bounds.input_lb.data(), bounds.input_lb.data() + bounds.input_lb.size());
  doc["input_ub"] =
      std::vector<double>(bounds.input_ub.data(), bounds.input_ub.data() + bounds.input_ub.size());
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : bounds.layers) {
    nlohmann::json jl;
    jl["has_pre"] = l.has_pre;
    if (l.has_pre) {
      jl["pre_lb"] = tensor_to_json(l.pre_lb);
      jl["pre_ub"] = tensor_to_json(l.pre_ub);
    }
    jl["post_lb"] = tensor_to_json(l.post_lb);
    jl["post_ub"] = tensor_to_json(l.post_ub);
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  if (!bounds.warnings.empty()) doc["warnings"] = bounds.warnings;
  return doc.dump(2) + "\n";
}

BoundSet load_bounds(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  BoundSet bs;
  const auto lbv = doc.at("input_lb").get<std::vector<double>>();
  const auto ubv = doc.at("input_ub").get<std::vector<double>>();
  bs.input_lb = Eigen::Map<const Eigen::VectorXd>(lbv.data(), static_cast<Index>(lbv.size()));
  bs.input_ub = Eigen::Map<const Eigen::VectorXd>(ubv.data(), static_cast<Index>(ubv.size()));
  for (const auto& jl : doc.at("layers")) {
    LayerBounds l;
    l.has_pre = jl.at("has_pre").get<bool>();
    if (l.has_pre) {
      l.pre_lb = tensor_from_json(jl.at("pre_lb"));
      l.pre_ub = tensor_from_json(jl.at("pre_ub"));
    }
    l.post_lb = tensor_from_json(jl.at("post_lb"));
    l.post_ub = tensor_from_json(jl.at("post_ub"));
    bs.layers.push_back(std::move(l));
  }
  if (doc.contains("warnings")) bs.warnings = doc["warnings"].get<std::vector<std::string>>();
  return bs;
}

}  // namespace net2milp
