#include "net2milp/varmap.hpp"

#include <stdexcept>

#include <json.hpp>

namespace net2milp {

void VarMap::add(const std::string& name, int id) {
  if (!by_name_.emplace(name, id).second)
    throw std::invalid_argument("varmap: duplicate name " + name);
  if (static_cast<std::size_t>(id) >= by_id_.size()) by_id_.resize(static_cast<std::size_t>(id) + 1);
  by_id_[static_cast<std::size_t>(id)] = name;
}

int VarMap::id(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::invalid_argument("varmap: unknown name " + name);
  return it->second;
}

const std::string& VarMap::name(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= by_id_.size() ||
      by_id_[static_cast<std::size_t>(id)].empty())
    throw std::invalid_argument("varmap: unknown id " + std::to_string(id));
  return by_id_[static_cast<std::size_t>(id)];
}

std::string VarMap::to_json() const {
  nlohmann::json doc;
  nlohmann::json vars = nlohmann::json::object();
  for (std::size_t i = 0; i < by_id_.size(); ++i)
    if (!by_id_[i].empty()) vars[by_id_[i]] = i;
  doc["variables"] = std::move(vars);
  return doc.dump(2) + "\n";
}

VarMap VarMap::from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  VarMap vm;
  for (const auto& [name, id] : doc.at("variables").items())
    vm.add(name, id.get<int>());
  return vm;
}

namespace {
std::string join(std::initializer_list<Index> parts, const std::string& prefix) {
  std::string s = prefix;
  for (Index p : parts) s += "_" + std::to_string(p);
  return s;
}
}  // namespace

std::string dnn_x(Index k, Index j) { return join({k, j + 1}, "x"); }
std::string dnn_s(Index k, Index j) { return join({k, j + 1}, "s"); }
std::string dnn_z(Index k, Index j) { return join({k, j + 1}, "z"); }

std::string cnn_a(Index c, Index beta, Index i, Index j) {
  return join({c, beta + 1, i + 1, j + 1}, "A");
}
std::string cnn_b(Index c, Index delta, Index i, Index j) {
  return join({c, delta + 1, i + 1, j + 1}, "B");
}
std::string cnn_bhat(Index c, Index delta, Index i, Index j) {
  return join({c, delta + 1, i + 1, j + 1}, "Bh");
}
std::string cnn_s(Index c, Index delta, Index i, Index j) {
  return join({c, delta + 1, i + 1, j + 1}, "s");
}
std::string cnn_z(Index c, Index delta, Index i, Index j) {
  return join({c, delta + 1, i + 1, j + 1}, "z");
}
std::string cnn_zeta(Index c, Index delta, Index oi, Index oj, Index wi, Index wj) {
  return join({c, delta + 1, oi + 1, oj + 1, wi + 1, wj + 1}, "zeta");
}
std::string cnn_pi(Index k) { return join({k + 1}, "pi"); }
std::string cnn_phi(Index i) { return join({i + 1}, "phi"); }
std::string cnn_s_phi(Index i) { return join({i + 1}, "st"); }
std::string cnn_z_phi(Index i) { return join({i + 1}, "zt"); }
std::string cnn_psi(Index i) { return join({i + 1}, "psi"); }
std::string cnn_s_psi(Index i) { return join({i + 1}, "stt"); }
std::string cnn_z_psi(Index i) { return join({i + 1}, "ztt"); }

std::string eps_dnn(Index j) { return join({j + 1}, "eps"); }
std::string eps_cnn(Index beta, Index i, Index j) {
  return join({beta + 1, i + 1, j + 1}, "eps");
}

}  // namespace net2milp
