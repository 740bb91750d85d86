#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "net2milp/tensor.hpp"

namespace net2milp {

/// Bidirectional mapping between network units and MILP variable ids.
/// Keys are the canonical variable names embedded in the LP file, so
/// external-solver output maps straight back to units.
class VarMap {
 public:
  void add(const std::string& name, int id);
  int id(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }
  const std::string& name(int id) const;
  std::size_t size() const { return by_name_.size(); }

  std::string to_json() const;
  static VarMap from_json(const std::string& text);

 private:
  std::unordered_map<std::string, int> by_name_;
  std::vector<std::string> by_id_;
};

// DNN names: layer k (0 = input), unit j, both 1-based in the name to
// match the unit numbering convention of the model they encode.
std::string dnn_x(Index k, Index j);
std::string dnn_s(Index k, Index j);
std::string dnn_z(Index k, Index j);

// CNN names: block c, map index, cell row/col, all 1-based.
std::string cnn_a(Index c, Index beta, Index i, Index j);
std::string cnn_b(Index c, Index delta, Index i, Index j);
std::string cnn_bhat(Index c, Index delta, Index i, Index j);
std::string cnn_s(Index c, Index delta, Index i, Index j);
std::string cnn_z(Index c, Index delta, Index i, Index j);
std::string cnn_zeta(Index c, Index delta, Index oi, Index oj, Index wi, Index wj);
std::string cnn_pi(Index k);
std::string cnn_phi(Index i);
std::string cnn_s_phi(Index i);
std::string cnn_z_phi(Index i);
std::string cnn_psi(Index i);
std::string cnn_s_psi(Index i);
std::string cnn_z_psi(Index i);

std::string eps_dnn(Index j);
std::string eps_cnn(Index beta, Index i, Index j);

}  // namespace net2milp
