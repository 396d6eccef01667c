#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "qgl/unitary.hpp"

namespace qgl {

struct GateLibrary {
  std::vector<std::string> order;
  std::unordered_map<std::string, UnitaryExprMatrix> gates;

  bool has(const std::string& name) const { return gates.count(name) != 0; }
  const UnitaryExprMatrix& get(const std::string& name) const;
  void add(const std::string& name, UnitaryExprMatrix m);
  void merge(const GateLibrary& other);  // other wins on name clashes
};

GateLibrary load_gates_source(const std::string& source);
GateLibrary load_gates_file(const std::string& path);

std::string default_prelude_path();

// The standard gate library, loaded once per process.
const GateLibrary& prelude();

}  // namespace qgl
