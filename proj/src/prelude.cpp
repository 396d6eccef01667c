#include "qgl/prelude.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "qgl/lower.hpp"
#include "qgl/parser.hpp"

namespace qgl {

const UnitaryExprMatrix& GateLibrary::get(const std::string& name) const {
  auto it = gates.find(name);
  if (it == gates.end())
    throw std::runtime_error(fmt::format("unknown gate '{}'", name));
  return it->second;
}

void GateLibrary::add(const std::string& name, UnitaryExprMatrix m) {
  if (!gates.emplace(name, std::move(m)).second)
    throw std::runtime_error(fmt::format("gate '{}' already defined", name));
  order.push_back(name);
}

void GateLibrary::merge(const GateLibrary& other) {
  for (const std::string& name : other.order) {
    auto [it, fresh] = gates.insert_or_assign(name, other.gates.at(name));
    (void)it;
    if (fresh) order.push_back(name);
  }
}

GateLibrary load_gates_source(const std::string& source) {
  ParsedFile file = parse_gates(source);
  GateLibrary lib;
  for (LoweredGate& g : lower_file(file))
    lib.add(g.name, std::move(g.matrix));
  return lib;
}

GateLibrary load_gates_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error(fmt::format("cannot open '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_gates_source(buf.str());
}

std::string default_prelude_path() { return QUDIT_DATA_DIR "/gates.qgl"; }

const GateLibrary& prelude() {
  static const GateLibrary lib = load_gates_file(default_prelude_path());
  return lib;
}

}  // namespace qgl
