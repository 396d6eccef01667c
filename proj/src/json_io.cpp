#include "qcir/json_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "qgl/expr.hpp"
#include "qgl/lower.hpp"
#include "qgl/parser.hpp"

namespace qcir {

using json = nlohmann::json;
using qgl::ex_is_zero;
using qgl::expr_str;
using qgl::sym_name;
using qgl::UnitaryExprMatrix;

namespace {

bool valid_ident(const std::string& s) {
  static const std::set<std::string> reserved = {"i",   "e",   "π",    "utry", "cos",
                                                 "sin", "tan", "sec",  "csc",  "cot",
                                                 "ln",  "exp", "pow",  "sqrt"};
  if (s.empty() || reserved.count(s)) return false;
  bool first = true;
  for (size_t k = 0; k < s.size();) {
    uint32_t cp = static_cast<unsigned char>(s[k]);
    size_t len = 1;
    if (cp >= 0xF0) len = 4;
    else if (cp >= 0xE0) len = 3;
    else if (cp >= 0xC0) len = 2;
    if (k + len > s.size()) return false;
    if (len > 1) {
      cp &= (0x3F >> (len - 1));
      for (size_t j = 1; j < len; ++j) cp = (cp << 6) | (static_cast<unsigned char>(s[k + j]) & 0x3F);
    }
    bool letter = (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || cp == '_' ||
                  (cp >= 0x370 && cp <= 0x3FF) || (cp >= 0x1F00 && cp <= 0x1FFF);
    bool digit = cp >= '0' && cp <= '9';
    if (first ? !letter : !(letter || digit)) return false;
    first = false;
    k += len;
  }
  return true;
}

}  // namespace

std::string element_qgl_source(const qgl::CExpr& e) {
  if (ex_is_zero(e.im)) return expr_str(e.re);
  if (ex_is_zero(e.re)) return fmt::format("i * ({})", expr_str(e.im));
  return fmt::format("({}) + i * ({})", expr_str(e.re), expr_str(e.im));
}

std::string gate_qgl_source(const std::string& name, const UnitaryExprMatrix& u) {
  UnitaryExprMatrix g = u;
  {
    std::set<std::string> seen;
    bool ok = true;
    for (qgl::SymId p : g.params) {
      std::string n(sym_name(p));
      ok = ok && valid_ident(n) && seen.insert(n).second;
    }
    if (!ok) g = rename_params_positional(g, "p");
  }
  std::string s = "utry " + name;
  bool all2 = true;
  for (uint32_t r : g.radices) all2 = all2 && r == 2;
  if (!all2) {
    s += "<";
    for (size_t i = 0; i < g.radices.size(); ++i)
      s += fmt::format("{}{}", i ? ", " : "", g.radices[i]);
    s += ">";
  }
  s += "(";
  for (size_t i = 0; i < g.params.size(); ++i)
    s += fmt::format("{}{}", i ? ", " : "", sym_name(g.params[i]));
  s += ") { [";
  for (uint32_t r = 0; r < g.dim; ++r) {
    s += r ? ", [" : "[";
    for (uint32_t c = 0; c < g.dim; ++c)
      s += fmt::format("{}{}", c ? ", " : "", element_qgl_source(g.at(r, c)));
    s += "]";
  }
  s += "] }";
  return s;
}

namespace {

void escape_to(const std::string& s, std::string& out) {
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20)
          out += fmt::format("\\u{:04x}", ch);
        else
          out += ch;
    }
  }
}

void write_int_list(const std::vector<uint32_t>& v, std::string& out) {
  out += "[";
  for (size_t i = 0; i < v.size(); ++i) out += fmt::format("{}{}", i ? ", " : "", v[i]);
  out += "]";
}

void write_params(const std::vector<ParamBinding>& ps, std::string& out) {
  out += "[";
  for (size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ", ";
    if (ps[i].is_const)
      out += fmt::format("{{\"const\": {}}}", ps[i].value);
    else
      out += fmt::format("{{\"var\": {}}}", ps[i].index);
  }
  out += "]";
}

struct Writer {
  std::vector<std::pair<std::string, std::string>> defs;  // name, source
  std::unordered_map<std::string, std::string> by_key;    // canonical key -> name

  std::string gate_name(const UnitaryExprMatrix& u) {
    std::string key = canonical_key(u);
    auto it = by_key.find(key);
    if (it != by_key.end()) return it->second;
    std::string name = fmt::format("g{}", defs.size());
    defs.emplace_back(name, gate_qgl_source(name, u));
    by_key.emplace(std::move(key), name);
    return name;
  }

  void write_instr(const Circuit& c, const Instruction& in, std::string& out, int indent) {
    std::string pad(indent, ' ');
    switch (in.kind) {
      case InstrKind::Gate: {
        out += pad + "{\"utry\": \"" + gate_name(c.gate_set()[in.gate]) + "\", \"loc\": ";
        write_int_list(in.qudits, out);
        out += ", \"params\": ";
        write_params(in.params, out);
        out += "}";
        break;
      }
      case InstrKind::Subcircuit: {
        out += pad + "{\"kind\": \"subcircuit\", \"loc\": ";
        write_int_list(in.qudits, out);
        out += ", \"params\": ";
        write_params(in.params, out);
        out += ", \"circuit\": ";
        write_circuit(*in.sub, out, indent);
        out += "}";
        break;
      }
      case InstrKind::Measure:
        out += pad + "{\"kind\": \"measure\", \"loc\": ";
        write_int_list(in.qudits, out);
        out += ", \"clbits\": ";
        write_int_list(in.clbits, out);
        out += "}";
        break;
      case InstrKind::Reset:
        out += pad + "{\"kind\": \"reset\", \"loc\": ";
        write_int_list(in.qudits, out);
        out += "}";
        break;
      case InstrKind::ClassicallyControlled:
        out += pad + "{\"kind\": \"controlled\", \"clbits\": ";
        write_int_list(in.clbits, out);
        out += ", \"inner\": ";
        write_instr(c, *in.inner, out, 0);
        out += "}";
        break;
    }
  }

  void write_circuit(const Circuit& c, std::string& out, int indent) {
    std::string pad(indent, ' ');
    out += "{\n" + pad + " \"radices\": ";
    write_int_list(c.radices(), out);
    out += fmt::format(",\n{} \"clbits\": {},\n{} \"gates\": [", pad, c.n_clbits(), pad);
    std::vector<uint32_t> order = c.iter_dag();
    for (size_t i = 0; i < order.size(); ++i) {
      out += i ? ",\n" : "\n";
      write_instr(c, c.instruction(order[i]), out, indent + 2);
    }
    out += "\n" + pad + " ]";
    out += "\n" + pad + "}";
  }
};

ParamBinding read_binding(const json& j) {
  if (j.contains("var")) return ParamBinding::param(j.at("var").get<uint32_t>());
  if (j.contains("const")) return ParamBinding::constant(j.at("const").get<double>());
  throw std::invalid_argument("circuit json: binding needs \"var\" or \"const\"");
}

struct Reader {
  const qgl::GateLibrary* extra = nullptr;
  std::unordered_map<std::string, UnitaryExprMatrix> defs;

  UnitaryExprMatrix resolve(const std::string& ref) {
    auto it = defs.find(ref);
    if (it != defs.end()) return it->second;
    if (extra && extra->has(ref)) return extra->get(ref);
    if (qgl::prelude().has(ref)) return qgl::prelude().get(ref);
    if (ref.find("utry") != std::string::npos) {
      std::vector<qgl::LoweredGate> gs = qgl::lower_file(qgl::parse_gates(ref));
      if (gs.empty()) throw std::invalid_argument("circuit json: empty inline definition");
      return gs.back().matrix;
    }
    throw std::invalid_argument("circuit json: unknown gate \"" + ref + "\"");
  }

  Instruction read_instr(const json& j, Circuit& c) {
    Instruction in;
    std::string kind = j.value("kind", "gate");
    std::vector<uint32_t> loc;
    if (j.contains("loc")) loc = j.at("loc").get<std::vector<uint32_t>>();
    std::vector<ParamBinding> params;
    if (j.contains("params"))
      for (const json& p : j.at("params")) params.push_back(read_binding(p));

    if (kind == "gate") {
      in.kind = InstrKind::Gate;
      in.gate = c.gate_set().intern(resolve(j.at("utry").get<std::string>()));
      in.qudits = std::move(loc);
      in.params = std::move(params);
    } else if (kind == "subcircuit") {
      in.kind = InstrKind::Subcircuit;
      in.sub = std::make_shared<Circuit>(read_circuit(j.at("circuit")));
      in.qudits = std::move(loc);
      in.params = std::move(params);
    } else if (kind == "measure") {
      in.kind = InstrKind::Measure;
      in.qudits = std::move(loc);
      in.clbits = j.at("clbits").get<std::vector<uint32_t>>();
    } else if (kind == "reset") {
      in.kind = InstrKind::Reset;
      in.qudits = std::move(loc);
    } else if (kind == "controlled") {
      in.kind = InstrKind::ClassicallyControlled;
      in.clbits = j.at("clbits").get<std::vector<uint32_t>>();
      in.inner = std::make_shared<Instruction>(read_instr(j.at("inner"), c));
    } else {
      throw std::invalid_argument("circuit json: unknown instruction kind \"" + kind + "\"");
    }
    return in;
  }

  Circuit read_circuit(const json& j) {
    Circuit c(j.at("radices").get<std::vector<uint32_t>>(), j.value("clbits", 0u));
    for (const json& g : j.at("gates")) {
      Instruction in = read_instr(g, c);
      switch (in.kind) {
        case InstrKind::Gate:
          c.append_gate(in.gate, std::move(in.qudits), std::move(in.params));
          break;
        case InstrKind::Subcircuit:
          c.append_subcircuit(std::move(in.sub), std::move(in.qudits), std::move(in.params));
          break;
        case InstrKind::Measure: c.append_measure(in.qudits[0], in.clbits[0]); break;
        case InstrKind::Reset: c.append_reset(in.qudits[0]); break;
        case InstrKind::ClassicallyControlled: {
          std::vector<uint32_t> bits = std::move(in.clbits);
          c.append_classically_controlled(std::move(*in.inner), std::move(bits));
          break;
        }
      }
    }
    return c;
  }
};

}  // namespace

std::string circuit_to_json(const Circuit& c) {
  Writer w;
  std::string body;
  w.write_circuit(c, body, 0);

  // "defs" is assembled afterwards so it lists gates in first-use order, but
  // it belongs inside the top-level object.
  std::string out = body.substr(0, body.size() - 2);
  out += ",\n \"defs\": {";
  for (size_t i = 0; i < w.defs.size(); ++i) {
    out += i ? ",\n  \"" : "\n  \"";
    out += w.defs[i].first + "\": \"";
    escape_to(w.defs[i].second, out);
    out += "\"";
  }
  out += w.defs.empty() ? "}" : "\n }";
  out += "\n}\n";
  return out;
}

Circuit circuit_from_json(const std::string& text, const qgl::GateLibrary* extra) {
  json j = json::parse(text);
  Reader r;
  r.extra = extra;
  if (j.contains("defs")) {
    for (auto& [name, src] : j.at("defs").items()) {
      std::vector<qgl::LoweredGate> gs = qgl::lower_file(qgl::parse_gates(src.get<std::string>()));
      if (gs.empty()) throw std::invalid_argument("circuit json: empty definition " + name);
      r.defs.emplace(name, gs.back().matrix);
    }
  }
  return r.read_circuit(j);
}

Circuit load_circuit_file(const std::string& path, const qgl::GateLibrary* extra) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return circuit_from_json(ss.str(), extra);
}

void save_circuit_file(const Circuit& c, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << circuit_to_json(c);
}

}  // namespace qcir
