#include "qcir/circuit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "qgl/congruence.hpp"

namespace qcir {

using qgl::check_equal;
using qgl::eval_numeric;
using qgl::EvalError;
using qgl::radix_product;

namespace {

// Numeric screen before the symbolic equality test: agreement at a handful of
// random points is necessary for equality, so disagreement rules a pair out
// cheaply.
bool numerically_plausible(const UnitaryExprMatrix& a, const UnitaryExprMatrix& b) {
  std::mt19937_64 rng(0x51c1a570ull);
  std::uniform_real_distribution<double> dist(-2 * M_PI, 2 * M_PI);
  for (int t = 0; t < 4; ++t) {
    std::vector<double> p(a.params.size());
    for (auto& x : p) x = dist(rng);
    try {
      CMat ma = eval_numeric(a, p);
      CMat mb = eval_numeric(b, p);
      for (size_t i = 0; i < ma.size(); ++i)
        if (std::abs(ma[i] - mb[i]) > 1e-9) return false;
    } catch (const EvalError&) {
      return true;
    }
  }
  return true;
}

}  // namespace

uint32_t GateSet::intern(const UnitaryExprMatrix& u) {
  std::string key = canonical_key(u);
  for (size_t i = 0; i < gates_.size(); ++i) {
    if (keys_[i] == key) return static_cast<uint32_t>(i);
    if (gates_[i].radices != u.radices || gates_[i].params.size() != u.params.size())
      continue;
    if (!numerically_plausible(gates_[i], u)) continue;
    if (check_equal(gates_[i], u)) return static_cast<uint32_t>(i);
  }
  gates_.push_back(u);
  keys_.push_back(std::move(key));
  return static_cast<uint32_t>(gates_.size() - 1);
}

Circuit::Circuit(std::vector<uint32_t> radices, uint32_t n_clbits)
    : radices_(std::move(radices)), n_clbits_(n_clbits) {
  for (uint32_t r : radices_)
    if (r < 2 || r > 64) throw std::invalid_argument("circuit: radix out of range");
  last_used_.assign(radices_.size() + n_clbits_, kNone);
}

void Circuit::reserve_params(uint32_t n) { n_params_ = std::max(n_params_, n); }

std::vector<uint32_t> Circuit::wire_keys(const Instruction& in) const {
  std::vector<uint32_t> keys;
  const Instruction& op = in.kind == InstrKind::ClassicallyControlled ? *in.inner : in;
  for (uint32_t q : op.qudits) {
    if (q >= n_qudits()) throw std::out_of_range("circuit: qudit index out of range");
    keys.push_back(q);
  }
  auto add_clbits = [&](const std::vector<uint32_t>& bits) {
    for (uint32_t b : bits) {
      if (b >= n_clbits_) throw std::out_of_range("circuit: clbit index out of range");
      keys.push_back(n_qudits() + b);
    }
  };
  add_clbits(in.clbits);
  if (in.kind == InstrKind::ClassicallyControlled) add_clbits(op.clbits);
  return keys;
}

uint32_t Circuit::place(Instruction in) {
  std::vector<uint32_t> keys = wire_keys(in);
  {
    std::unordered_set<uint32_t> seen;
    for (uint32_t k : keys)
      if (!seen.insert(k).second)
        throw std::invalid_argument("circuit: duplicate operand");
  }
  for (const ParamBinding& b : in.params)
    if (!b.is_const) n_params_ = std::max(n_params_, b.index + 1);

  uint32_t cycle = 0;
  for (uint32_t k : keys)
    if (last_used_[k] != kNone) cycle = std::max(cycle, last_used_[k] + 1);
  while (cycles_.size() <= cycle) {
    Cycle c;
    c.qudits.resize(n_qudits());
    c.clbits.resize(n_clbits_);
    cycles_.push_back(std::move(c));
  }

  uint32_t idx = static_cast<uint32_t>(instrs_.size());
  for (uint32_t k : keys) {
    Cycle::Slot& slot = k < n_qudits() ? cycles_[cycle].qudits[k]
                                       : cycles_[cycle].clbits[k - n_qudits()];
    slot.instr = idx;
    slot.prev_cycle = last_used_[k];
    if (last_used_[k] != kNone) {
      Cycle::Slot& prev = k < n_qudits() ? cycles_[last_used_[k]].qudits[k]
                                         : cycles_[last_used_[k]].clbits[k - n_qudits()];
      prev.next_cycle = cycle;
    }
    last_used_[k] = cycle;
  }
  instrs_.push_back(std::move(in));
  instr_cycle_.push_back(cycle);
  return idx;
}

uint32_t Circuit::append_gate(const UnitaryExprMatrix& u, std::vector<uint32_t> qudits,
                              std::vector<ParamBinding> params) {
  return append_gate(gates_.intern(u), std::move(qudits), std::move(params));
}

uint32_t Circuit::append_gate(uint32_t gate_index, std::vector<uint32_t> qudits,
                              std::vector<ParamBinding> params) {
  if (gate_index >= gates_.size()) throw std::out_of_range("circuit: bad gate index");
  const UnitaryExprMatrix& u = gates_[gate_index];
  if (u.radices.size() != qudits.size())
    throw std::invalid_argument("circuit: operand count mismatch");
  for (size_t i = 0; i < qudits.size(); ++i) {
    if (qudits[i] >= n_qudits()) throw std::out_of_range("circuit: qudit index out of range");
    if (radices_[qudits[i]] != u.radices[i])
      throw std::invalid_argument(fmt::format(
          "circuit: gate expects radix {} on operand {}, qudit {} has radix {}",
          u.radices[i], i, qudits[i], radices_[qudits[i]]));
  }
  if (params.size() != u.params.size())
    throw std::invalid_argument("circuit: parameter count mismatch");
  Instruction in;
  in.kind = InstrKind::Gate;
  in.gate = gate_index;
  in.qudits = std::move(qudits);
  in.params = std::move(params);
  return place(std::move(in));
}

uint32_t Circuit::append_subcircuit(std::shared_ptr<const Circuit> sub,
                                    std::vector<uint32_t> qudits,
                                    std::vector<ParamBinding> params) {
  if (!sub) throw std::invalid_argument("circuit: null subcircuit");
  if (sub->n_qudits() != qudits.size())
    throw std::invalid_argument("circuit: operand count mismatch");
  for (size_t i = 0; i < qudits.size(); ++i)
    if (radices_[qudits[i]] != sub->radices()[i])
      throw std::invalid_argument("circuit: subcircuit radix mismatch");
  if (params.size() != sub->n_params())
    throw std::invalid_argument("circuit: parameter count mismatch");
  Instruction in;
  in.kind = InstrKind::Subcircuit;
  in.sub = std::move(sub);
  in.qudits = std::move(qudits);
  in.params = std::move(params);
  return place(std::move(in));
}

uint32_t Circuit::append_measure(uint32_t qudit, uint32_t clbit) {
  Instruction in;
  in.kind = InstrKind::Measure;
  in.qudits = {qudit};
  in.clbits = {clbit};
  return place(std::move(in));
}

uint32_t Circuit::append_reset(uint32_t qudit) {
  Instruction in;
  in.kind = InstrKind::Reset;
  in.qudits = {qudit};
  return place(std::move(in));
}

uint32_t Circuit::append_classically_controlled(Instruction inner,
                                                std::vector<uint32_t> clbits) {
  if (inner.kind != InstrKind::Gate && inner.kind != InstrKind::Subcircuit)
    throw std::invalid_argument("circuit: unsupported controlled payload");
  Instruction in;
  in.kind = InstrKind::ClassicallyControlled;
  in.clbits = std::move(clbits);
  in.inner = std::make_shared<Instruction>(std::move(inner));
  return place(std::move(in));
}

std::vector<uint32_t> Circuit::iter_dag() const {
  std::vector<uint32_t> order(instrs_.size());
  for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](uint32_t a, uint32_t b) { return instr_cycle_[a] < instr_cycle_[b]; });
  return order;
}

std::optional<uint32_t> Circuit::next_on_qudit(uint32_t instr, uint32_t qudit) const {
  uint32_t cy = instr_cycle_[instr];
  const Cycle::Slot& slot = cycles_[cy].qudits[qudit];
  if (slot.instr != instr) return std::nullopt;
  if (slot.next_cycle == kNone) return std::nullopt;
  return cycles_[slot.next_cycle].qudits[qudit].instr;
}

std::optional<uint32_t> Circuit::prev_on_qudit(uint32_t instr, uint32_t qudit) const {
  uint32_t cy = instr_cycle_[instr];
  const Cycle::Slot& slot = cycles_[cy].qudits[qudit];
  if (slot.instr != instr) return std::nullopt;
  if (slot.prev_cycle == kNone) return std::nullopt;
  return cycles_[slot.prev_cycle].qudits[qudit].instr;
}

CMat Circuit::instance_matrix(const Instruction& in, const std::vector<double>& params) const {
  std::vector<double> args(in.params.size());
  for (size_t i = 0; i < in.params.size(); ++i) {
    const ParamBinding& b = in.params[i];
    if (b.is_const) {
      args[i] = b.value;
    } else {
      if (b.index >= params.size())
        throw std::invalid_argument("circuit: parameter vector too short");
      args[i] = params[b.index];
    }
  }
  switch (in.kind) {
    case InstrKind::Gate: return eval_numeric(gates_[in.gate], args);
    case InstrKind::Subcircuit: return to_unitary_oracle(*in.sub, args);
    default: throw std::invalid_argument("circuit: instruction has no matrix");
  }
}

CMat extend_numeric(const CMat& g, const std::vector<uint32_t>& gate_radices,
                    const std::vector<uint32_t>& qudits,
                    const std::vector<uint32_t>& circuit_radices) {
  const uint32_t n = static_cast<uint32_t>(circuit_radices.size());
  uint32_t dim = radix_product(circuit_radices);
  uint32_t gdim = radix_product(gate_radices);
  CMat out(static_cast<size_t>(dim) * dim, {0.0, 0.0});

  std::vector<uint32_t> digits(n);
  for (uint32_t row = 0; row < dim; ++row) {
    uint32_t rest = row;
    for (uint32_t q = n; q-- > 0;) {
      digits[q] = rest % circuit_radices[q];
      rest /= circuit_radices[q];
    }
    uint32_t grow = 0;
    for (size_t j = 0; j < qudits.size(); ++j) grow = grow * gate_radices[j] + digits[qudits[j]];
    for (uint32_t gcol = 0; gcol < gdim; ++gcol) {
      std::complex<double> v = g[static_cast<size_t>(grow) * gdim + gcol];
      if (v == std::complex<double>(0.0, 0.0)) continue;
      uint32_t gc = gcol;
      std::vector<uint32_t> cdig = digits;
      for (size_t j = qudits.size(); j-- > 0;) {
        cdig[qudits[j]] = gc % gate_radices[j];
        gc /= gate_radices[j];
      }
      uint32_t col = 0;
      for (uint32_t q = 0; q < n; ++q) col = col * circuit_radices[q] + cdig[q];
      out[static_cast<size_t>(row) * dim + col] = v;
    }
  }
  return out;
}

CMat to_unitary_oracle(const Circuit& c, const std::vector<double>& params) {
  uint32_t dim = radix_product(c.radices());
  CMat u(static_cast<size_t>(dim) * dim, {0.0, 0.0});
  for (uint32_t i = 0; i < dim; ++i) u[static_cast<size_t>(i) * dim + i] = 1.0;

  for (uint32_t idx : c.iter_dag()) {
    const Instruction& in = c.instruction(idx);
    if (in.kind != InstrKind::Gate && in.kind != InstrKind::Subcircuit)
      throw std::invalid_argument("to_unitary: non-unitary instruction");
    CMat g = c.instance_matrix(in, params);
    std::vector<uint32_t> gr(in.qudits.size());
    for (size_t j = 0; j < in.qudits.size(); ++j) gr[j] = c.radices()[in.qudits[j]];
    CMat gf = extend_numeric(g, gr, in.qudits, c.radices());
    CMat next(u.size(), {0.0, 0.0});
    for (uint32_t r = 0; r < dim; ++r)
      for (uint32_t k = 0; k < dim; ++k) {
        std::complex<double> v = gf[static_cast<size_t>(r) * dim + k];
        if (v == std::complex<double>(0.0, 0.0)) continue;
        for (uint32_t cc = 0; cc < dim; ++cc)
          next[static_cast<size_t>(r) * dim + cc] += v * u[static_cast<size_t>(k) * dim + cc];
      }
    u = std::move(next);
  }
  return u;
}

Circuit partition(const Circuit& c, uint32_t max_qudits) {
  if (max_qudits == 0) throw std::invalid_argument("partition: max_qudits must be positive");
  Circuit out(c.radices(), c.n_clbits());
  out.reserve_params(c.n_params());

  std::vector<uint32_t> block;          // instruction indices
  std::vector<uint32_t> span;           // ascending qudit set of the block

  auto flush = [&]() {
    if (block.empty()) return;
    std::vector<uint32_t> sub_radices(span.size());
    std::unordered_map<uint32_t, uint32_t> pos;
    for (size_t i = 0; i < span.size(); ++i) {
      sub_radices[i] = c.radices()[span[i]];
      pos[span[i]] = static_cast<uint32_t>(i);
    }
    auto sub = std::make_shared<Circuit>(sub_radices, 0u);
    std::vector<ParamBinding> outer;
    for (uint32_t idx : block) {
      const Instruction& in = c.instruction(idx);
      std::vector<uint32_t> q(in.qudits.size());
      for (size_t j = 0; j < q.size(); ++j) q[j] = pos.at(in.qudits[j]);
      std::vector<ParamBinding> inner(in.params.size());
      for (size_t j = 0; j < in.params.size(); ++j) {
        if (in.params[j].is_const) {
          inner[j] = in.params[j];
        } else {
          inner[j] = ParamBinding::param(static_cast<uint32_t>(outer.size()));
          outer.push_back(in.params[j]);
        }
      }
      sub->append_gate(c.gate_set()[in.gate], std::move(q), std::move(inner));
    }
    out.append_subcircuit(std::move(sub), span, std::move(outer));
    block.clear();
    span.clear();
  };

  for (uint32_t idx : c.iter_dag()) {
    const Instruction& in = c.instruction(idx);
    if (in.kind != InstrKind::Gate) {
      throw std::invalid_argument("partition: only gate circuits are supported");
    }
    if (in.qudits.size() > max_qudits)
      throw std::invalid_argument("partition: gate wider than block limit");
    std::vector<uint32_t> merged = span;
    for (uint32_t q : in.qudits)
      if (std::find(merged.begin(), merged.end(), q) == merged.end()) merged.push_back(q);
    std::sort(merged.begin(), merged.end());
    if (merged.size() > max_qudits) {
      flush();
      merged.assign(in.qudits.begin(), in.qudits.end());
      std::sort(merged.begin(), merged.end());
    }
    span = std::move(merged);
    block.push_back(idx);
  }
  flush();
  return out;
}

Circuit flatten(const Circuit& c) {
  Circuit out(c.radices(), c.n_clbits());
  out.reserve_params(c.n_params());

  // Map an inner binding through the instance bindings of its enclosing
  // subcircuit instruction.
  auto compose = [](const ParamBinding& inner, const std::vector<ParamBinding>& outer) {
    if (inner.is_const) return inner;
    return outer[inner.index];
  };

  std::function<void(const Circuit&, const std::vector<uint32_t>&,
                     const std::vector<ParamBinding>&)>
      inline_circuit = [&](const Circuit& src, const std::vector<uint32_t>& wires,
                           const std::vector<ParamBinding>& bindings) {
        for (uint32_t idx : src.iter_dag()) {
          const Instruction& in = src.instruction(idx);
          std::vector<uint32_t> q(in.qudits.size());
          for (size_t j = 0; j < q.size(); ++j) q[j] = wires[in.qudits[j]];
          switch (in.kind) {
            case InstrKind::Gate: {
              std::vector<ParamBinding> p(in.params.size());
              for (size_t j = 0; j < p.size(); ++j) p[j] = compose(in.params[j], bindings);
              out.append_gate(src.gate_set()[in.gate], std::move(q), std::move(p));
              break;
            }
            case InstrKind::Subcircuit: {
              std::vector<ParamBinding> p(in.params.size());
              for (size_t j = 0; j < p.size(); ++j) p[j] = compose(in.params[j], bindings);
              inline_circuit(*in.sub, q, p);
              break;
            }
            case InstrKind::Measure:
              if (&src != &c) throw std::invalid_argument("flatten: nested measurement");
              out.append_measure(q[0], in.clbits[0]);
              break;
            case InstrKind::Reset:
              if (&src != &c) throw std::invalid_argument("flatten: nested reset");
              out.append_reset(q[0]);
              break;
            case InstrKind::ClassicallyControlled:
              throw std::invalid_argument("flatten: classical control is not flattenable");
          }
        }
      };

  std::vector<uint32_t> top(c.n_qudits());
  for (uint32_t i = 0; i < c.n_qudits(); ++i) top[i] = i;
  std::vector<ParamBinding> ident(c.n_params());
  for (uint32_t i = 0; i < c.n_params(); ++i) ident[i] = ParamBinding::param(i);
  inline_circuit(c, top, ident);
  return out;
}

}  // namespace qcir
