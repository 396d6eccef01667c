#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qgl/unitary.hpp"

namespace qcir {

using qgl::CMat;
using qgl::UnitaryExprMatrix;

inline constexpr uint32_t kNone = UINT32_MAX;

// Argument of one gate instance: either a position in the circuit's flat
// parameter vector or an inline constant.
struct ParamBinding {
  bool is_const = false;
  uint32_t index = 0;
  double value = 0.0;

  static ParamBinding param(uint32_t k) { return {false, k, 0.0}; }
  static ParamBinding constant(double v) { return {true, 0, v}; }
  bool operator==(const ParamBinding&) const = default;
};

// Deduplicated gate definitions. Appending returns the index of an existing
// entry whenever symbolic equality testing proves the matrices equal; entries
// are never removed or reordered. Gates that are congruent but not equal stay
// separate (the caller may warn).
class GateSet {
 public:
  uint32_t intern(const UnitaryExprMatrix& u);
  const UnitaryExprMatrix& operator[](size_t i) const { return gates_[i]; }
  size_t size() const { return gates_.size(); }

 private:
  std::vector<UnitaryExprMatrix> gates_;
  std::vector<std::string> keys_;
};

enum class InstrKind : uint8_t { Gate, Subcircuit, Measure, Reset, ClassicallyControlled };

class Circuit;

struct Instruction {
  InstrKind kind = InstrKind::Gate;
  uint32_t gate = kNone;                   // Gate: gate-set index
  std::shared_ptr<const Circuit> sub;      // Subcircuit body
  std::vector<uint32_t> qudits;            // circuit qudits, gate order
  std::vector<uint32_t> clbits;            // Measure targets / control condition
  std::vector<ParamBinding> params;
  std::shared_ptr<Instruction> inner;      // ClassicallyControlled payload
};

// One time step. Wires (qudits and classical bits) map to the occupying
// instruction; busy wires also link to the neighbouring cycles that use the
// same wire, giving O(1) next/prev walks along a wire.
struct Cycle {
  struct Slot {
    uint32_t instr = kNone;
    uint32_t prev_cycle = kNone;
    uint32_t next_cycle = kNone;
  };
  std::vector<Slot> qudits;
  std::vector<Slot> clbits;
};

class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(std::vector<uint32_t> radices, uint32_t n_clbits = 0);

  const std::vector<uint32_t>& radices() const { return radices_; }
  uint32_t n_qudits() const { return static_cast<uint32_t>(radices_.size()); }
  uint32_t n_clbits() const { return n_clbits_; }
  uint32_t n_params() const { return n_params_; }
  void reserve_params(uint32_t n);

  GateSet& gate_set() { return gates_; }
  const GateSet& gate_set() const { return gates_; }

  size_t n_instructions() const { return instrs_.size(); }
  const Instruction& instruction(uint32_t i) const { return instrs_[i]; }
  uint32_t cycle_of(uint32_t instr) const { return instr_cycle_[instr]; }
  size_t n_cycles() const { return cycles_.size(); }
  const Cycle& cycle(uint32_t i) const { return cycles_[i]; }

  // Places the instruction in the earliest cycle at or after every operand's
  // last-used cycle + 1. Returns the instruction index.
  uint32_t append_gate(const UnitaryExprMatrix& u, std::vector<uint32_t> qudits,
                       std::vector<ParamBinding> params);
  uint32_t append_gate(uint32_t gate_index, std::vector<uint32_t> qudits,
                       std::vector<ParamBinding> params);
  uint32_t append_subcircuit(std::shared_ptr<const Circuit> sub, std::vector<uint32_t> qudits,
                             std::vector<ParamBinding> params);
  uint32_t append_measure(uint32_t qudit, uint32_t clbit);
  uint32_t append_reset(uint32_t qudit);
  uint32_t append_classically_controlled(Instruction inner, std::vector<uint32_t> clbits);

  // Instructions in dependency order (cycle-major, insertion order within a
  // cycle).
  std::vector<uint32_t> iter_dag() const;
  std::optional<uint32_t> next_on_qudit(uint32_t instr, uint32_t qudit) const;
  std::optional<uint32_t> prev_on_qudit(uint32_t instr, uint32_t qudit) const;

  // Evaluates the symbolic matrix of a gate instance at a concrete parameter
  // vector, with bindings applied.
  CMat instance_matrix(const Instruction& in, const std::vector<double>& params) const;

 private:
  uint32_t place(Instruction in);
  std::vector<uint32_t> wire_keys(const Instruction& in) const;

  std::vector<uint32_t> radices_;
  uint32_t n_clbits_ = 0;
  uint32_t n_params_ = 0;
  GateSet gates_;
  std::vector<Instruction> instrs_;
  std::vector<uint32_t> instr_cycle_;
  std::vector<Cycle> cycles_;
  std::vector<uint32_t> last_used_;  // per wire key, cycle index or kNone
};

// Reference product of the extended instruction matrices in dependency
// order; later instructions multiply from the left. Throws on measurement,
// reset and classical control.
CMat to_unitary_oracle(const Circuit& c, const std::vector<double>& params);

// Numeric embedding of a small operator onto the full register.
CMat extend_numeric(const CMat& g, const std::vector<uint32_t>& gate_radices,
                    const std::vector<uint32_t>& qudits,
                    const std::vector<uint32_t>& circuit_radices);

// Greedy left-to-right grouping into subcircuit blocks spanning at most
// max_qudits qudits.
Circuit partition(const Circuit& c, uint32_t max_qudits);

// Inlines nested subcircuits recursively.
Circuit flatten(const Circuit& c);

}  // namespace qcir
