#include "qcir/generators.hpp"

#include <cmath>
#include <stdexcept>

#include "qgl/prelude.hpp"

namespace qcir {

Circuit gen_qft(uint32_t n) {
  if (n < 1) throw std::invalid_argument("qft: need at least one qubit");
  Circuit c(std::vector<uint32_t>(n, 2));
  uint32_t h = c.gate_set().intern(qgl::prelude().get("H"));
  uint32_t cp = n > 1 ? c.gate_set().intern(qgl::prelude().get("CP")) : kNone;
  uint32_t swap = n > 1 ? c.gate_set().intern(qgl::prelude().get("SWAP")) : kNone;

  for (uint32_t i = 0; i < n; ++i) {
    c.append_gate(h, {i}, {});
    for (uint32_t j = i + 1; j < n; ++j)
      c.append_gate(cp, {i, j}, {ParamBinding::constant(M_PI / std::exp2(j - i))});
  }
  for (uint32_t k = 0; k < n / 2; ++k) c.append_gate(swap, {k, n - 1 - k}, {});
  return c;
}

Circuit gen_brickwall(BrickwallKind kind, uint32_t n) {
  if (n < 2) throw std::invalid_argument("brickwall: need at least two qubits");
  Circuit c(std::vector<uint32_t>(n, 2));
  uint32_t u3 = c.gate_set().intern(qgl::prelude().get("U3"));
  uint32_t cnot = c.gate_set().intern(qgl::prelude().get("CNOT"));
  uint32_t next_param = 0;
  auto fresh_u3 = [&](uint32_t q) {
    std::vector<ParamBinding> p = {ParamBinding::param(next_param),
                                   ParamBinding::param(next_param + 1),
                                   ParamBinding::param(next_param + 2)};
    next_param += 3;
    c.append_gate(u3, {q}, std::move(p));
  };

  for (uint32_t q = 0; q < n; ++q) fresh_u3(q);
  uint32_t blocks = kind == BrickwallKind::Thick ? 3 : 1;
  for (uint32_t layer = 0; layer < n; ++layer)
    for (uint32_t p = 0; p + 1 < n; ++p)
      for (uint32_t b = 0; b < blocks; ++b) {
        c.append_gate(cnot, {p, p + 1}, {});
        fresh_u3(p);
        fresh_u3(p + 1);
      }
  return c;
}

}  // namespace qcir
