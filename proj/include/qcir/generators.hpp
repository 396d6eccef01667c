#pragma once

#include "qcir/circuit.hpp"

namespace qcir {

// Textbook quantum Fourier transform on n qubits (qubit 0 is the most
// significant digit): a Hadamard per qubit, controlled phases between every
// pair, and the final reversal swaps.
Circuit gen_qft(uint32_t n);

enum class BrickwallKind { Thin, Thick };

// A column of U3 gates followed by n layers; each layer runs the ladder of
// consecutive-qubit pairs, applying one (thin) or three (thick) blocks of a
// CNOT followed by a U3 on each operand. Every U3 instance gets its own three
// parameters.
Circuit gen_brickwall(BrickwallKind kind, uint32_t n);

}  // namespace qcir
