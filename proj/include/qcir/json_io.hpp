#pragma once

#include <string>

#include "qcir/circuit.hpp"
#include "qgl/prelude.hpp"

namespace qcir {

// Canonical textual form: reading the output back and writing it again
// reproduces the text byte for byte.
std::string circuit_to_json(const Circuit& c);

// QGL rendering used for the "defs" section: one matrix element, and a full
// self-contained definition line. Parameters keep their names when they form
// a usable identifier list and fall back to positional names otherwise.
std::string element_qgl_source(const qgl::CExpr& e);
std::string gate_qgl_source(const std::string& name, const qgl::UnitaryExprMatrix& u);

// Gate references resolve against the file's "defs" section first, then the
// extra library (if any), then the standard gate library. Inline QGL sources
// are accepted in place of a reference.
Circuit circuit_from_json(const std::string& text, const qgl::GateLibrary* extra = nullptr);

Circuit load_circuit_file(const std::string& path, const qgl::GateLibrary* extra = nullptr);
void save_circuit_file(const Circuit& c, const std::string& path);

}  // namespace qcir
