#pragma once

#include <string>
#include <vector>

#include "qvm/tree.hpp"

namespace qvm {

enum class BOp : uint8_t { Write, Frpr, Matmul, Kron };

// Write: a = write-desc index. Frpr: a = source buffer, b = perm index.
// Matmul/Kron: a, b = source buffers. dst is always a buffer.
struct BInstr {
  BOp op;
  uint32_t a = kNoNode;
  uint32_t b = kNoNode;
  uint32_t dst = kNoNode;
};

struct WriteDesc {
  uint32_t expr = 0;  // module entry
  std::vector<ParamBinding> bindings;
};

struct BufferInfo {
  uint32_t rows = 0, cols = 0;
  bool is_static = false;
  // Kernel-output buffers rely on their untouched default slots, so their
  // storage is never recycled for intermediates.
  bool write_target = false;
};

struct Bytecode {
  std::vector<uint32_t> radices;
  uint32_t n_params = 0;
  std::vector<BufferInfo> buffers;
  std::vector<PermSpec> perms;
  std::vector<WriteDesc> writes;
  std::vector<BInstr> static_code;
  std::vector<BInstr> dynamic_code;
  // Per dynamic instruction: ascending circuit parameters its result depends
  // on; drives the gradient bank layout.
  std::vector<std::vector<uint32_t>> dyn_supports;
  uint32_t out_buffer = kNoNode;
};

struct CodegenOptions {
  bool sectioning = true;  // off: constant work re-runs with the dynamic code
};

Bytecode codegen(const ExprTree& t, const CodegenOptions& opts = {});

std::string bytecode_str(const Bytecode& bc);

struct CompiledCircuit {
  Bytecode bytecode;
  qgl::ExpressionModule module;
  ExprTree tree;  // after all passes, for inspection
};

CompiledCircuit compile_circuit(const Circuit& c, const BuildOptions& bopts = {},
                                const CodegenOptions& copts = {},
                                qgl::Precision precision = qgl::Precision::F64);

// Self-contained compiled form (bytecode plus kernels), loadable without the
// source circuit.
std::string artifact_to_json(const CompiledCircuit& cc);

struct Artifact {
  Bytecode bytecode;
  qgl::ExpressionModule module;
};
Artifact artifact_from_json(const std::string& text);

}  // namespace qvm
