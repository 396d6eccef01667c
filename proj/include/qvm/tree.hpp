#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcir/circuit.hpp"
#include "qgl/module.hpp"

namespace qvm {

using qcir::Circuit;
using qcir::ParamBinding;

inline constexpr uint32_t kNoNode = UINT32_MAX;

// Reshape-transpose-reshape of a dense row-major matrix: view the input as a
// tensor with the given factor dims (row index varies over the leading
// factors), reorder the axes so output axis j draws from input axis perm[j],
// and flatten back to out_rows x out_cols.
struct PermSpec {
  uint32_t in_rows = 0, in_cols = 0;
  std::vector<uint32_t> dims;
  std::vector<uint32_t> perm;
  uint32_t out_rows = 0, out_cols = 0;

  // A relayout is a no-op only when it keeps both the axis order and the
  // matrix shape; reshapes still change how consumers index the buffer.
  bool identity() const {
    if (out_rows != in_rows || out_cols != in_cols) return false;
    for (size_t i = 0; i < perm.size(); ++i)
      if (perm[i] != i) return false;
    return true;
  }
  bool operator==(const PermSpec&) const = default;
};

std::string perm_str(const PermSpec& p);

enum class TreeKind : uint8_t { Leaf, MatMul, Kron, Contract, Perm };

// Every node evaluates to an operator on the ordered qudit list `span`: both
// matrix indices run over the mixed-radix digits of that list. MatMul
// children share a span (left is the later operand); Kron concatenates its
// children's spans; Contract multiplies over the shared qudits and emits the
// sorted union.
struct TreeNode {
  TreeKind kind = TreeKind::Leaf;
  uint32_t l = kNoNode, r = kNoNode;
  std::vector<uint32_t> span;
  std::vector<uint32_t> radices;
  bool constant = false;

  // Leaf
  uint32_t expr = 0;
  std::vector<ParamBinding> bindings;

  // Contract
  std::vector<uint32_t> contracted;
  PermSpec lperm, rperm, operm;

  // Perm
  PermSpec spec;
};

struct ExprTree {
  std::vector<TreeNode> nodes;
  uint32_t root = kNoNode;
  std::vector<uint32_t> radices;  // circuit radices

  const TreeNode& at(uint32_t i) const { return nodes[i]; }
};

struct BuildOptions {
  bool kron_fastpath = true;   // pair single-qudit gates feeding a two-qudit mat-mul
  bool fuse = true;            // replace small gate subtrees by fused kernels
  uint32_t fuse_max_qudits = 2;
  uint32_t fuse_max_params = 12;
};

// Greedy pairwise contraction. Each step picks the candidate minimizing its
// own cost plus the best single follow-up contraction of the merged tensor;
// ties go to the pair with the lowest qudit indices.
ExprTree build_tree(const Circuit& c, qgl::ModuleBuilder& builder,
                    const BuildOptions& opts = {});

// Replaces maximal product-only subtrees spanning at most max_qudits qudits
// (and at most max_params bound parameters) by a single fused kernel leaf.
void fuse_subtrees(ExprTree& t, qgl::ModuleBuilder& builder, const BuildOptions& opts);

// Composes adjacent relayout steps across contraction junctions and drops
// identity relayouts.
void fuse_frpr(ExprTree& t);

// Marks subtrees with no parameter-bound leaves.
void const_prop(ExprTree& t);

// Total arithmetic cost of the tree under the flops model used by the
// builder (relayout moves excluded).
double tree_flops(const ExprTree& t);

std::string tree_str(const ExprTree& t);

}  // namespace qvm
