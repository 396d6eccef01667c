#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "qgl/unitary.hpp"

namespace qgl {

// Register program instruction set. Stores write one scalar component of the
// output matrix; everything else is scalar arithmetic over virtual registers.
enum class KOp : uint8_t {
  LoadParam,  // dst <- params[a]
  LoadConst,  // dst <- imm
  Neg,
  Sqrt,
  Sin,
  Cos,
  Exp,
  Ln,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  StoreRe,  // out[dst, a].re <- reg b
  StoreIm,  // out[dst, a].im <- reg b
};

struct KInstr {
  KOp op;
  uint32_t dst = 0;
  uint32_t a = 0;
  uint32_t b = 0;
  double imm = 0.0;
};

struct KernelProgram {
  std::vector<KInstr> code;
  uint32_t n_regs = 0;
  uint32_t n_params = 0;
  uint32_t dim = 0;
};

// Buffer default the compiler may leave in place instead of storing.
enum class KernelInit : uint8_t { Identity, Zero };

// Compiles one component program. Structurally identical subexpressions are
// computed once (register map keyed by expression identity); parameter-free
// subtrees fold to LoadConst; stores whose value equals the buffer default at
// that slot are skipped.
KernelProgram compile_kernel(const UnitaryExprMatrix& u,
                             KernelInit init = KernelInit::Identity,
                             bool use_cse = true);

// One program per parameter, each filling a zero-initialized buffer with the
// partial-derivative matrix.
std::vector<KernelProgram> compile_gradient_kernels(const UnitaryExprMatrix& u);

template <typename T>
struct MatrixBuffer {
  uint32_t dim = 0;
  std::vector<std::complex<T>> data;

  void resize(uint32_t d) {
    dim = d;
    data.assign(static_cast<size_t>(d) * d, std::complex<T>(0, 0));
  }
  void fill_zero() {
    std::fill(data.begin(), data.end(), std::complex<T>(0, 0));
  }
  void fill_identity() {
    fill_zero();
    for (uint32_t i = 0; i < dim; ++i) data[static_cast<size_t>(i) * dim + i] = T(1);
  }
};

// Executes a kernel into a correctly initialized buffer. Returns false when
// any output element ended up non-finite (domain errors propagate as NaN).
template <typename T>
bool exec_kernel(const KernelProgram& k, const double* params,
                 std::complex<T>* out, std::vector<T>& scratch) {
  scratch.resize(k.n_regs);
  T* r = scratch.data();
  const uint32_t dim = k.dim;
  for (const KInstr& in : k.code) {
    switch (in.op) {
      case KOp::LoadParam: r[in.dst] = static_cast<T>(params[in.a]); break;
      case KOp::LoadConst: r[in.dst] = static_cast<T>(in.imm); break;
      case KOp::Neg: r[in.dst] = -r[in.a]; break;
      case KOp::Sqrt: r[in.dst] = std::sqrt(r[in.a]); break;
      case KOp::Sin: r[in.dst] = std::sin(r[in.a]); break;
      case KOp::Cos: r[in.dst] = std::cos(r[in.a]); break;
      case KOp::Exp: r[in.dst] = std::exp(r[in.a]); break;
      case KOp::Ln: r[in.dst] = std::log(r[in.a]); break;
      case KOp::Add: r[in.dst] = r[in.a] + r[in.b]; break;
      case KOp::Sub: r[in.dst] = r[in.a] - r[in.b]; break;
      case KOp::Mul: r[in.dst] = r[in.a] * r[in.b]; break;
      case KOp::Div: r[in.dst] = r[in.a] / r[in.b]; break;
      case KOp::Pow: r[in.dst] = std::pow(r[in.a], r[in.b]); break;
      case KOp::StoreRe: {
        auto& c = out[static_cast<size_t>(in.dst) * dim + in.a];
        c.real(r[in.b]);
        break;
      }
      case KOp::StoreIm: {
        auto& c = out[static_cast<size_t>(in.dst) * dim + in.a];
        c.imag(r[in.b]);
        break;
      }
    }
  }
  const size_t n = static_cast<size_t>(dim) * dim;
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(out[i].real()) || !std::isfinite(out[i].imag()))
      return false;
  return true;
}

template <typename T>
bool exec_kernel(const KernelProgram& k, const std::vector<double>& params,
                 MatrixBuffer<T>& out, std::vector<T>& scratch) {
  return exec_kernel(k, params.data(), out.data.data(), scratch);
}

std::string kernel_str(const KernelProgram& k);

}  // namespace qgl
