#pragma once

#include <complex>
#include <random>
#include <vector>

#include "qcir/circuit.hpp"
#include "qvm/bytecode.hpp"
#include "qvm/tree.hpp"

// Independent reference implementations the tests compare against. Everything
// here is written for clarity over speed and shares no code with the library
// paths it checks.
namespace support {

double max_diff(const qgl::CMat& a, const qgl::CMat& b);
double max_diff(const qgl::CMat& a, const std::complex<double>* b);

// max |(U U^dag - I)_{rc}|
double unitarity_error(const qgl::CMat& u, uint32_t dim);

std::vector<double> rand_params(std::mt19937_64& rng, uint32_t n);

// Index-permuting relayout done from the scatter direction: walk the input
// linearly and compute where each element lands.
qgl::CMat frpr_oracle(const qvm::PermSpec& p, const qgl::CMat& in);

// Random mixed-radix circuit over the standard gate library. Populates
// `params` with a value per circuit parameter.
qcir::Circuit random_circuit(std::mt19937_64& rng, std::vector<double>& params,
                             int max_qudits = 5);

// Central finite differences of the compiled unitary, one matrix per
// parameter.
std::vector<qgl::CMat> fd_gradients(const qvm::Bytecode& bc,
                                    const qgl::ExpressionModule& mod,
                                    const std::vector<double>& params,
                                    double h = 1e-6);

// Central finite differences of a symbolic matrix.
std::vector<qgl::CMat> fd_gradients_sym(const qgl::UnitaryExprMatrix& u,
                                        const std::vector<double>& params,
                                        double h = 1e-6);

// Minimum total multiply flops over every binary contraction tree of operator
// tensors with the given qudit spans: subset dynamic programming, so it
// covers each ordering an exhaustive enumeration would visit.
double optimal_contraction_flops(const std::vector<std::vector<uint32_t>>& spans,
                                 const std::vector<uint32_t>& radices);

}  // namespace support
