#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "qgl/lower.hpp"
#include "qgl/parser.hpp"
#include "qgl/prelude.hpp"
#include "support/oracles.hpp"

using namespace qgl;

namespace {

UnitaryExprMatrix lower_one(const std::string& src) {
  ParsedFile f = parse_gates(src);
  return lower_file(f).front().matrix;
}

double scalar_value(const std::string& body, const std::string& vars = "",
                    const std::vector<double>& vals = {}) {
  UnitaryExprMatrix m =
      lower_one("utry P(" + vars + ") { " + body + " }");
  CMat v = eval_numeric(m, vals);
  REQUIRE(v.size() == 1);
  CHECK(std::abs(v[0].imag()) < 1e-15);
  return v[0].real();
}

ParseError capture(const std::string& src) {
  try {
    ParsedFile f = parse_gates(src);
    lower_file(f);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a parse error");
  return ParseError(ParseErrorKind::Syntax, 0, 0, "unreachable");
}

}  // namespace

TEST_CASE("prelude loads the standard gates") {
  const GateLibrary& lib = prelude();
  for (const char* name : {"H", "X", "Y", "Z", "S", "T", "RX", "RY", "RZ",
                           "U1", "U2", "U3", "CNOT", "CX", "CZ", "SWAP", "CP",
                           "RZZ", "CCX", "Phase3", "CSUM"})
    CHECK(lib.has(name));
  CHECK(lib.get("U3").params.size() == 3);
  CHECK(lib.get("U3").radices == std::vector<uint32_t>{2});
  CHECK(lib.get("CCX").radices == std::vector<uint32_t>{2, 2, 2});
  CHECK(lib.get("Phase3").radices == std::vector<uint32_t>{3});
  CHECK(lib.get("CSUM").radices == std::vector<uint32_t>{3, 3});
  CHECK(lib.get("CSUM").dim == 9);
}

TEST_CASE("gate matrices match their closed forms") {
  const GateLibrary& lib = prelude();
  auto expect = [](const CMat& got, const CMat& want) {
    REQUIRE(got.size() == want.size());
    CHECK(support::max_diff(got, want) < 1e-12);
  };

  double th = 0.73;
  double c = std::cos(th / 2), s = std::sin(th / 2);
  expect(eval_numeric(lib.get("RX"), {th}),
         {{c, 0}, {0, -s}, {0, -s}, {c, 0}});
  expect(eval_numeric(lib.get("RY"), {th}),
         {{c, 0}, {-s, 0}, {s, 0}, {c, 0}});
  expect(eval_numeric(lib.get("RZ"), {th}),
         {std::polar(1.0, -th / 2), 0, 0, std::polar(1.0, th / 2)});

  double r = 1 / std::sqrt(2.0);
  expect(eval_numeric(lib.get("H"), {}), {{r, 0}, {r, 0}, {r, 0}, {-r, 0}});
  expect(eval_numeric(lib.get("T"), {}),
         {1, 0, 0, std::polar(1.0, M_PI / 4)});
  expect(eval_numeric(lib.get("Y"), {}), {0, {0, -1}, {0, 1}, 0});

  double ph = 0.4, la = -1.1;
  CMat u3 = eval_numeric(lib.get("U3"), {th, ph, la});
  expect(u3, {{c, 0},
              -std::polar(s, la),
              std::polar(s, ph),
              std::polar(c, ph + la)});

  CMat cx = eval_numeric(lib.get("CNOT"), {});
  for (uint32_t col = 0; col < 4; ++col) {
    uint32_t row = col < 2 ? col : (col == 2 ? 3 : 2);
    CHECK(cx[row * 4 + col] == std::complex<double>(1, 0));
  }

  // CSUM maps |c, t> to |c, (c + t) mod 3>
  CMat cs = eval_numeric(lib.get("CSUM"), {});
  for (uint32_t ctl = 0; ctl < 3; ++ctl)
    for (uint32_t t = 0; t < 3; ++t) {
      uint32_t col = ctl * 3 + t, row = ctl * 3 + (ctl + t) % 3;
      CHECK(cs[row * 9 + col] == std::complex<double>(1, 0));
    }
}

TEST_CASE("every prelude gate is unitary at 100 random points") {
  const GateLibrary& lib = prelude();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-2 * M_PI, 2 * M_PI);
  for (const std::string& name : lib.order) {
    const UnitaryExprMatrix& g = lib.get(name);
    double worst = 0;
    int npts = g.params.empty() ? 1 : 100;
    for (int k = 0; k < npts; ++k) {
      std::vector<double> pt(g.params.size());
      for (double& v : pt) v = d(rng);
      worst = std::max(worst, support::unitarity_error(eval_numeric(g, pt), g.dim));
    }
    CAPTURE(name);
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("operator precedence") {
  CHECK(scalar_value("~a^2", "a", {3}) == doctest::Approx(-9));
  CHECK(scalar_value("~a * a", "a", {3}) == doctest::Approx(-9));
  CHECK(scalar_value("2^3^2") == doctest::Approx(512));
  CHECK(scalar_value("(2^3)^2") == doctest::Approx(64));
  CHECK(scalar_value("1 - 2 - 3") == doctest::Approx(-4));
  CHECK(scalar_value("12 / 2 / 3") == doctest::Approx(2));
  CHECK(scalar_value("1 + 2 * 3") == doctest::Approx(7));
  CHECK(scalar_value("~~5") == doctest::Approx(5));
  // ~ prefixes a whole term; mid-term negation needs parentheses
  CHECK(scalar_value("2 * (~3) + 10") == doctest::Approx(4));
  CHECK(capture("utry A() { 2 * ~3 }").kind == ParseErrorKind::Syntax);
  CHECK(scalar_value("cos(0) + sin(0)") == doctest::Approx(1));
  CHECK(scalar_value("pow(2, 10)") == doctest::Approx(1024));
  CHECK(scalar_value("tan(0.3)") == doctest::Approx(std::tan(0.3)));
  CHECK(scalar_value("sec(0.3)") == doctest::Approx(1 / std::cos(0.3)));
}

TEST_CASE("radix inference and declarations") {
  CHECK(lower_one("utry A() { [[1, 0], [0, 1]] }").radices ==
        std::vector<uint32_t>{2});
  CHECK(lower_one("utry A() { [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]] }")
            .radices == std::vector<uint32_t>{2, 2});
  CHECK(lower_one("utry A<4>() { [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]] }")
            .radices == std::vector<uint32_t>{4});
  CHECK(lower_one("utry A<2, 3>() { "
                  "[[1,0,0,0,0,0],[0,1,0,0,0,0],[0,0,1,0,0,0],"
                  "[0,0,0,1,0,0],[0,0,0,0,1,0],[0,0,0,0,0,1]] }")
            .radices == std::vector<uint32_t>{2, 3});
  // scalar bodies become 1x1 matrices
  CHECK(lower_one("utry A() { 1 }").dim == 1);
}

TEST_CASE("parse errors carry kind and position") {
  {
    ParseError e = capture("utry A() { $ }");
    CHECK(e.kind == ParseErrorKind::Lex);
    CHECK(e.line == 1);
    CHECK(e.col == 12);
    CHECK(std::string(e.what()).find("1:12: lex error") != std::string::npos);
  }
  {
    ParseError e = capture("utry A() { [[1, 0], [0, 1]] ");
    CHECK(e.kind == ParseErrorKind::Syntax);
  }
  {
    ParseError e = capture("utry A(i) { [[1, 0], [0, 1]] }");
    CHECK(e.kind == ParseErrorKind::ReservedVariable);
    CHECK(e.col == 8);
  }
  CHECK(capture("utry A(e) { [[e]] }").kind == ParseErrorKind::ReservedVariable);
  CHECK(capture("utry A(π) { [[π]] }").kind == ParseErrorKind::ReservedVariable);
  CHECK(capture("utry A(x, x) { [[x]] }").kind == ParseErrorKind::Syntax);
  {
    // second line, ragged rows
    ParseError e = capture("utry A() {\n [[1, 0], [1]] }");
    CHECK(e.kind == ParseErrorKind::DimensionMismatch);
    CHECK(e.line == 2);
  }
  CHECK(capture("utry A() { [[1, 0, 0], [0, 1, 0], [0, 0, 1]] }").kind ==
        ParseErrorKind::DimensionMismatch);  // dim 3 needs declared radices
  CHECK(capture("utry A<2>() { [[1,0,0],[0,1,0],[0,0,1]] }").kind ==
        ParseErrorKind::DimensionMismatch);
  CHECK(capture("utry A<1>() { [[1]] }").kind ==
        ParseErrorKind::DimensionMismatch);
  CHECK(capture("utry A() { [[1, 0], [0, x]] }").kind ==
        ParseErrorKind::Syntax);  // undeclared variable
  CHECK(capture("utry A() { sin([[1, 0], [0, 1]]) }").kind ==
        ParseErrorKind::UnsupportedConstruct);
  CHECK(capture("utry A(x) { sin(i*x) }").kind ==
        ParseErrorKind::UnsupportedConstruct);
  CHECK(capture("utry A() { 1 / [[1, 0], [0, 1]] }").kind ==
        ParseErrorKind::UnsupportedConstruct);
  CHECK(capture("utry A() { [[1, 0], [0, 1]] ^ [[1, 0], [0, 1]] }").kind ==
        ParseErrorKind::UnsupportedConstruct);
  CHECK(capture("utry A() { nonsense(3) }").kind == ParseErrorKind::Syntax);
  CHECK(parse_error_kind_name(ParseErrorKind::DimensionMismatch) ==
        std::string("dimension-mismatch"));
}

TEST_CASE("greek identifiers and unicode survive the round trip") {
  UnitaryExprMatrix m = lower_one("utry G(θ, φ) { [[e^(i*θ), 0], [0, e^(i*φ)]] }");
  REQUIRE(m.params.size() == 2);
  CHECK(sym_name(m.params[0]) == "θ");
  CHECK(sym_name(m.params[1]) == "φ");
}

TEST_CASE("printing a definition is a fixpoint") {
  const char* srcs[] = {
      "utry G(a, b) { ~a^2 * cos(b) + [[1, 0], [0, e^(i*a)]] / sqrt(2) - a/2 }",
      "utry H2() { [[1, 1], [1, ~1]] / sqrt(2) }",
      "utry P<3>(θ0, θ1) { [[1, 0, 0], [0, e^(i*θ0), 0], [0, 0, e^(i*θ1)]] }",
      "utry W(x) { sin(x/2)^2 + 1/4 }",
  };
  for (const char* src : srcs) {
    ParsedFile f = parse_gates(src);
    std::string p1 = ast_def_str(f, f.defs[0]);
    ParsedFile f2 = parse_gates(p1);
    std::string p2 = ast_def_str(f2, f2.defs[0]);
    CAPTURE(src);
    CHECK(p1 == p2);
  }
  // multiple definitions in one file
  ParsedFile f = parse_gates("utry A() { [[1]] } utry B(x) { [[x]] }");
  CHECK(f.defs.size() == 2);
  std::string all = ast_file_str(f);
  ParsedFile f2 = parse_gates(all);
  CHECK(ast_file_str(f2) == all);
}

TEST_CASE("substitution onto parameters") {
  const UnitaryExprMatrix& rx = prelude().get("RX");
  UnitaryExprMatrix id = substitute(rx, {{rx.params[0], ex_zero()}});
  CHECK(id.params.empty());
  CHECK(id.at(0, 0) == cx_one());
  CHECK(id.at(0, 1) == cx_zero());
  CHECK(id.at(1, 1) == cx_one());

  // half-turn: RX(pi) = -i X
  UnitaryExprMatrix half = substitute(rx, {{rx.params[0], ex_pi()}});
  CMat v = eval_numeric(half, {});
  CHECK(std::abs(v[0]) < 1e-15);
  CHECK(std::abs(v[1] - std::complex<double>(0, -1)) < 1e-15);
}

TEST_CASE("matrix derivatives match finite differences") {
  const GateLibrary& lib = prelude();
  std::mt19937_64 rng(5);
  for (const char* name : {"RX", "RY", "RZ", "U2", "U3", "CP", "RZZ", "Phase3"}) {
    const UnitaryExprMatrix& g = lib.get(name);
    std::vector<UnitaryExprMatrix> grads = differentiate(g);
    REQUIRE(grads.size() == g.params.size());
    std::vector<double> pt = support::rand_params(rng, g.params.size());
    std::vector<CMat> fd = support::fd_gradients_sym(g, pt);
    for (size_t p = 0; p < grads.size(); ++p) {
      CMat got = eval_numeric(grads[p], pt);
      CAPTURE(name);
      CHECK(support::max_diff(got, fd[p]) < 1e-9);
    }
  }
}

TEST_CASE("symbolic matrix algebra") {
  const GateLibrary& lib = prelude();
  const UnitaryExprMatrix& u3 = lib.get("U3");

  // dagger(U) U = I numerically
  UnitaryExprMatrix prod = matmul_sym(dagger(u3), u3);
  std::vector<double> pt = {0.7, -0.3, 1.9};
  CHECK(support::unitarity_error(eval_numeric(u3, pt), 2) < 1e-12);
  CMat pv = eval_numeric(prod, pt);
  CHECK(std::abs(pv[0] - 1.0) < 1e-12);
  CHECK(std::abs(pv[1]) < 1e-12);

  // kron dims and params concatenate
  UnitaryExprMatrix k = kron_sym(u3, lib.get("RX"));
  CHECK(k.dim == 4);
  CHECK(k.radices == std::vector<uint32_t>{2, 2});
  CHECK(k.params.size() == 4);

  // shared parameter names merge
  UnitaryExprMatrix two = matmul_sym(u3, u3);
  CHECK(two.params.size() == 3);

  UnitaryExprMatrix renamed = rename_params_positional(u3, "q");
  CHECK(sym_name(renamed.params[0]) == "q0");
  CHECK(support::max_diff(eval_numeric(renamed, pt), eval_numeric(u3, pt)) == 0);
}

TEST_CASE("embedding into a larger register") {
  const GateLibrary& lib = prelude();
  UnitaryExprMatrix big = embed(lib.get("CNOT"), {2, 2, 2}, {2, 0});
  CHECK(big.dim == 8);
  CMat bm = eval_numeric(big, {});
  // control on qubit 2, target on qubit 0: |001> -> |101>
  CHECK(bm[5 * 8 + 1] == std::complex<double>(1, 0));
  CHECK(bm[1 * 8 + 1] == std::complex<double>(0, 0));
  CHECK(bm[0] == std::complex<double>(1, 0));

  // identity embedding leaves the order intact
  UnitaryExprMatrix same = embed(lib.get("CNOT"), {2, 2}, {0, 1});
  CHECK(support::max_diff(eval_numeric(same, {}), eval_numeric(lib.get("CNOT"), {})) == 0);

  // mixed radix: qutrit gate into qubit-qutrit register
  UnitaryExprMatrix mixed = embed(lib.get("Phase3"), {2, 3}, {1});
  CHECK(mixed.dim == 6);
  std::vector<double> th = {0.9, -0.4};
  CMat mv = eval_numeric(mixed, th);
  CHECK(std::abs(mv[1 * 6 + 1] - std::polar(1.0, 0.9)) < 1e-12);
  CHECK(std::abs(mv[4 * 6 + 4] - std::polar(1.0, 0.9)) < 1e-12);
  CHECK(support::unitarity_error(mv, 6) < 1e-12);
}

TEST_CASE("loading user definitions over the prelude") {
  GateLibrary lib = load_gates_source(
      "utry RX(θ) { [[1, 0], [0, e^(i*θ)]] }\n"
      "utry Mine(x) { [[cos(x), ~sin(x)], [sin(x), cos(x)]] }");
  GateLibrary merged = prelude();
  merged.merge(lib);
  CHECK(merged.has("Mine"));
  // the override wins
  CMat v = eval_numeric(merged.get("RX"), {0.5});
  CHECK(std::abs(v[0] - 1.0) < 1e-15);
}
