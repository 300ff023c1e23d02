#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qdaw::sim {

/// Native gate set {RZ, sqrt(X), CX}, as supported by transmon-style devices.
enum class GateKind { RZ, SX, CX };

struct Gate {
  GateKind kind = GateKind::RZ;
  int q0 = 0;       // target (RZ/SX) or control (CX)
  int q1 = -1;      // CX target
  double theta = 0.0;

  static Gate rz(int q, double theta) { return {GateKind::RZ, q, -1, theta}; }
  static Gate sx(int q) { return {GateKind::SX, q, -1, 0.0}; }
  static Gate cx(int control, int target) { return {GateKind::CX, control, target, 0.0}; }
};

struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> ops;
  bool measured = true;

  int cx_count() const;
  void validate() const;

  /// Line-oriented dump: header "QDAW-CIRCUIT v1 n=<qubits>", then one gate
  /// per line ("RZ q theta", "SX q", "CX c t").
  void dump(std::ostream& os) const;
  static Circuit parse(std::istream& is);
};

/// Abstract gates accepted by the transpiler.
enum class AbstractKind { RX, RY, RZ, H, X, CX, RZZ };

struct AbstractOp {
  AbstractKind kind = AbstractKind::RZ;
  int q0 = 0;
  int q1 = -1;
  double theta = 0.0;

  static AbstractOp rx(int q, double t) { return {AbstractKind::RX, q, -1, t}; }
  static AbstractOp ry(int q, double t) { return {AbstractKind::RY, q, -1, t}; }
  static AbstractOp rz(int q, double t) { return {AbstractKind::RZ, q, -1, t}; }
  static AbstractOp h(int q) { return {AbstractKind::H, q, -1, 0.0}; }
  static AbstractOp x(int q) { return {AbstractKind::X, q, -1, 0.0}; }
  static AbstractOp cx(int c, int t) { return {AbstractKind::CX, c, t, 0.0}; }
  static AbstractOp rzz(int a, int b, double t) { return {AbstractKind::RZZ, a, b, t}; }
};

/// Rewrites abstract gates into the native set, unitary-equivalent up to a
/// global phase. Adjacent RZ gates on the same qubit are merged and zero
/// rotations dropped.
Circuit transpile(int n_qubits, const std::vector<AbstractOp>& ops, bool measured = true);

}  // namespace qdaw::sim
