#include "qdaw/circuit.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qdaw::sim {

namespace {

constexpr double kPi = 3.14159265358979323846;

class NativeEmitter {
 public:
  explicit NativeEmitter(std::vector<Gate>& out) : out_(out) {}

  void rz(int q, double theta) {
    if (!out_.empty() && out_.back().kind == GateKind::RZ && out_.back().q0 == q) {
      out_.back().theta += theta;
      if (std::abs(out_.back().theta) < 1e-15) out_.pop_back();
      return;
    }
    if (std::abs(theta) < 1e-15) return;
    out_.push_back(Gate::rz(q, theta));
  }

  void sx(int q) { out_.push_back(Gate::sx(q)); }
  void cx(int c, int t) { out_.push_back(Gate::cx(c, t)); }

  void h(int q) {
    rz(q, kPi / 2);
    sx(q);
    rz(q, kPi / 2);
  }

  // RX(t) = H RZ(t) H; the inner RZ merges give RZ(pi/2) SX RZ(t+pi) SX RZ(pi/2).
  void rx(int q, double theta) {
    rz(q, kPi / 2);
    sx(q);
    rz(q, theta + kPi);
    sx(q);
    rz(q, kPi / 2);
  }

  // RY(t) = RZ(pi/2) RX(t) RZ(-pi/2) applied right to left.
  void ry(int q, double theta) {
    rz(q, -kPi / 2);
    rx(q, theta);
    rz(q, kPi / 2);
  }

 private:
  std::vector<Gate>& out_;
};

}  // namespace

int Circuit::cx_count() const {
  int count = 0;
  for (const auto& g : ops) count += g.kind == GateKind::CX;
  return count;
}

void Circuit::validate() const {
  if (n_qubits < 1) throw std::invalid_argument("circuit: n_qubits must be positive");
  for (const auto& g : ops) {
    if (g.q0 < 0 || g.q0 >= n_qubits) throw std::invalid_argument("circuit: qubit out of range");
    if (g.kind == GateKind::CX) {
      if (g.q1 < 0 || g.q1 >= n_qubits || g.q1 == g.q0)
        throw std::invalid_argument("circuit: bad CX operands");
    }
    if (!std::isfinite(g.theta)) throw std::invalid_argument("circuit: non-finite angle");
  }
}

void Circuit::dump(std::ostream& os) const {
  os << "QDAW-CIRCUIT v1 n=" << n_qubits << '\n';
  os.precision(17);
  for (const auto& g : ops) {
    switch (g.kind) {
      case GateKind::RZ: os << "RZ " << g.q0 << ' ' << g.theta << '\n'; break;
      case GateKind::SX: os << "SX " << g.q0 << '\n'; break;
      case GateKind::CX: os << "CX " << g.q0 << ' ' << g.q1 << '\n'; break;
    }
  }
}

Circuit Circuit::parse(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("circuit parse: empty input");
  Circuit c;
  {
    std::istringstream header(line);
    std::string magic, version, nfield;
    header >> magic >> version >> nfield;
    if (magic != "QDAW-CIRCUIT" || version != "v1" || nfield.rfind("n=", 0) != 0)
      throw std::runtime_error("circuit parse: bad header");
    c.n_qubits = std::stoi(nfield.substr(2));
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string op;
    ls >> op;
    if (op == "RZ") {
      int q;
      double theta;
      ls >> q >> theta;
      c.ops.push_back(Gate::rz(q, theta));
    } else if (op == "SX") {
      int q;
      ls >> q;
      c.ops.push_back(Gate::sx(q));
    } else if (op == "CX") {
      int a, b;
      ls >> a >> b;
      c.ops.push_back(Gate::cx(a, b));
    } else {
      throw std::runtime_error("circuit parse: unknown op '" + op + "'");
    }
    if (ls.fail()) throw std::runtime_error("circuit parse: malformed line '" + line + "'");
  }
  c.validate();
  return c;
}

Circuit transpile(int n_qubits, const std::vector<AbstractOp>& ops, bool measured) {
  Circuit circuit;
  circuit.n_qubits = n_qubits;
  circuit.measured = measured;
  NativeEmitter emit(circuit.ops);
  for (const auto& op : ops) {
    switch (op.kind) {
      case AbstractKind::RZ: emit.rz(op.q0, op.theta); break;
      case AbstractKind::RX: emit.rx(op.q0, op.theta); break;
      case AbstractKind::RY: emit.ry(op.q0, op.theta); break;
      case AbstractKind::H: emit.h(op.q0); break;
      case AbstractKind::X:
        emit.sx(op.q0);
        emit.sx(op.q0);
        break;
      case AbstractKind::CX: emit.cx(op.q0, op.q1); break;
      case AbstractKind::RZZ:
        emit.cx(op.q0, op.q1);
        emit.rz(op.q1, op.theta);
        emit.cx(op.q0, op.q1);
        break;
      default:
        throw std::invalid_argument("transpile: unsupported abstract gate");
    }
  }
  circuit.validate();
  return circuit;
}

}  // namespace qdaw::sim
