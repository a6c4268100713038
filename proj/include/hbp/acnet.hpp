#pragma once

// Linear AC network solver: complex modified nodal analysis over R, L, C and
// independent voltage sources. Networks in this project have a handful of
// nodes, so the system is assembled densely and solved with partial pivoting.

#include "hbp/errors.hpp"
#include "hbp/units.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hbp::acnet {

using NodeId = int;
inline constexpr NodeId kGround = 0;

enum class ElementKind { Resistor, Capacitor, Inductor, VoltageSource };

[[nodiscard]] inline std::string_view to_string(ElementKind k) noexcept {
    switch (k) {
    case ElementKind::Resistor: return "R";
    case ElementKind::Capacitor: return "C";
    case ElementKind::Inductor: return "L";
    case ElementKind::VoltageSource: return "V";
    }
    return "?";
}

/// Two-terminal element. For a voltage source `value` is the rms amplitude and
/// `phase` its phase in radians; V(node_a) - V(node_b) equals the phasor.
struct Element {
    ElementKind kind{ElementKind::Resistor};
    NodeId node_a{kGround};
    NodeId node_b{kGround};
    double value{0.0};
    double phase{0.0};
    std::string name;

    [[nodiscard]] Complex phasor() const { return std::polar(value, phase); }
};

[[nodiscard]] inline Element resistor(std::string name, NodeId a, NodeId b, double ohm) {
    return {ElementKind::Resistor, a, b, ohm, 0.0, std::move(name)};
}
[[nodiscard]] inline Element capacitor(std::string name, NodeId a, NodeId b, double farad) {
    return {ElementKind::Capacitor, a, b, farad, 0.0, std::move(name)};
}
[[nodiscard]] inline Element inductor(std::string name, NodeId a, NodeId b, double henry) {
    return {ElementKind::Inductor, a, b, henry, 0.0, std::move(name)};
}
[[nodiscard]] inline Element voltage_source(std::string name, NodeId plus, NodeId minus,
                                            double volt_rms, double phase = 0.0) {
    return {ElementKind::VoltageSource, plus, minus, volt_rms, phase, std::move(name)};
}

/// Impedance of a passive element at frequency `f_hz`.
[[nodiscard]] inline Complex impedance(const Element& e, double f_hz) {
    require_positive_frequency(f_hz);
    const double w = angular(f_hz);
    switch (e.kind) {
    case ElementKind::Resistor:
        return {e.value, 0.0};
    case ElementKind::Capacitor:
        if (e.value == 0.0) {
            throw SingularElementError("capacitor '" + e.name + "' has zero capacitance (open circuit)");
        }
        return 1.0 / Complex(0.0, w * e.value);
    case ElementKind::Inductor:
        return {0.0, w * e.value};
    case ElementKind::VoltageSource:
        break;
    }
    throw MisuseError("impedance: element '" + e.name + "' is a source");
}

/// Ordered pair of nodes whose voltage difference is reported.
struct Probe {
    NodeId plus{kGround};
    NodeId minus{kGround};
};

class Netlist {
public:
    Netlist() = default;

    /// Declares node ids 1..n-1 in addition to ground.
    explicit Netlist(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {
        if (std::find(nodes_.begin(), nodes_.end(), kGround) == nodes_.end()) {
            nodes_.insert(nodes_.begin(), kGround);
        }
        std::sort(nodes_.begin(), nodes_.end());
        nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    }

    NodeId add_node() {
        const NodeId id = nodes_.empty() ? 1 : nodes_.back() + 1;
        if (nodes_.empty()) nodes_.push_back(kGround);
        nodes_.push_back(id);
        return id;
    }

    Netlist& add(Element e) {
        require_node(e.node_a);
        require_node(e.node_b);
        if (e.node_a == e.node_b) {
            throw DomainError("element '" + e.name + "' connects node " + std::to_string(e.node_a) +
                              " to itself");
        }
        if (e.kind != ElementKind::VoltageSource && !(e.value > 0.0)) {
            if (e.kind == ElementKind::Capacitor && e.value == 0.0) {
                throw SingularElementError("capacitor '" + e.name + "' has zero capacitance");
            }
            throw DomainError("element '" + e.name + "' must have a positive value");
        }
        elements_.push_back(std::move(e));
        return *this;
    }

    Netlist& set_probe(Probe p) {
        require_node(p.plus);
        require_node(p.minus);
        probe_ = p;
        return *this;
    }

    [[nodiscard]] const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<Element>& elements() const noexcept { return elements_; }
    [[nodiscard]] Probe probe() const noexcept { return probe_; }

    [[nodiscard]] const Element* find(std::string_view name) const {
        for (const auto& e : elements_) {
            if (e.name == name) return &e;
        }
        return nullptr;
    }

    /// Index of `id` among the non-ground unknowns.
    [[nodiscard]] int unknown_index(NodeId id) const {
        if (id == kGround) return -1;
        const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
        return static_cast<int>(it - nodes_.begin()) - 1;
    }

    /// Throws when the netlist is not solvable as stated: no source, or a
    /// node not reachable from ground through elements.
    void validate() const {
        const bool has_source = std::any_of(elements_.begin(), elements_.end(), [](const Element& e) {
            return e.kind == ElementKind::VoltageSource;
        });
        if (!has_source) throw DomainError("netlist has no voltage source");

        std::map<NodeId, NodeId> parent;
        for (NodeId n : nodes_) parent[n] = n;
        auto root = [&](NodeId n) {
            while (parent[n] != n) n = parent[n] = parent[parent[n]];
            return n;
        };
        for (const auto& e : elements_) parent[root(e.node_a)] = root(e.node_b);
        for (NodeId n : nodes_) {
            if (root(n) != root(kGround)) {
                throw SingularNetworkError("node " + std::to_string(n) + " is not connected to ground", n);
            }
        }
    }

    /// Debug rendering, one element per line: `KIND node_a node_b value`.
    [[nodiscard]] std::string render() const {
        std::ostringstream os;
        os.precision(6);
        for (const auto& e : elements_) {
            os << to_string(e.kind) << ' ' << e.node_a << ' ' << e.node_b << ' ' << e.value << '\n';
        }
        return os.str();
    }

private:
    void require_node(NodeId id) const {
        if (!std::binary_search(nodes_.begin(), nodes_.end(), id)) {
            throw DomainError("node " + std::to_string(id) + " is not declared");
        }
    }

    std::vector<NodeId> nodes_{kGround};
    std::vector<Element> elements_;
    Probe probe_{};
};

inline std::ostream& operator<<(std::ostream& os, const Netlist& n) { return os << n.render(); }

struct SolveResult {
    double frequency{0.0};
    std::map<NodeId, Complex> node_voltages;
    /// Current delivered by each voltage source, flowing out of its `+`
    /// terminal into the network. Indexed in element order of sources.
    std::vector<Complex> source_currents;
    Complex probe_voltage{};

    [[nodiscard]] Complex voltage(NodeId id) const {
        if (id == kGround) return {};
        return node_voltages.at(id);
    }

    [[nodiscard]] Complex source_current() const {
        return source_currents.empty() ? Complex{} : source_currents.front();
    }

    /// Current through a passive element from node_a to node_b.
    [[nodiscard]] Complex branch_current(const Element& e) const {
        return (voltage(e.node_a) - voltage(e.node_b)) / impedance(e, frequency);
    }
};

namespace detail {

/// Dense Gaussian elimination with partial pivoting, in place. Returns the
/// index of the first column whose pivot is (numerically) zero, or -1.
inline int solve_dense(std::vector<Complex>& a, std::vector<Complex>& b, std::size_t n) {
    double scale = 0.0;
    for (const auto& v : a) scale = std::max(scale, std::abs(v));
    const double tiny = scale * 1e-14;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(a[k * n + k]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double m = std::abs(a[r * n + k]);
            if (m > best) {
                best = m;
                piv = r;
            }
        }
        if (!(best > tiny)) return static_cast<int>(k);
        if (piv != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
            std::swap(b[k], b[piv]);
        }
        const Complex inv = 1.0 / a[k * n + k];
        for (std::size_t r = k + 1; r < n; ++r) {
            const Complex factor = a[r * n + k] * inv;
            if (factor == Complex{}) continue;
            for (std::size_t c = k; c < n; ++c) a[r * n + c] -= factor * a[k * n + c];
            b[r] -= factor * b[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        Complex acc = b[k];
        for (std::size_t c = k + 1; c < n; ++c) acc -= a[k * n + c] * b[c];
        b[k] = acc / a[k * n + k];
    }
    return -1;
}

}  // namespace detail

/// Solves the network at frequency `f_hz`.
[[nodiscard]] inline SolveResult solve(const Netlist& net, double f_hz) {
    require_positive_frequency(f_hz);
    net.validate();

    const auto& nodes = net.nodes();
    const std::size_t n_nodes = nodes.size() - 1;
    std::vector<std::size_t> sources;
    for (std::size_t i = 0; i < net.elements().size(); ++i) {
        if (net.elements()[i].kind == ElementKind::VoltageSource) sources.push_back(i);
    }
    const std::size_t n = n_nodes + sources.size();
    std::vector<Complex> a(n * n);
    std::vector<Complex> rhs(n);
    auto at = [&](int r, int c) -> Complex& { return a[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)]; };

    std::size_t src_row = n_nodes;
    for (const auto& e : net.elements()) {
        const int ia = net.unknown_index(e.node_a);
        const int ib = net.unknown_index(e.node_b);
        if (e.kind == ElementKind::VoltageSource) {
            const int k = static_cast<int>(src_row++);
            // Unknown is the current entering the + terminal from the network.
            if (ia >= 0) { at(ia, k) += 1.0; at(k, ia) += 1.0; }
            if (ib >= 0) { at(ib, k) -= 1.0; at(k, ib) -= 1.0; }
            rhs[static_cast<std::size_t>(k)] = e.phasor();
            continue;
        }
        const Complex y = 1.0 / impedance(e, f_hz);
        if (ia >= 0) at(ia, ia) += y;
        if (ib >= 0) at(ib, ib) += y;
        if (ia >= 0 && ib >= 0) {
            at(ia, ib) -= y;
            at(ib, ia) -= y;
        }
    }

    const int bad = detail::solve_dense(a, rhs, n);
    if (bad >= 0) {
        const auto col = static_cast<std::size_t>(bad);
        const NodeId node = col < n_nodes ? nodes[col + 1] : -1;
        throw SingularNetworkError(
            col < n_nodes ? "singular network at node " + std::to_string(node)
                          : "singular network: source '" + net.elements()[sources[col - n_nodes]].name +
                                "' is shorted or in a source loop",
            node);
    }

    SolveResult out;
    out.frequency = f_hz;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        if (!is_finite(rhs[i])) {
            throw SingularNetworkError("non-finite voltage at node " + std::to_string(nodes[i + 1]),
                                       nodes[i + 1]);
        }
        out.node_voltages[nodes[i + 1]] = rhs[i];
    }
    for (std::size_t s = 0; s < sources.size(); ++s) out.source_currents.push_back(-rhs[n_nodes + s]);
    out.probe_voltage = out.voltage(net.probe().plus) - out.voltage(net.probe().minus);
    return out;
}

/// Largest |sum of currents leaving| over non-ground nodes, and the largest
/// branch-current magnitude, for KCL auditing.
struct KclAudit {
    double max_residual{0.0};
    double max_branch_current{0.0};
};

[[nodiscard]] inline KclAudit kcl_audit(const Netlist& net, const SolveResult& sol) {
    std::map<NodeId, Complex> leaving;
    KclAudit audit;
    std::size_t s = 0;
    for (const auto& e : net.elements()) {
        Complex i_ab;
        if (e.kind == ElementKind::VoltageSource) {
            // Source current flows out of + into the network, i.e. b -> a inside.
            i_ab = -sol.source_currents.at(s++);
        } else {
            i_ab = sol.branch_current(e);
        }
        audit.max_branch_current = std::max(audit.max_branch_current, std::abs(i_ab));
        leaving[e.node_a] += i_ab;
        leaving[e.node_b] -= i_ab;
    }
    for (const auto& [node, sum] : leaving) {
        if (node != kGround) audit.max_residual = std::max(audit.max_residual, std::abs(sum));
    }
    return audit;
}

/// Solves at every frequency in `freqs` (strictly increasing, positive).
[[nodiscard]] inline std::vector<SolveResult> sweep(const Netlist& net, const std::vector<double>& freqs) {
    if (freqs.empty()) throw DomainError("sweep: frequency list is empty");
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        require_positive_frequency(freqs[i]);
        if (i > 0 && !(freqs[i] > freqs[i - 1])) {
            throw DomainError("sweep: frequencies must be strictly increasing");
        }
    }
    std::vector<SolveResult> rows;
    rows.reserve(freqs.size());
    for (double f : freqs) {
        try {
            rows.push_back(solve(net, f));
        } catch (const SingularNetworkError& e) {
            std::ostringstream msg;
            msg << e.what() << " (at f = " << f << " Hz)";
            throw SingularNetworkError(msg.str(), e.node());
        }
    }
    return rows;
}

}  // namespace hbp::acnet
