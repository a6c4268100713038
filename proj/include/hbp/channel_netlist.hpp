#pragma once

// Builds the MNA netlist of the body channel so every closed form in
// `channel` can be checked against a brute-force circuit solve.

#include "hbp/acnet.hpp"
#include "hbp/channel.hpp"

#include <string>
#include <vector>

namespace hbp::acnet {

/// Element names used by the channel builders.
namespace names {
inline constexpr const char* kSource = "V_IN";
inline constexpr const char* kSourceR = "R_S";
inline constexpr const char* kBodyR = "R_B";
inline constexpr const char* kBodyC = "C_B";
inline constexpr const char* kTxReturn = "C_ret_tx";
}  // namespace names

struct ChannelNodes {
    NodeId body{kGround};
    NodeId output{kGround};
    NodeId floating_ground{kGround};
};

namespace detail {

/// Adds the source side (transmitter, R_S, R_B, C_B) and returns the body node.
inline NodeId add_source_side(Netlist& net, const channel::SourceModel& src, const channel::BodyModel& body) {
    src.validate();
    body.validate();
    const NodeId body_node = net.add_node();
    net.add(capacitor(names::kBodyC, body_node, kGround, body.c_b));

    NodeId drive = body_node;
    if (body.r_b > 0.0) {
        drive = net.add_node();
        net.add(resistor(names::kBodyR, drive, body_node, body.r_b));
    }

    const double v_rms = src.v_in_rms();
    if (const auto* g = std::get_if<channel::GroundedTx>(&src.variant)) {
        NodeId plus = drive;
        if (g->r_s > 0.0) {
            plus = net.add_node();
            net.add(resistor(names::kSourceR, plus, drive, g->r_s));
        }
        net.add(voltage_source(names::kSource, plus, kGround, v_rms));
        return body_node;
    }

    // Wearable: the source floats between the body contact and its own
    // ground plate, which couples to earth through C_ret_tx.
    double amplitude = v_rms;
    double c_ret_tx = 0.0;
    if (const auto* w = std::get_if<channel::WearableTx>(&src.variant)) {
        c_ret_tx = w->c_ret_tx;
    } else {
        const auto& r = std::get<channel::ResonantWearableTx>(src.variant);
        c_ret_tx = r.c_ret_tx;
        // Equivalent drive whose unloaded divider output equals Q V C_ret_tx / C_B.
        amplitude = v_rms * r.q * (body.c_b + c_ret_tx) / body.c_b;
    }
    const NodeId tx_ground = net.add_node();
    net.add(capacitor(names::kTxReturn, tx_ground, kGround, c_ret_tx));
    net.add(voltage_source(names::kSource, drive, tx_ground, amplitude));
    return body_node;
}

/// Adds a receiver branch hanging off `body_node`; element names get `suffix`.
inline ChannelNodes add_receiver(Netlist& net, const channel::ReceiverParams& rx, NodeId body_node,
                                 const std::string& suffix) {
    rx.validate();
    ChannelNodes nodes;
    nodes.body = body_node;

    NodeId cursor = body_node;
    if (rx.r_s > 0.0) {
        const NodeId next = net.add_node();
        net.add(resistor("r_s" + suffix, cursor, next, rx.r_s));
        cursor = next;
    }
    if (rx.l > 0.0) {
        const NodeId next = net.add_node();
        net.add(inductor("L" + suffix, cursor, next, rx.l));
        cursor = next;
    }
    nodes.output = cursor;
    nodes.floating_ground = net.add_node();
    net.add(resistor("R_L" + suffix, nodes.output, nodes.floating_ground, rx.r_l));
    if (rx.c_l > 0.0) net.add(capacitor("C_L" + suffix, nodes.output, nodes.floating_ground, rx.c_l));
    if (rx.c_gb > 0.0) net.add(capacitor("C_GB" + suffix, nodes.floating_ground, body_node, rx.c_gb));
    net.add(capacitor("C_ret" + suffix, nodes.floating_ground, kGround, rx.c_ret));
    return nodes;
}

}  // namespace detail

/// Canonical channel network: transmitter -> R_S -> R_B -> body node (C_B to
/// earth) -> r_s -> L -> load (R_L || C_L) -> floating ground, with C_GB back
/// to the body and C_ret to earth. The probe reads the load voltage.
/// Zero-valued optional elements are omitted: resistors become shorts,
/// capacitors become opens.
[[nodiscard]] inline Netlist build_channel_netlist(const channel::ReceiverParams& rx,
                                                   const channel::SourceModel& src,
                                                   const channel::BodyModel& body,
                                                   ChannelNodes* nodes_out = nullptr) {
    Netlist net;
    const NodeId body_node = detail::add_source_side(net, src, body);
    const ChannelNodes nodes = detail::add_receiver(net, rx, body_node, "");
    net.set_probe({nodes.output, nodes.floating_ground});
    if (nodes_out) *nodes_out = nodes;
    return net;
}

/// Receiver-only network driven by an ideal source at the body node, for
/// checking V_o / V_B directly.
[[nodiscard]] inline Netlist build_receiver_netlist(const channel::ReceiverParams& rx, double v_b_rms = 1.0) {
    Netlist net;
    const NodeId body_node = net.add_node();
    net.add(voltage_source(names::kSource, body_node, kGround, v_b_rms));
    const ChannelNodes nodes = detail::add_receiver(net, rx, body_node, "");
    net.set_probe({nodes.output, nodes.floating_ground});
    return net;
}

struct MultiReceiverNetlist {
    Netlist netlist;
    NodeId body{kGround};
    std::vector<Probe> probes;
};

/// All receivers share one body node. Receiver k's elements carry suffix `#k`.
[[nodiscard]] inline MultiReceiverNetlist build_multi_receiver_netlist(
    const std::vector<channel::ReceiverParams>& receivers, const channel::SourceModel& src,
    const channel::BodyModel& body) {
    MultiReceiverNetlist out;
    out.body = detail::add_source_side(out.netlist, src, body);
    for (std::size_t k = 0; k < receivers.size(); ++k) {
        const auto nodes = detail::add_receiver(out.netlist, receivers[k], out.body, "#" + std::to_string(k));
        out.probes.push_back({nodes.output, nodes.floating_ground});
    }
    if (!out.probes.empty()) out.netlist.set_probe(out.probes.front());
    return out;
}

}  // namespace hbp::acnet
