#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lvnet/signals.hpp"

namespace lvnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ============================================================================
// Network description
// ============================================================================

/// One bus of the network together with its droop controller.
struct NodeParams {
    std::string id;
    double tau = 1.0;                 ///< voltage time constant, > 0
    double shunt = 0.0;               ///< shunt susceptance magnitude B_i^sh, >= 0
    double theta0 = 0.0;              ///< initial phase angle [rad]
    SignalSpec gain = SignalSpec::constant(1.0);       ///< droop gain k_i(t), > 0
    SignalSpec reference = SignalSpec::constant(1.0);  ///< voltage reference V_i*(t), > 0
    SignalSpec theta_perturbation = SignalSpec::constant(0.0);  ///< added to theta0
};

/// One transmission line between two buses, identified by node ids.
struct LineParams {
    std::string from;
    std::string to;
    double susceptance = 0.0;   ///< B_{i,j} <= 0 (strictly negative; 0 is rejected)
    double conductance = 0.0;   ///< G_{i,j} >= 0
};

/// Optional exogenous drive for one line's relative angle: the line's
/// theta_{i,j}(t) becomes (theta0_i - theta0_j) + signal(t), replacing the
/// nodal derivation for that line.
struct EdgeAngleOverride {
    std::string from;
    std::string to;
    SignalSpec signal;
};

/// A line after id resolution; angle_override is set when the relative angle
/// is driven directly instead of derived from nodal angles.
struct Line {
    int from = -1;
    int to = -1;
    double susceptance = 0.0;
    double conductance = 0.0;
    std::optional<SignalSpec> angle_override;
};

/// Validated, connected network with precomputed aggregates.
///
/// The per-node aggregate uses the magnitude convention
///   |B_i| = B_i^sh + sum_j |B_{i,j}|,
/// which is nonnegative by construction. The signed aggregate
/// B_i = B_i^sh + sum_j B_{i,j} can differ from -|B_i| whenever the shunt is
/// nonzero; build() records a warning for every node where the two
/// conventions diverge instead of silently picking one.
class PowerNetwork {
public:
    [[nodiscard]] static PowerNetwork build(std::vector<NodeParams> nodes,
                                            const std::vector<LineParams>& lines,
                                            const std::vector<EdgeAngleOverride>& overrides = {}) {
        PowerNetwork net;
        if (nodes.empty()) throw std::invalid_argument("network must contain at least one node");

        std::unordered_map<std::string, int> index;
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
            const NodeParams& nd = nodes[i];
            if (nd.id.empty()) throw std::invalid_argument("node " + std::to_string(i) + " has an empty id");
            if (!index.emplace(nd.id, i).second)
                throw std::invalid_argument("duplicate node id '" + nd.id + "'");
            if (!(nd.tau > 0.0))
                throw std::invalid_argument("node '" + nd.id + "': tau must be > 0, got " + detail::format_double(nd.tau));
            if (!(nd.shunt >= 0.0))
                throw std::invalid_argument("node '" + nd.id + "': shunt susceptance must be >= 0, got " +
                                            detail::format_double(nd.shunt));
            if (!std::isfinite(nd.theta0))
                throw std::invalid_argument("node '" + nd.id + "': theta0 must be finite");
            require_positive_valued(nd.gain, "node '" + nd.id + "': droop gain");
            require_positive_valued(nd.reference, "node '" + nd.id + "': voltage reference");
        }
        net.nodes_ = std::move(nodes);
        const int n = net.size();

        auto resolve = [&](const std::string& id, const std::string& what) {
            auto it = index.find(id);
            if (it == index.end())
                throw std::invalid_argument(what + " references unknown node '" + id + "'");
            return it->second;
        };

        std::unordered_map<long long, int> seen_pairs;
        auto pair_key = [n](int a, int b) {
            if (a > b) std::swap(a, b);
            return static_cast<long long>(a) * n + b;
        };

        for (std::size_t e = 0; e < lines.size(); ++e) {
            const LineParams& lp = lines[e];
            const std::string where = "line " + std::to_string(e) + " ('" + lp.from + "'-'" + lp.to + "')";
            Line ln;
            ln.from = resolve(lp.from, where);
            ln.to = resolve(lp.to, where);
            if (ln.from == ln.to) throw std::invalid_argument(where + " connects a node to itself");
            if (!seen_pairs.emplace(pair_key(ln.from, ln.to), static_cast<int>(e)).second)
                throw std::invalid_argument("duplicate line between '" + lp.from + "' and '" + lp.to + "'");
            if (!(lp.susceptance < 0.0))
                throw std::invalid_argument(where + ": susceptance must be < 0, got " +
                                            detail::format_double(lp.susceptance));
            if (!(lp.conductance >= 0.0))
                throw std::invalid_argument(where + ": conductance must be >= 0, got " +
                                            detail::format_double(lp.conductance));
            ln.susceptance = lp.susceptance;
            ln.conductance = lp.conductance;
            net.lines_.push_back(ln);
        }

        for (const EdgeAngleOverride& ov : overrides) {
            const int a = resolve(ov.from, "edge_angle_override");
            const int b = resolve(ov.to, "edge_angle_override");
            auto it = seen_pairs.find(pair_key(a, b));
            if (it == seen_pairs.end())
                throw std::invalid_argument("edge_angle_override targets nonexistent line '" + ov.from +
                                            "'-'" + ov.to + "'");
            Line& ln = net.lines_[it->second];
            if (ln.angle_override)
                throw std::invalid_argument("duplicate edge_angle_override for line '" + ov.from + "'-'" +
                                            ov.to + "'");
            // Overrides are defined relative to the line's stored orientation.
            SignalSpec sig = ov.signal;
            if (ln.from != a) {
                sig = sig.is_constant()
                          ? SignalSpec::constant(-sig.offset())
                          : SignalSpec::sinusoid(-sig.offset(), -sig.amplitude(), sig.angular_frequency(),
                                                 sig.phase());
            }
            ln.angle_override = sig;
        }

        net.finalize();
        return net;
    }

    [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
    [[nodiscard]] int line_count() const { return static_cast<int>(lines_.size()); }
    [[nodiscard]] const std::vector<NodeParams>& nodes() const { return nodes_; }
    [[nodiscard]] const NodeParams& node(int i) const { return nodes_.at(i); }
    [[nodiscard]] const std::vector<Line>& lines() const { return lines_; }

    [[nodiscard]] int node_index(const std::string& id) const {
        for (int i = 0; i < size(); ++i)
            if (nodes_[i].id == id) return i;
        throw std::invalid_argument("unknown node id '" + id + "'");
    }

    /// |B_i| = B_i^sh + sum_j |B_{i,j}| for every node.
    [[nodiscard]] const Vector& abs_b() const { return abs_b_; }
    /// Signed aggregate B_i = B_i^sh + sum_j B_{i,j} (diagnostic only).
    [[nodiscard]] const Vector& signed_b() const { return signed_b_; }
    /// Dense symmetric |B_{i,j}| matrix (0 where no line exists).
    [[nodiscard]] const Matrix& abs_b_matrix() const { return abs_b_matrix_; }
    [[nodiscard]] const Matrix& conductance_matrix() const { return g_matrix_; }
    [[nodiscard]] const Vector& tau() const { return tau_; }
    [[nodiscard]] const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

    [[nodiscard]] bool has_angle_overrides() const {
        for (const Line& ln : lines_)
            if (ln.angle_override) return true;
        return false;
    }

    /// Sign-convention notes collected at build time (empty when the signed
    /// and magnitude aggregates agree on every node).
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

private:
    void finalize() {
        const int n = size();
        abs_b_ = Vector::Zero(n);
        signed_b_ = Vector::Zero(n);
        tau_ = Vector::Zero(n);
        abs_b_matrix_ = Matrix::Zero(n, n);
        g_matrix_ = Matrix::Zero(n, n);
        neighbors_.assign(n, {});

        for (int i = 0; i < n; ++i) {
            abs_b_[i] = nodes_[i].shunt;
            signed_b_[i] = nodes_[i].shunt;
            tau_[i] = nodes_[i].tau;
        }
        for (const Line& ln : lines_) {
            const double mag = -ln.susceptance;
            abs_b_[ln.from] += mag;
            abs_b_[ln.to] += mag;
            signed_b_[ln.from] += ln.susceptance;
            signed_b_[ln.to] += ln.susceptance;
            abs_b_matrix_(ln.from, ln.to) = mag;
            abs_b_matrix_(ln.to, ln.from) = mag;
            g_matrix_(ln.from, ln.to) = ln.conductance;
            g_matrix_(ln.to, ln.from) = ln.conductance;
            neighbors_[ln.from].push_back(ln.to);
            neighbors_[ln.to].push_back(ln.from);
        }

        if (n > 1) {
            std::vector<char> visited(n, 0);
            std::queue<int> frontier;
            frontier.push(0);
            visited[0] = 1;
            int reached = 1;
            while (!frontier.empty()) {
                const int u = frontier.front();
                frontier.pop();
                for (int v : neighbors_[u])
                    if (!visited[v]) {
                        visited[v] = 1;
                        ++reached;
                        frontier.push(v);
                    }
            }
            if (reached != n) {
                for (int i = 0; i < n; ++i)
                    if (!visited[i])
                        throw std::invalid_argument("network is not connected: node '" + nodes_[i].id +
                                                    "' is unreachable from node '" + nodes_[0].id + "'");
            }
        }

        for (int i = 0; i < n; ++i) {
            if (nodes_[i].shunt > 0.0) {
                std::string w = "node '" + nodes_[i].id + "': magnitude aggregate |B_i|=" +
                                detail::format_double(abs_b_[i]) + " and signed aggregate B_i=" +
                                detail::format_double(signed_b_[i]) +
                                " diverge (shunt " + detail::format_double(nodes_[i].shunt) + ")";
                if (signed_b_[i] > 0.0)
                    w += "; signed B_i > 0 violates the B_i <= 0 modeling assumption";
                warnings_.push_back(std::move(w));
            }
        }
    }

    std::vector<NodeParams> nodes_;
    std::vector<Line> lines_;
    Vector abs_b_;
    Vector signed_b_;
    Vector tau_;
    Matrix abs_b_matrix_;
    Matrix g_matrix_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::string> warnings_;
};

// ============================================================================
// Interaction matrices
// ============================================================================

/// Dense interaction matrix Psi together with the data it was built from.
///
/// For kind == coupled the symmetric and skew parts are cached at assembly
/// time from the shared subterms |B_{i,j}|cos(theta_ij) and
/// G_{i,j}sin(theta_ij), so split_parts() can return pieces whose entrywise
/// sum reproduces `entries` exactly (the entries were formed as that sum).
struct InteractionMatrix {
    enum class Kind { coupled, symmetric_part, skew_part, decoupled };

    Matrix entries;
    Kind kind = Kind::coupled;
    std::optional<Vector> theta_used;  ///< nodal angles, when derived from them
    Vector k_used;

    std::optional<Matrix> sym_entries;
    std::optional<Matrix> skew_entries;
};

namespace detail {

inline void check_gains(const PowerNetwork& net, const Vector& k) {
    if (k.size() != net.size())
        throw std::invalid_argument("gain vector has size " + std::to_string(k.size()) +
                                    ", expected " + std::to_string(net.size()));
    for (int i = 0; i < net.size(); ++i)
        if (!(k[i] > 0.0))
            throw std::invalid_argument("node '" + net.node(i).id + "': droop gain must be > 0, got " +
                                        detail::format_double(k[i]));
}

inline void check_dim(const PowerNetwork& net, const Vector& v, const char* what) {
    if (v.size() != net.size())
        throw std::invalid_argument(std::string(what) + " has size " + std::to_string(v.size()) +
                                    ", expected " + std::to_string(net.size()));
}

}  // namespace detail

/// Per-line relative angles theta_{i,j} = theta_i - theta_j in line order.
[[nodiscard]] inline Vector relative_angles(const PowerNetwork& net, const Vector& theta) {
    detail::check_dim(net, theta, "angle vector");
    Vector rel(net.line_count());
    for (int e = 0; e < net.line_count(); ++e)
        rel[e] = theta[net.lines()[e].from] - theta[net.lines()[e].to];
    return rel;
}

/// Coupled interaction matrix from per-line relative angles:
///   Psi_ii = -(|B_i| + k_i),
///   Psi_ij = G_{i,j} sin(theta_ij) + |B_{i,j}| cos(theta_ij) for lines (i,j).
/// The same expression evaluated with theta_ji = -theta_ij produces the lower
/// triangle, flipping the sign of the conductance term only.
[[nodiscard]] inline InteractionMatrix interaction_matrix_coupled_edges(const PowerNetwork& net,
                                                                        const Vector& theta_rel,
                                                                        const Vector& k) {
    detail::check_gains(net, k);
    if (theta_rel.size() != net.line_count())
        throw std::invalid_argument("relative-angle vector has size " + std::to_string(theta_rel.size()) +
                                    ", expected one entry per line (" + std::to_string(net.line_count()) + ")");
    const int n = net.size();
    InteractionMatrix m;
    m.kind = InteractionMatrix::Kind::coupled;
    m.k_used = k;
    m.entries = Matrix::Zero(n, n);
    Matrix sym = Matrix::Zero(n, n);
    Matrix skew = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double d = -(net.abs_b()[i] + k[i]);
        m.entries(i, i) = d;
        sym(i, i) = d;
    }
    for (int e = 0; e < net.line_count(); ++e) {
        const Line& ln = net.lines()[e];
        const double c = (-ln.susceptance) * std::cos(theta_rel[e]);
        const double s = ln.conductance * std::sin(theta_rel[e]);
        sym(ln.from, ln.to) = c;
        sym(ln.to, ln.from) = c;
        skew(ln.from, ln.to) = s;
        skew(ln.to, ln.from) = -s;
        m.entries(ln.from, ln.to) = s + c;
        m.entries(ln.to, ln.from) = -s + c;
    }
    m.sym_entries = std::move(sym);
    m.skew_entries = std::move(skew);
    return m;
}

/// Coupled interaction matrix Psi(theta) from nodal angles.
[[nodiscard]] inline InteractionMatrix interaction_matrix_coupled(const PowerNetwork& net,
                                                                  const Vector& theta, const Vector& k) {
    InteractionMatrix m = interaction_matrix_coupled_edges(net, relative_angles(net, theta), k);
    m.theta_used = theta;
    return m;
}

/// Split a coupled matrix into (symmetric part Psi^c, skew part Psi^s).
/// Psi^c carries the diagonal and the |B_{i,j}|cos terms, Psi^s the
/// +/-G_{i,j}sin terms; their entrywise sum reproduces the input exactly.
[[nodiscard]] inline std::pair<InteractionMatrix, InteractionMatrix> split_parts(
    const InteractionMatrix& m) {
    if (m.kind != InteractionMatrix::Kind::coupled)
        throw std::invalid_argument("split_parts requires a coupled interaction matrix");
    if (!m.sym_entries || !m.skew_entries)
        throw std::invalid_argument("coupled interaction matrix is missing its cached parts");
    InteractionMatrix sym;
    sym.entries = *m.sym_entries;
    sym.kind = InteractionMatrix::Kind::symmetric_part;
    sym.theta_used = m.theta_used;
    sym.k_used = m.k_used;
    InteractionMatrix skew;
    skew.entries = *m.skew_entries;
    skew.kind = InteractionMatrix::Kind::skew_part;
    skew.theta_used = m.theta_used;
    skew.k_used = m.k_used;
    return {std::move(sym), std::move(skew)};
}

/// Decoupled (lossless, zero-angle) interaction matrix Psi^l:
/// diagonal -(|B_i| + k_i), off-diagonal |B_{i,j}|. Symmetric Metzler.
[[nodiscard]] inline InteractionMatrix interaction_matrix_decoupled(const PowerNetwork& net,
                                                                    const Vector& k) {
    detail::check_gains(net, k);
    const int n = net.size();
    InteractionMatrix m;
    m.kind = InteractionMatrix::Kind::decoupled;
    m.k_used = k;
    m.entries = net.abs_b_matrix();
    for (int i = 0; i < n; ++i) m.entries(i, i) = -(net.abs_b()[i] + k[i]);
    return m;
}

/// Constant drive b_i = k_i * V_i^*.
[[nodiscard]] inline Vector drive_vector(const Vector& k, const Vector& v_star) {
    if (k.size() != v_star.size())
        throw std::invalid_argument("gain and reference vectors must have equal size");
    return k.cwiseProduct(v_star);
}

/// Raw Lotka-Volterra right-hand side diag(tau)^-1 diag(V) (Psi V + b).
/// Component i is exactly zero whenever V_i is exactly zero.
[[nodiscard]] inline Vector lotka_volterra_rhs(const Vector& tau, const Vector& V, const Matrix& psi,
                                               const Vector& b) {
    return (V.array() * (psi * V + b).array() / tau.array()).matrix();
}

/// Full vector field dV/dt for state V, nodal angles theta, gains k and
/// references v_star.
[[nodiscard]] inline Vector vector_field(const PowerNetwork& net, const Vector& V, const Vector& theta,
                                         const Vector& k, const Vector& v_star) {
    detail::check_dim(net, V, "state vector");
    detail::check_dim(net, v_star, "reference vector");
    const InteractionMatrix psi = interaction_matrix_coupled(net, theta, k);
    return lotka_volterra_rhs(net.tau(), V, psi.entries, drive_vector(k, v_star));
}

/// AC reactive power injection at every node:
///   Q_i = -B_i V_i^2 + sum_j (B_{i,j} V_i V_j cos(theta_ij)
///                             - G_{i,j} V_i V_j sin(theta_ij)),
/// with the signed aggregate B_i = B_i^sh + sum_j B_{i,j}.
[[nodiscard]] inline Vector reactive_power(const PowerNetwork& net, const Vector& V, const Vector& theta) {
    detail::check_dim(net, V, "voltage vector");
    detail::check_dim(net, theta, "angle vector");
    Vector q(net.size());
    for (int i = 0; i < net.size(); ++i) q[i] = -net.signed_b()[i] * V[i] * V[i];
    for (const Line& ln : net.lines()) {
        const double d = theta[ln.from] - theta[ln.to];
        const double vv = V[ln.from] * V[ln.to];
        q[ln.from] += ln.susceptance * vv * std::cos(d) - ln.conductance * vv * std::sin(d);
        q[ln.to] += ln.susceptance * vv * std::cos(-d) - ln.conductance * vv * std::sin(-d);
    }
    return q;
}

}  // namespace lvnet
