#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvnet/network.hpp"

namespace lvnet {

// ============================================================================
// Reports
// ============================================================================

/// Location of an extremal entry backing a certificate: (row, col) for matrix
/// entries, col = -1 for node-scoped and line-indexed witnesses.
struct Witness {
    int row = -1;
    int col = -1;
    double value = 0.0;
};

/// Outcome of one structural check. margin is the smallest slack of the
/// certified inequality (negative when violated, +inf when vacuous); holds is
/// margin measured against the check's own tolerance.
struct CertificateReport {
    std::string kind;
    bool holds = false;
    double margin = 0.0;
    std::vector<Witness> witnesses;
    std::string notes;
};

namespace detail {

inline void check_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw std::invalid_argument(std::string(what) + " requires a non-empty square matrix, got " +
                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace detail

// ============================================================================
// Matrix-structure certificates
// ============================================================================

/// Metzler test: every off-diagonal entry >= -tol. margin is the smallest
/// off-diagonal entry (+inf for 1x1); witnesses list the worst offenders.
[[nodiscard]] inline CertificateReport is_metzler(const Matrix& m, double tol = 1e-12) {
    detail::check_square(m, "is_metzler");
    CertificateReport rep;
    rep.kind = "metzler";
    rep.margin = detail::kInf;
    std::vector<Witness> offenders;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i == j) continue;
            const double v = m(i, j);
            rep.margin = std::min(rep.margin, v);
            if (v < -tol) offenders.push_back({static_cast<int>(i), static_cast<int>(j), v});
        }
    rep.holds = rep.margin >= -tol;
    std::sort(offenders.begin(), offenders.end(),
              [](const Witness& a, const Witness& b) { return a.value < b.value; });
    if (offenders.size() > 5) offenders.resize(5);
    rep.witnesses = std::move(offenders);
    rep.notes = "all off-diagonal entries >= -" + detail::format_double(tol);
    return rep;
}

/// Gershgorin-disc negative definiteness of the symmetric interaction
/// structure: every disc of Psi^c lies strictly in the open left half plane
/// regardless of the angles, because |B_{i,j}||cos| <= |B_{i,j}|. The
/// per-node slack |B_i| + k_i - sum_j |B_{i,j}| equals B_i^sh + k_i.
[[nodiscard]] inline CertificateReport gershgorin_negative_definite(const PowerNetwork& net,
                                                                    const Vector& k) {
    detail::check_dim(net, k, "gain vector");
    CertificateReport rep;
    rep.kind = "gershgorin";
    rep.margin = detail::kInf;
    int worst = 0;
    for (int i = 0; i < net.size(); ++i) {
        // |B_i| + k_i - sum_j |B_{i,j}| collapses to shunt + gain exactly.
        const double slack = net.node(i).shunt + k[i];
        if (slack < rep.margin) {
            rep.margin = slack;
            worst = i;
        }
    }
    rep.holds = rep.margin > 0.0;
    rep.witnesses.push_back({worst, -1, rep.margin});
    rep.notes = "worst disc at node '" + net.node(worst).id +
                "'; slack equals shunt + gain and must be strictly positive";
    return rep;
}

/// Hurwitz test on the full (possibly non-symmetric) matrix: all eigenvalues
/// with real part < -tol. margin = -max Re(lambda).
[[nodiscard]] inline CertificateReport hurwitz_check(const Matrix& m, double tol = 1e-9) {
    detail::check_square(m, "hurwitz_check");
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hurwitz_check: eigenvalue iteration failed to converge");
    CertificateReport rep;
    rep.kind = "hurwitz";
    double max_re = -detail::kInf;
    int worst = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double re = solver.eigenvalues()[i].real();
        if (re > max_re) {
            max_re = re;
            worst = static_cast<int>(i);
        }
    }
    rep.margin = -max_re;
    rep.holds = max_re < -tol;
    rep.witnesses.push_back({worst, -1, max_re});
    rep.notes = "max Re(lambda) = " + detail::format_double(max_re);
    return rep;
}

/// Cooperativity condition: G_{i,j}/|B_{i,j}| < cot(beta) on every line keeps
/// the coupled matrix Metzler for all relative angles in [-beta, beta].
/// beta = 0 holds vacuously (cot -> +inf). Requires 0 <= beta < pi/2.
[[nodiscard]] inline CertificateReport cooperativity_check(const PowerNetwork& net, double beta) {
    if (!(beta >= 0.0) || !(beta < 1.5707963267948966))
        throw std::invalid_argument("cooperativity_check: beta must lie in [0, pi/2), got " +
                                    detail::format_double(beta));
    const double cot_beta = beta == 0.0 ? detail::kInf : std::cos(beta) / std::sin(beta);
    CertificateReport rep;
    rep.kind = "cooperativity";
    rep.margin = detail::kInf;
    rep.holds = true;
    for (int e = 0; e < net.line_count(); ++e) {
        const Line& ln = net.lines()[e];
        const double ratio = ln.conductance / -ln.susceptance;
        const double slack = cot_beta - ratio;
        if (slack < rep.margin) {
            rep.margin = slack;
            rep.witnesses.assign(1, {ln.from, ln.to, ratio});
        }
        if (!(ratio < cot_beta)) rep.holds = false;
    }
    rep.notes = "conductance/|susceptance| must stay strictly below cot(beta) = " +
                (std::isfinite(cot_beta) ? detail::format_double(cot_beta) : std::string("inf"));
    return rep;
}

// ============================================================================
// Diagonal dissipativity
// ============================================================================

/// Result of the dissipativity search; scaling holds the diagonal witness D
/// when one was found.
struct DissipativityCertificate {
    CertificateReport report;
    std::optional<Vector> scaling;
};

namespace detail {

inline double sym_part_max_eigen(const Matrix& m, const Vector& d) {
    const Matrix md = m * d.asDiagonal();
    const Matrix sym = 0.5 * (md + md.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
}

inline void normalize_geomean(Vector& d) {
    double log_sum = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) log_sum += std::log(d[i]);
    d *= std::exp(-log_sum / static_cast<double>(d.size()));
}

}  // namespace detail

/// Search for a diagonal D > 0 with sym(M D) negative semidefinite.
///
/// Symmetric inputs are decided exactly (D = identity iff M itself is
/// negative semidefinite); a strictly positive diagonal entry of M is a proof
/// that no D exists. Otherwise a seeded coordinate-descent search over
/// diagonal scalings runs from 100 restarts; not finding a witness is
/// reported as "unknown" in the notes, distinct from a proven violation.
[[nodiscard]] inline DissipativityCertificate dissipativity_check(const Matrix& m,
                                                                  unsigned seed = 0x1d55u) {
    detail::check_square(m, "dissipativity_check");
    const Eigen::Index n = m.rows();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;

    DissipativityCertificate cert;
    CertificateReport& rep = cert.report;
    rep.kind = "dissipativity";

    const bool symmetric = (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale;
    if (symmetric) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
        const double lmax = solver.eigenvalues().maxCoeff();
        rep.margin = -lmax;
        rep.holds = lmax <= tol;
        rep.notes = rep.holds ? "symmetric input: D = identity certifies sym(Psi D) <= 0"
                              : "symmetric input that is not negative semidefinite admits no diagonal D";
        if (rep.holds) {
            cert.scaling = Vector::Ones(n);
            bool stable = true;
            for (Eigen::Index i = 0; i < n; ++i) stable = stable && m(i, i) < 0.0;
            if (stable) rep.notes += "; stably dissipative (all diagonal entries negative)";
        }
        return cert;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        if (m(i, i) > tol) {
            rep.holds = false;
            rep.margin = -m(i, i);
            rep.witnesses.push_back({static_cast<int>(i), static_cast<int>(i), m(i, i)});
            rep.notes = "violated: positive diagonal entry keeps sym(M D) indefinite for every D > 0";
            return cert;
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_range(std::log(1e-2), std::log(1e2));
    constexpr double kFactors[] = {4.0, 2.0, 1.25, 0.8, 0.5, 0.25};

    Vector best_d = Vector::Ones(n);
    double best = detail::sym_part_max_eigen(m, best_d);
    for (int restart = 0; restart < 100 && best > tol; ++restart) {
        Vector d(n);
        if (restart == 0) {
            d.setOnes();
        } else {
            for (Eigen::Index i = 0; i < n; ++i) d[i] = std::exp(log_range(rng));
            detail::normalize_geomean(d);
        }
        double current = detail::sym_part_max_eigen(m, d);
        for (int pass = 0; pass < 60; ++pass) {
            bool improved = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                for (double f : kFactors) {
                    Vector trial = d;
                    trial[i] *= f;
                    detail::normalize_geomean(trial);
                    const double value = detail::sym_part_max_eigen(m, trial);
                    if (value < current - 1e-14 * scale) {
                        current = value;
                        d = trial;
                        improved = true;
                    }
                }
            }
            if (!improved || current <= tol) break;
        }
        if (current < best) {
            best = current;
            best_d = d;
        }
    }

    rep.margin = -best;
    rep.holds = best <= tol;
    if (rep.holds) {
        cert.scaling = best_d;
        rep.notes = "diagonal witness found; checks the symmetric part of Psi D";
        bool stable = true;
        for (Eigen::Index i = 0; i < n; ++i) stable = stable && m(i, i) < 0.0;
        if (stable) rep.notes += "; stably dissipative (all diagonal entries negative)";
    } else {
        rep.notes = "unknown: best-effort diagonal search found no certificate (not a proof of failure); "
                    "best max-eigenvalue of sym(M D) was " + detail::format_double(best);
    }
    return cert;
}

// ============================================================================
// Equilibrium
// ============================================================================

struct EquilibriumResult {
    Vector v_bar;
    bool interior = false;
    double residual = 0.0;
};

/// Solve Psi^l v_bar = -b for the decoupled equilibrium. Requires the
/// Gershgorin certificate (which makes -Psi^l symmetric positive definite)
/// and a strictly positive drive.
[[nodiscard]] inline EquilibriumResult solve_equilibrium(const PowerNetwork& net, const Vector& k,
                                                         const Vector& v_star) {
    const CertificateReport gersh = gershgorin_negative_definite(net, k);
    if (!gersh.holds)
        throw std::runtime_error("solve_equilibrium: Gershgorin margin " + detail::format_double(gersh.margin) +
                                 " is not strictly positive; the decoupled system may be singular");
    const Vector b = drive_vector(k, v_star);
    if (!(b.array() > 0.0).all())
        throw std::invalid_argument("solve_equilibrium: the drive k_i V_i^* must be strictly positive");
    const Matrix psi_l = interaction_matrix_decoupled(net, k).entries;

    const Matrix a = -psi_l;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("solve_equilibrium: Cholesky factorization failed");
    Vector v_bar = llt.solve(b);
    v_bar += llt.solve(b - a * v_bar);  // one refinement step

    EquilibriumResult res;
    res.v_bar = v_bar;
    res.residual = (psi_l * v_bar + b).cwiseAbs().maxCoeff();
    const double tol = 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff());
    if (res.residual > tol)
        throw std::runtime_error("solve_equilibrium: residual " + detail::format_double(res.residual) +
                                 " exceeds tolerance " + detail::format_double(tol));
    res.interior = (v_bar.array() > 0.0).all();
    return res;
}

// ============================================================================
// Lyapunov functions and norms
// ============================================================================

/// Entropy-like Lyapunov value sum_i (V_i - vbar_i) - vbar_i (ln V_i - ln vbar_i).
/// Zero exactly at V = vbar, positive elsewhere in the open orthant.
[[nodiscard]] inline double lyapunov_entropy(const Vector& v, const Vector& v_bar) {
    if (v.size() != v_bar.size())
        throw std::invalid_argument("lyapunov_entropy: state and equilibrium sizes differ");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !(v_bar[i] > 0.0))
            throw std::domain_error("lyapunov_entropy: component " + std::to_string(i) +
                                    " is not strictly positive");
        sum += (v[i] - v_bar[i]) - v_bar[i] * (std::log(v[i]) - std::log(v_bar[i]));
    }
    return sum;
}

/// Entropy decay rate (V - vbar)^T Psi^l (V - vbar) along the decoupled flow
/// (unit time constants).
[[nodiscard]] inline double lyapunov_entropy_rate(const Vector& v, const Vector& v_bar,
                                                  const Matrix& psi_l) {
    detail::check_square(psi_l, "lyapunov_entropy_rate");
    if (v.size() != v_bar.size() || v.size() != psi_l.rows())
        throw std::invalid_argument("lyapunov_entropy_rate: dimension mismatch");
    const Vector d = v - v_bar;
    return d.dot(psi_l * d);
}

/// Derivative of the l1 norm along the drift-only flow: V^T Psi V. The skew
/// part contributes nothing, so only Psi^c enters the value.
[[nodiscard]] inline double lyapunov_l1_rate(const Vector& v, const Matrix& psi) {
    detail::check_square(psi, "lyapunov_l1_rate");
    if (v.size() != psi.rows()) throw std::invalid_argument("lyapunov_l1_rate: dimension mismatch");
    return v.dot(psi * v);
}

/// Homogeneous norm rho(x) = sum_i |x_i|^(1/r_i) with weights r_i in (0, 1).
[[nodiscard]] inline double homogeneous_norm(const Vector& x, const Vector& r) {
    if (x.size() != r.size()) throw std::invalid_argument("homogeneous_norm: dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(r[i] > 0.0) || !(r[i] < 1.0))
            throw std::invalid_argument("homogeneous_norm: weight " + std::to_string(i) +
                                        " must lie in (0, 1), got " + detail::format_double(r[i]));
        sum += std::pow(std::abs(x[i]), 1.0 / r[i]);
    }
    return sum;
}

}  // namespace lvnet
