#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "bifurcata/crossing.hpp"
#include "bifurcata/reduction.hpp"

namespace bifurcata {

// ---------------------------------------------------------------- sweep

inline Vector eigenvalues_at(const PotentialFamily& family, double lambda) {
    const Matrix b = family.hessian_at_zero(scalar_param(lambda));
    Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

namespace detail {

inline int negative_count(const Vector& e) {
    return static_cast<int>((e.array() < 0.0).count());
}

inline double smallest_abs(const Vector& e) { return e.size() == 0 ? 0.0 : e.cwiseAbs().minCoeff(); }

/// Root of the k-th ascending eigenvalue inside [lo, hi], given a sign change.
inline double refine_crossing(const PotentialFamily& family, int k, double lo, double hi) {
    auto f = [&](double l) { return eigenvalues_at(family, l)(k); };
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) return 0.5 * (lo + hi);
    boost::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(a)); };
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

} // namespace detail

/// Parameter values in [a, b] where B_λ(0) is singular. Sign changes of the
/// ascending eigenvalues between grid points are refined by bracketing; local
/// minima of the smallest |eigenvalue| are refined by Brent minimization and
/// kept when that minimum is null under ε_null.
inline std::vector<double> sweep_candidates(const PotentialFamily& family, double a, double b, int steps,
                                            double eps_null = 0.0) {
    if (family.dim_param != 1) throw ArgumentError("sweeps need a one-parameter family");
    if (!(a < b)) throw ArgumentError("sweep range must satisfy a < b");
    if (steps < 2) throw ArgumentError("sweep needs at least 2 steps");

    std::vector<double> grid(static_cast<std::size_t>(steps + 1));
    std::vector<Vector> eig(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = i + 1 == grid.size() ? b : a + (b - a) * static_cast<double>(i) / steps;
        eig[i] = eigenvalues_at(family, grid[i]);
    }
    auto null_tol = [&](const Vector& e) {
        return eps_null > 0.0 ? eps_null : 1e-8 * (1.0 + (e.size() ? e.cwiseAbs().maxCoeff() : 0.0));
    };

    std::vector<double> found;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const int m0 = detail::negative_count(eig[i]);
        const int m1 = detail::negative_count(eig[i + 1]);
        for (int k = std::min(m0, m1); k < std::max(m0, m1); ++k) {
            found.push_back(detail::refine_crossing(family, k, grid[i], grid[i + 1]));
        }
    }

    const double width = (b - a) / 1e6;
    auto near_existing = [&](double l) {
        return std::any_of(found.begin(), found.end(), [&](double f) { return std::abs(f - l) <= width; });
    };
    const auto n = grid.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = detail::smallest_abs(eig[i]);
        const bool left_ok = i == 0 || g <= detail::smallest_abs(eig[i - 1]);
        const bool right_ok = i + 1 == n || g <= detail::smallest_abs(eig[i + 1]);
        if (!left_ok || !right_ok) continue;
        const double lo = grid[i == 0 ? 0 : i - 1];
        const double hi = grid[i + 1 == n ? n - 1 : i + 1];
        auto objective = [&](double l) { return detail::smallest_abs(eigenvalues_at(family, l)); };
        boost::uintmax_t iters = 200;
        const auto r = boost::math::tools::brent_find_minima(objective, lo, hi, std::numeric_limits<double>::digits, iters);
        if (r.second <= null_tol(eigenvalues_at(family, r.first)) && !near_existing(r.first)) found.push_back(r.first);
    }

    std::sort(found.begin(), found.end());
    std::vector<double> out;
    for (double l : found) {
        if (out.empty() || l - out.back() > width) out.push_back(l);
    }
    return out;
}

/// Ascending eigenvalues of B_λ(0) on the sweep grid, for trajectory output.
inline std::vector<std::pair<double, Vector>> eigenvalue_trajectory(const PotentialFamily& family, double a, double b,
                                                                    int steps) {
    std::vector<std::pair<double, Vector>> rows;
    for (int i = 0; i <= steps; ++i) {
        const double l = i == steps ? b : a + (b - a) * static_cast<double>(i) / steps;
        rows.emplace_back(l, eigenvalues_at(family, l));
    }
    return rows;
}

// ---------------------------------------------------------------- Morse jump

enum class JumpTag { LeftLow_RightHigh, LeftHigh_RightLow, Other };

inline std::string to_string(JumpTag t) {
    switch (t) {
    case JumpTag::LeftLow_RightHigh: return "LeftLow_RightHigh";
    case JumpTag::LeftHigh_RightLow: return "LeftHigh_RightLow";
    default: return "Other";
    }
}

struct MorseJumpPattern {
    double lambda_star = 0.0;
    int mu_star = 0;
    int nu_star = 0;
    int mu_left = 0;  ///< at the sample nearest λ*
    int mu_right = 0;
    std::vector<int> left_samples;  ///< increasing distance from λ*
    std::vector<int> right_samples;
    JumpTag tag = JumpTag::Other;
    std::string diagnostic;
};

inline MorseJumpPattern morse_jump(const PotentialFamily& family, double lambda_star, double delta, int samples = 8,
                                   double eps_null = 0.0) {
    if (family.dim_param != 1) throw ArgumentError("Morse jump needs a one-parameter family");
    if (!(delta > 0.0) || samples < 1) throw ArgumentError("Morse jump needs δ > 0 and at least one sample");
    auto md = [&](double l) {
        const SymmetricOperator b(family.hessian_at_zero(scalar_param(l)));
        return morse_data(b, eps_null > 0.0 ? eps_null : default_null_tol(b));
    };
    MorseJumpPattern p;
    p.lambda_star = lambda_star;
    const MorseData star = md(lambda_star);
    p.mu_star = star.mu;
    p.nu_star = star.nu;
    if (star.nu == 0) throw NoCandidateError("B(0) is nondegenerate at λ* = " + std::to_string(lambda_star));
    bool left_const = true, right_const = true;
    for (int k = 1; k <= samples; ++k) {
        const double off = delta * k / samples;
        const MorseData l = md(lambda_star - off), r = md(lambda_star + off);
        p.left_samples.push_back(l.mu);
        p.right_samples.push_back(r.mu);
        left_const = left_const && l.nu == 0 && l.mu == p.left_samples.front();
        right_const = right_const && r.nu == 0 && r.mu == p.right_samples.front();
    }
    p.mu_left = p.left_samples.front();
    p.mu_right = p.right_samples.front();
    if (!left_const || !right_const) {
        p.diagnostic = std::string("Morse index not constant on the ") +
                       (!left_const ? (!right_const ? "left and right" : "left") : "right") + " half-neighbourhood";
        return p;
    }
    if (p.mu_left == p.mu_star && p.mu_right == p.mu_star + p.nu_star) {
        p.tag = JumpTag::LeftLow_RightHigh;
    } else if (p.mu_left == p.mu_star + p.nu_star && p.mu_right == p.mu_star) {
        p.tag = JumpTag::LeftHigh_RightLow;
    } else {
        p.diagnostic = "index jump " + std::to_string(p.mu_left) + " -> " + std::to_string(p.mu_right) +
                       " does not match μ* = " + std::to_string(p.mu_star) + ", ν* = " + std::to_string(p.nu_star);
    }
    return p;
}

// ---------------------------------------------------------------- criteria

enum class Verdict { True, False, Indeterminate };

inline std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::True: return "true";
    case Verdict::False: return "false";
    default: return "indeterminate";
    }
}

struct Flag {
    Verdict value = Verdict::Indeterminate;
    std::vector<std::string> notes;

    bool is_true() const { return value == Verdict::True; }
};

struct Criteria {
    Flag thm3_5;
    Flag cor3_7_Id;
    Flag cor4_4_a;
    Flag cor4_4_b;
    Flag thm3_9_spd;
    Flag thm4_9_B;
    Flag thm4_9_Bprime;
    std::optional<CrossingReport> crossing;

    std::vector<std::pair<std::string, const Flag*>> named() const {
        return {{"thm3_5", &thm3_5},         {"cor3_7_Id", &cor3_7_Id},   {"cor4_4_a", &cor4_4_a},
                {"cor4_4_b", &cor4_4_b},     {"thm3_9_spd", &thm3_9_spd}, {"thm4_9_B", &thm4_9_B},
                {"thm4_9_Bprime", &thm4_9_Bprime}};
    }
};

struct CriteriaSettings {
    double delta = 0.25;       ///< crossing half-width (one-parameter families)
    int crossing_steps = 16;
    double eps_null = 0.0;
    double eps_track = 0.0;
    std::vector<Vector> q_directions; ///< μ⃗ − λ⃗* probes for the Q-form; empty selects ±e_j and sign patterns
};

namespace detail {

inline Verdict verdict_of(bool b) { return b ? Verdict::True : Verdict::False; }

inline std::vector<Vector> default_q_directions(Eigen::Index p) {
    std::vector<Vector> dirs;
    for (Eigen::Index j = 0; j < p; ++j) {
        for (double s : {1.0, -1.0}) {
            Vector d = Vector::Zero(p);
            d(j) = s;
            dirs.push_back(d);
        }
    }
    if (p >= 2 && p <= 4) {
        for (int mask = 0; mask < (1 << p); ++mask) {
            Vector d(p);
            for (Eigen::Index j = 0; j < p; ++j) d(j) = (mask >> j) & 1 ? -1.0 : 1.0;
            dirs.push_back(d);
        }
    }
    return dirs;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace detail

/// Criteria flags at λ⃗*. Crossing-based flags need p = 1; pencil-based flags
/// need an affine Hessian along the trivial branch and are indeterminate otherwise.
inline Criteria evaluate_criteria(const PotentialFamily& family, const std::optional<PencilFamily>& pencil,
                                  const Vector& lambda_star, const CriteriaSettings& settings = {}) {
    Criteria c;
    const SymmetricOperator b_star(family.hessian_at_zero(lambda_star));
    const double tol_star = settings.eps_null > 0.0 ? settings.eps_null : default_null_tol(b_star);
    const MorseData md_star = morse_data(b_star, tol_star);

    // crossing numbers
    if (family.dim_param == 1) {
        try {
            CrossingSettings cs{settings.crossing_steps, settings.eps_track, settings.eps_null};
            const auto chk = check_theorem_3_5(hessian_path(family), lambda_star(0), settings.delta, cs);
            const auto& f = chk.report.conditions;
            c.crossing = chk.report;
            c.thm3_5.value = detail::verdict_of(chk.verdict);
            c.thm3_5.notes = {std::string("(v) kernel trivial nearby: ") + (f.kernel_trivial_nearby ? "yes" : "no"),
                              std::string("(vi) continuity trend: ") + (f.continuous_at_star ? "yes" : "no"),
                              std::string("(vii) 0 in spectrum: ") + (f.degenerate_at_star ? "yes" : "no"),
                              std::string("(viii) r+ != r-: ") + (f.counts_differ ? "yes" : "no")};
            c.cor3_7_Id.value = detail::verdict_of(f.counts_differ);
            c.cor3_7_Id.notes = {"r+ = " + std::to_string(chk.report.r_plus) + ", r- = " + std::to_string(chk.report.r_minus)};
        } catch (const NoCandidateError& e) {
            c.thm3_5 = {Verdict::False, {e.what()}};
            c.cor3_7_Id = {Verdict::False, {e.what()}};
        } catch (const InconclusiveCrossingError& e) {
            c.thm3_5 = {Verdict::Indeterminate, {e.what()}};
            c.cor3_7_Id = {Verdict::Indeterminate, {e.what()}};
        }
    } else {
        c.thm3_5 = {Verdict::Indeterminate, {"crossing numbers need a one-parameter path"}};
        c.cor3_7_Id = c.thm3_5;
    }

    if (!pencil) {
        const Flag none{Verdict::Indeterminate, {"Hessian along the trivial branch is not affine in the parameter"}};
        c.cor4_4_a = c.cor4_4_b = c.thm3_9_spd = c.thm4_9_B = c.thm4_9_Bprime = none;
        return c;
    }

    const Matrix& base = pencil->base.matrix();
    const double base_tol = default_null_tol(pencil->base);
    const MorseData md_base = morse_data(pencil->base, base_tol);
    const bool base_invertible = md_base.nu == 0;
    const bool base_spd = md_base.mu == 0 && md_base.nu == 0;
    const bool is_eigenvalue = md_star.nu >= 1;
    bool commuting = true;
    for (const auto& hat : pencil->hats) commuting = commuting && operators_commute(b_star.matrix(), hat.matrix());

    // membership through the pencil's own spectrum when a route exists
    std::string membership = "dim Ker(B(0) - λ* B^(0)) = " + std::to_string(md_star.nu);
    if (pencil->num_params() == 1) {
        try {
            const auto g = generalized_eigenvalues(*pencil);
            const auto* space = find_eigenspace(g, lambda_star(0));
            membership += space ? "; generalized eigenvalue via " + to_string(g.route) : "; not in the pencil spectrum";
            if ((space != nullptr) != is_eigenvalue) membership += " (route and direct nullity disagree)";
        } catch (const UnsupportedPencilError& e) {
            membership += std::string("; route unavailable: ") + e.what();
        }
    }

    c.cor4_4_a.value = detail::verdict_of(base_invertible && is_eigenvalue);
    c.cor4_4_a.notes = {std::string("B(0) invertible: ") + (base_invertible ? "yes" : "no"), membership};

    c.thm3_9_spd.value = detail::verdict_of(base_spd && is_eigenvalue);
    c.thm3_9_spd.notes = {std::string("B(0) positive definite: ") + (base_spd ? "yes" : "no"), membership};

    Matrix kernel;
    if (is_eigenvalue) {
        const SpectralData sd = eigendecompose(b_star, tol_star);
        std::vector<Eigen::Index> cols;
        for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
            if (std::abs(sd.eigenvalues(i)) <= tol_star) cols.push_back(i);
        }
        kernel = detail::gather(sd.eigenvectors, cols);
    }
    {
        bool definite = false;
        if (kernel.cols() > 0) {
            const auto [plus, minus] = detail::inertia_on(base, kernel, base_tol);
            definite = plus == kernel.cols() || minus == kernel.cols();
            c.cor4_4_b.notes.push_back("inertia of B(0) on the kernel: +" + std::to_string(plus) + " / -" +
                                       std::to_string(minus));
        }
        c.cor4_4_b.value = detail::verdict_of(base_invertible && commuting && definite);
        c.cor4_4_b.notes.push_back(std::string("commuting: ") + (commuting ? "yes" : "no"));
    }

    if (!is_eigenvalue) {
        c.thm4_9_B = {Verdict::False, {"λ* is not an eigenvalue"}};
        c.thm4_9_Bprime = c.thm4_9_B;
        return c;
    }
    const ReducedModel model = build_reduced_model(family, lambda_star, tol_star);
    const auto dirs = settings.q_directions.empty() ? detail::default_q_directions(pencil->num_params())
                                                    : settings.q_directions;
    bool index_differs = false, some_definite = false;
    for (const auto& d : dirs) {
        const QForm q = parameter_form_Q(*pencil, model, Vector(lambda_star + d));
        index_differs = index_differs || q.index != q.coindex;
        some_definite = some_definite || q.definite();
    }
    const bool odd = model.kernel_dim() % 2 == 1;
    c.thm4_9_B.value = detail::verdict_of(odd || (commuting && index_differs));
    c.thm4_9_B.notes = {"kernel dimension " + std::to_string(model.kernel_dim()),
                        std::string("commuting: ") + (commuting ? "yes" : "no"),
                        std::string("some Q with index != coindex: ") + (index_differs ? "yes" : "no")};
    c.thm4_9_Bprime.value = detail::verdict_of(commuting && some_definite);
    c.thm4_9_Bprime.notes = {std::string("commuting: ") + (commuting ? "yes" : "no"),
                             std::string("some Q definite: ") + (some_definite ? "yes" : "no")};
    return c;
}

// ---------------------------------------------------------------- reduced critical points

struct CriticalSearch {
    int grid_m = 5;
    int max_iterations = 100;
    double gradient_tol = 1e-9;
    double dedup_radius = 1e-7;
};

namespace detail {

inline bool lex_less(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) != b(i)) return a(i) < b(i);
    }
    return false;
}

/// Newton on the reduced gradient with the Schur-complement Hessian, backtracking
/// on ‖∇L°‖ (plain Newton can cycle between symmetric starts); nullopt when it
/// fails or leaves the ball.
inline std::optional<Vector> reduced_newton(const ReducedModel& model, const Vector& lambda, Vector z, double rho,
                                            const CriticalSearch& cfg) {
    auto grad_norm = [&](const Vector& x) -> double {
        try {
            return reduced_gradient(model, lambda, x).norm();
        } catch (const ReductionFailedError&) {
        } catch (const OutsideValidityError&) {
        }
        return std::numeric_limits<double>::infinity();
    };
    try {
        for (int it = 0; it < cfg.max_iterations; ++it) {
            const Vector g = reduced_gradient(model, lambda, z);
            const Matrix h = reduced_hessian(model, lambda, z);
            const Vector step = -Eigen::CompleteOrthogonalDecomposition<Matrix>(h).solve(g);
            const bool small_step = step.norm() <= 1e-12 * std::max(1.0, z.norm());
            const double gn = g.norm();
            if (gn <= cfg.gradient_tol && small_step) return z;
            if (!step.allFinite() || (small_step && gn > cfg.gradient_tol)) return std::nullopt;
            double t = 1.0;
            int halvings = 0;
            while (!(grad_norm(Vector(z + t * step)) < gn) && halvings < 30) {
                t *= 0.5;
                ++halvings;
            }
            if (halvings == 30) {
                // no descent along the Newton direction: accept only an already converged point
                return gn <= cfg.gradient_tol ? std::optional<Vector>(z) : std::nullopt;
            }
            z += t * step;
            if (z.norm() > 2.0 * rho) return std::nullopt;
        }
    } catch (const ReductionFailedError&) {
        return std::nullopt;
    } catch (const OutsideValidityError&) {
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace detail

/// Converged multistart Newton points in the ball of radius ρ, deduplicated,
/// z = 0 first and the rest in lexicographic order.
inline std::vector<Vector> find_reduced_critical_points(const ReducedModel& model, const Vector& lambda, double rho,
                                                        const CriticalSearch& cfg = {}) {
    const Eigen::Index d = model.kernel_dim();
    if (d > 3) throw UnsupportedDimensionError("critical-point search supports kernel dimension ≤ 3, got " + std::to_string(d));
    if (!(rho > 0.0)) throw ArgumentError("search radius must be positive");
    const int side = 2 * cfg.grid_m + 1;
    int total = 1;
    for (Eigen::Index k = 0; k < d; ++k) total *= side;

    std::vector<Vector> found;
    for (int idx = 0; idx < total; ++idx) {
        Vector start(d);
        int rem = idx;
        for (Eigen::Index k = 0; k < d; ++k) {
            start(k) = -rho + rho * static_cast<double>(rem % side) / cfg.grid_m;
            rem /= side;
        }
        if (auto z = detail::reduced_newton(model, lambda, start, rho, cfg)) {
            if (z->norm() <= rho * (1.0 + 1e-12)) found.push_back(*z);
        }
    }
    std::vector<Vector> out{Vector::Zero(d)};
    for (const auto& z : found) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Vector& o) { return (o - z).norm() <= cfg.dedup_radius; });
        if (!dup) out.push_back(z);
    }
    std::sort(out.begin() + 1, out.end(), detail::lex_less);
    return out;
}

inline std::vector<Vector> find_reduced_critical_points(const ReducedModel& model, double lambda, double rho,
                                                        const CriticalSearch& cfg = {}) {
    return find_reduced_critical_points(model, scalar_param(lambda), rho, cfg);
}

enum class Extremum { StrictMin, StrictMax, Neither };

inline std::string to_string(Extremum e) {
    switch (e) {
    case Extremum::StrictMin: return "strict_min";
    case Extremum::StrictMax: return "strict_max";
    default: return "neither";
    }
}

/// Compares L°_λ on a points^d grid over [−r, r]^d (0 excluded) with L°_λ(0).
inline Extremum certify_local_extremum(const ReducedModel& model, const Vector& lambda, double radius, int points = 41) {
    const Eigen::Index d = model.kernel_dim();
    if (d > 3) throw UnsupportedDimensionError("grid certification supports kernel dimension ≤ 3");
    if (points < 2 || !(radius > 0.0)) throw ArgumentError("need at least 2 grid points and a positive radius");
    const double f0 = reduced_value(model, lambda, Vector::Zero(d));
    int total = 1;
    for (Eigen::Index k = 0; k < d; ++k) total *= points;
    bool all_above = true, all_below = true;
    for (int idx = 0; idx < total; ++idx) {
        Vector z(d);
        int rem = idx;
        for (Eigen::Index k = 0; k < d; ++k) {
            z(k) = -radius + 2.0 * radius * static_cast<double>(rem % points) / (points - 1);
            rem /= points;
        }
        if (z.norm() == 0.0) continue;
        const double diff = reduced_value(model, lambda, z) - f0;
        all_above = all_above && diff > 0.0;
        all_below = all_below && diff < 0.0;
        if (!all_above && !all_below) return Extremum::Neither;
    }
    return all_above ? Extremum::StrictMin : (all_below ? Extremum::StrictMax : Extremum::Neither);
}

inline Extremum certify_local_extremum(const ReducedModel& model, double lambda, double radius, int points = 41) {
    return certify_local_extremum(model, scalar_param(lambda), radius, points);
}

// ---------------------------------------------------------------- classification

enum class Alternative { NonIsolatedAtStar, BothSides, OneSidedTwo, Unclassified };

inline std::string to_string(Alternative a) {
    switch (a) {
    case Alternative::NonIsolatedAtStar: return "NonIsolatedAtStar";
    case Alternative::BothSides: return "BothSides";
    case Alternative::OneSidedTwo: return "OneSidedTwo";
    default: return "Unclassified";
    }
}

struct BranchSample {
    double lambda = 0.0;
    int branch_id = 0; ///< position among the nontrivial points at this λ
    Vector z;
    Vector lifted;     ///< Zz + Ww
};

struct Classification {
    Alternative alternative = Alternative::Unclassified;
    std::vector<BranchSample> branches; ///< left side first, each side ordered towards λ*
    std::vector<double> left_lambdas, right_lambdas;
    std::vector<int> left_counts, right_counts; ///< nontrivial points per sample
    bool converging = false; ///< max ‖z‖ non-increasing as λ → λ* on every populated side
    double delta_used = 0.0;
    int shrinks = 0;
};

struct ClassifySettings {
    double rho = 0.0;        ///< 0 selects the model's trust radius
    double rho_iso = 1e-5;
    int samples = 8;
    int max_shrinks = 20;     ///< δ halvings tried while the result is Unclassified
    CriticalSearch search;
};

namespace detail {

inline Classification classify_once(const ReducedModel& model, double lambda_star, double delta, double rho,
                                    const ClassifySettings& s) {
    Classification c;
    c.delta_used = delta;
    const auto at_star = find_reduced_critical_points(model, lambda_star, s.rho_iso, s.search);
    if (at_star.size() > 1) {
        c.alternative = Alternative::NonIsolatedAtStar;
        c.converging = true;
        return c;
    }
    struct Side {
        std::vector<double> lambdas;
        std::vector<int> counts;
        std::vector<BranchSample> rows;
        bool monotone = true;
    };
    auto sample_side = [&](double sign) {
        Side side;
        double prev_max = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= s.samples; ++k) {
            const double l = lambda_star + sign * delta * std::ldexp(1.0, -k);
            const auto pts = find_reduced_critical_points(model, l, rho, s.search);
            side.lambdas.push_back(l);
            side.counts.push_back(static_cast<int>(pts.size()) - 1);
            double max_norm = 0.0;
            for (std::size_t i = 1; i < pts.size(); ++i) {
                const PsiSolution psi = solve_psi(model, scalar_param(l), pts[i]);
                side.rows.push_back({l, static_cast<int>(i - 1), pts[i], model.lift(pts[i], psi.w)});
                max_norm = std::max(max_norm, pts[i].norm());
            }
            if (max_norm > prev_max * (1.0 + 1e-9) + 1e-14) side.monotone = false;
            prev_max = max_norm;
        }
        return side;
    };
    Side left = sample_side(-1.0), right = sample_side(1.0);
    c.left_lambdas = left.lambdas;
    c.right_lambdas = right.lambdas;
    c.left_counts = left.counts;
    c.right_counts = right.counts;
    c.branches = left.rows;
    c.branches.insert(c.branches.end(), right.rows.begin(), right.rows.end());
    c.converging = left.monotone && right.monotone;

    auto all = [](const std::vector<int>& v, auto pred) { return std::all_of(v.begin(), v.end(), pred); };
    const bool l2 = all(left.counts, [](int n) { return n >= 2; });
    const bool r2 = all(right.counts, [](int n) { return n >= 2; });
    const bool l0 = all(left.counts, [](int n) { return n == 0; });
    const bool r0 = all(right.counts, [](int n) { return n == 0; });
    const bool l1 = all(left.counts, [](int n) { return n >= 1; });
    const bool r1 = all(right.counts, [](int n) { return n >= 1; });
    if ((l2 && r0) || (r2 && l0)) {
        c.alternative = Alternative::OneSidedTwo;
    } else if (l1 && r1) {
        c.alternative = Alternative::BothSides;
    }
    return c;
}

} // namespace detail

/// Rabinowitz alternative at λ* from critical-point patterns of L°_λ: at λ*
/// within ρ_iso, then on λ* ± δ·2^{−k}, k = 1..samples. While the outcome is
/// Unclassified, δ is halved (up to max_shrinks times) so that the samples
/// come closer to λ*.
inline Classification classify_rabinowitz(const ReducedModel& model, double lambda_star, double delta,
                                          const ClassifySettings& s = {}) {
    if (model.family.dim_param != 1) throw ArgumentError("classification needs a one-parameter family");
    if (!(delta > 0.0)) throw ArgumentError("δ must be positive");
    if (model.kernel_dim() > 3) {
        throw UnsupportedDimensionError("classification supports kernel dimension ≤ 3, got " +
                                        std::to_string(model.kernel_dim()));
    }
    const double rho = s.rho > 0.0 ? s.rho : model.trust_radius;
    Classification c;
    for (int shrink = 0; shrink <= s.max_shrinks; ++shrink) {
        c = detail::classify_once(model, lambda_star, delta * std::ldexp(1.0, -shrink), rho, s);
        c.shrinks = shrink;
        if (c.alternative != Alternative::Unclassified) break;
    }
    return c;
}

// ---------------------------------------------------------------- Z2 orbits

struct Z2Count {
    int orbits = 0; ///< nontrivial {z, −z} classes
    bool even = true;
};

inline Z2Count count_z2_orbits(const ReducedModel& model, const Vector& lambda, const std::vector<Vector>& critical,
                               double radius = 1e-7) {
    if (!is_even_family(model.family, lambda)) {
        throw NotEquivariantError("family '" + model.family.name + "' is not even in u");
    }
    std::vector<Vector> reps;
    for (const auto& z : critical) {
        if (z.norm() <= radius) continue;
        const bool seen = std::any_of(reps.begin(), reps.end(), [&](const Vector& r) {
            return (r - z).norm() <= radius || (r + z).norm() <= radius;
        });
        if (!seen) reps.push_back(z);
    }
    return {static_cast<int>(reps.size()), true};
}

struct Z2Summary {
    int n_plus = 0;  ///< fewest orbits over right-side samples
    int n_minus = 0; ///< fewest orbits over left-side samples
    int kernel_dim = 0;
    bool bound_holds = false; ///< n⁺ + n⁻ ≥ dim kernel
};

/// Orbit counts per side from a classification's samples.
inline Z2Summary z2_summary(const ReducedModel& model, const Classification& c) {
    auto side_min = [&](const std::vector<double>& lambdas) {
        int best = std::numeric_limits<int>::max();
        for (double l : lambdas) {
            std::vector<Vector> pts;
            for (const auto& b : c.branches) {
                if (b.lambda == l) pts.push_back(b.z);
            }
            best = std::min(best, count_z2_orbits(model, scalar_param(l), pts).orbits);
        }
        return lambdas.empty() ? 0 : best;
    };
    Z2Summary s;
    s.n_plus = side_min(c.right_lambdas);
    s.n_minus = side_min(c.left_lambdas);
    s.kernel_dim = static_cast<int>(model.kernel_dim());
    s.bound_holds = s.n_plus + s.n_minus >= s.kernel_dim;
    return s;
}

// ---------------------------------------------------------------- assembly

struct BifurcationFinding {
    Vector lambda_star;
    int nullity = 0;
    Criteria criteria;
    MorseJumpPattern morse_jump;
    Alternative alternative = Alternative::Unclassified;
    Classification classification;
    std::optional<Z2Summary> z2;
    double delta = 0.0;
    double trust_radius = 0.0;
    std::vector<std::string> warnings;
};

struct DetectorSettings {
    double a = 0.0;
    double b = 1.0;
    int steps = 200;
    double eps_null = 0.0;
    double tau_psi = 0.0;
    double eps_track = 0.0;
    double delta = 0.0;  ///< 0 selects half the distance to the nearest neighbour (candidate, pencil eigenvalue or range end)
    double rho = 0.0;    ///< 0 selects the trust radius
    int grid_m = 5;
    int crossing_steps = 16;
    int jobs = 1;
};

/// Checks the necessary-condition invariant and orders findings by λ*.
inline std::vector<BifurcationFinding> assemble_report(std::vector<BifurcationFinding> findings) {
    for (const auto& f : findings) {
        if (f.nullity < 1) {
            bool positive = false;
            for (const auto& [name, flag] : f.criteria.named()) positive = positive || flag->is_true();
            throw InvariantViolationError(std::string("finding with trivial kernel") +
                                          (positive ? " carries a positive criterion" : ""));
        }
        if (f.z2 && f.alternative != Alternative::Unclassified && f.alternative != Alternative::NonIsolatedAtStar &&
            !f.z2->bound_holds) {
            throw InvariantViolationError("orbit bound n+ + n- >= dim kernel violated on a classified even finding");
        }
    }
    std::stable_sort(findings.begin(), findings.end(), [](const BifurcationFinding& x, const BifurcationFinding& y) {
        return detail::lex_less(x.lambda_star, y.lambda_star);
    });
    return findings;
}

/// Full pipeline for one candidate on a one-parameter family.
inline std::optional<BifurcationFinding> analyze_candidate(const PotentialFamily& family,
                                                           const std::optional<PencilFamily>& pencil, double lambda_star,
                                                           double delta, const DetectorSettings& s,
                                                           std::vector<std::string>& warnings) {
    const std::string where = "λ* = " + detail::fmt(lambda_star) + ": ";
    const SymmetricOperator b_star(family.hessian_at_zero(scalar_param(lambda_star)));
    const double tol = s.eps_null > 0.0 ? s.eps_null : default_null_tol(b_star);
    BifurcationFinding f;
    f.lambda_star = scalar_param(lambda_star);
    f.nullity = morse_data(b_star, tol).nu;
    f.delta = delta;
    if (f.nullity < 1) {
        warnings.push_back(where + "candidate dropped, B(0) nondegenerate under ε_null");
        return std::nullopt;
    }
    CriteriaSettings cs;
    cs.delta = delta;
    cs.crossing_steps = s.crossing_steps;
    cs.eps_null = s.eps_null;
    cs.eps_track = s.eps_track;
    f.criteria = evaluate_criteria(family, pencil, f.lambda_star, cs);
    for (const auto& [name, flag] : f.criteria.named()) {
        if (flag->value == Verdict::Indeterminate) f.warnings.push_back(name + " indeterminate");
    }

    f.morse_jump = morse_jump(family, lambda_star, delta, 8, s.eps_null);
    if (f.morse_jump.tag == JumpTag::Other) f.warnings.push_back("Morse jump pattern Other: " + f.morse_jump.diagnostic);

    NewtonSettings ns;
    ns.tau_psi = s.tau_psi;
    const ReducedModel model = build_reduced_model(family, f.lambda_star, tol, ns);
    f.trust_radius = model.trust_radius;
    ClassifySettings cls;
    cls.rho = s.rho;
    cls.search.grid_m = s.grid_m;
    try {
        f.classification = classify_rabinowitz(model, lambda_star, delta, cls);
        f.alternative = f.classification.alternative;
        if (f.alternative == Alternative::Unclassified) f.warnings.push_back("alternative Unclassified");
        if (f.alternative != Alternative::Unclassified && !f.classification.converging) {
            f.warnings.push_back("branch norms do not shrink monotonically towards λ*");
        }
        if (is_even_family(family, f.lambda_star)) f.z2 = z2_summary(model, f.classification);
    } catch (const UnsupportedDimensionError& e) {
        f.warnings.push_back(std::string("alternative Unclassified: ") + e.what());
    }
    for (const auto& w : f.warnings) warnings.push_back(where + w);
    return f;
}

struct DetectionResult {
    std::vector<double> candidates;
    std::vector<BifurcationFinding> findings;
    std::vector<std::string> warnings;
};

/// Sweep → criteria → classification over [a, b]; candidates are analysed in
/// parallel when jobs > 1, and results keep candidate order.
inline DetectionResult detect(const PotentialFamily& family, const DetectorSettings& s) {
    DetectionResult r;
    r.candidates = sweep_candidates(family, s.a, s.b, s.steps, s.eps_null);
    const auto pencil = extract_pencil(family);
    std::vector<double> neighbours = r.candidates;
    if (pencil) {
        try {
            for (double l : generalized_eigenvalues(*pencil).lambdas()) neighbours.push_back(l);
        } catch (const UnsupportedPencilError&) {
        }
    }

    const std::size_t n = r.candidates.size();
    std::vector<std::optional<BifurcationFinding>> slots(n);
    std::vector<std::vector<std::string>> slot_warnings(n);
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t i) {
        try {
            const double l = r.candidates[i];
            double delta = s.delta;
            if (!(delta > 0.0)) {
                double gap = std::min(l - s.a, s.b - l);
                for (double o : neighbours) {
                    if (std::abs(o - l) > 1e-8 * (1.0 + std::abs(l))) gap = std::min(gap, std::abs(o - l));
                }
                delta = gap > 0.0 ? 0.5 * gap : 0.5 * (s.b - s.a) / s.steps;
            }
            slots[i] = analyze_candidate(family, pencil, l, delta, s, slot_warnings[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t jobs = static_cast<std::size_t>(std::max(1, s.jobs));
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(jobs, n); ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < n; i += jobs) work(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    std::vector<BifurcationFinding> findings;
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        for (auto& w : slot_warnings[i]) r.warnings.push_back(std::move(w));
        if (slots[i]) findings.push_back(std::move(*slots[i]));
    }
    r.findings = assemble_report(std::move(findings));
    return r;
}

} // namespace bifurcata
