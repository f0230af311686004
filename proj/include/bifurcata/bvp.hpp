#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bifurcata/model.hpp"

namespace bifurcata {

/// Discretized 1-D Dirichlet problem
///   F_λ(u) = Σ_{i=0}^{m} h·W((u_{i+1} − u_i)/h) − λ Σ_{i=1}^{m} h·G(u_i),  u_0 = u_{m+1} = 0,
/// with h = length/(m+1). Densities are given by ascending coefficient lists.
struct BvpSpec {
    int m = 0;
    std::vector<double> w_coeffs;
    std::vector<double> g_coeffs;
    double length = 1.0;

    bool operator==(const BvpSpec&) const = default;
};

namespace detail {

/// Σ c_k x^k and its first two derivatives.
struct Poly1d {
    std::vector<double> c;

    double value(double x) const {
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
        return v;
    }
    double d1(double x) const {
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) v = v * x + static_cast<double>(k) * c[k];
        return v;
    }
    double d2(double x) const {
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 2;) v = v * x + static_cast<double>(k * (k - 1)) * c[k];
        return v;
    }
};

} // namespace detail

inline PotentialFamily make_bvp_family(const BvpSpec& spec, std::string name = "bvp") {
    if (spec.m < 2) throw InvalidSpecError("bvp spec: m must be at least 2");
    if (!(spec.length > 0.0)) throw InvalidSpecError("bvp spec: length must be positive");
    if (spec.w_coeffs.size() < 3) throw InvalidSpecError("bvp spec: W needs a quadratic coefficient");
    if (spec.w_coeffs[1] != 0.0) throw InvalidSpecError("bvp spec: W has a linear term");
    if (!(spec.w_coeffs[2] > 0.0)) throw InvalidSpecError("bvp spec: W''(0) must be positive");
    if (spec.g_coeffs.size() >= 2 && spec.g_coeffs[1] != 0.0) {
        throw InvalidSpecError("bvp spec: G has a linear term");
    }

    struct Data {
        int m;
        double h;
        detail::Poly1d w, g;
    };
    auto d = std::make_shared<Data>(Data{spec.m, spec.length / (spec.m + 1), {spec.w_coeffs}, {spec.g_coeffs}});

    // padded node values U_0..U_{m+1}
    auto padded = [](const Data& dd, const Vector& u) {
        std::vector<double> U(static_cast<std::size_t>(dd.m + 2), 0.0);
        for (int k = 0; k < dd.m; ++k) U[static_cast<std::size_t>(k + 1)] = u(k);
        return U;
    };

    PotentialFamily f;
    f.dim_state = spec.m;
    f.dim_param = 1;
    f.name = std::move(name);
    f.description = "1-D Dirichlet model on " + std::to_string(spec.m) + " interior nodes";
    f.value_fn = [d, padded](const Vector& lambda, const Vector& u) {
        const auto U = padded(*d, u);
        double v = 0.0;
        for (int i = 0; i <= d->m; ++i) {
            v += d->h * d->w.value((U[static_cast<std::size_t>(i + 1)] - U[static_cast<std::size_t>(i)]) / d->h);
        }
        for (int i = 1; i <= d->m; ++i) v -= lambda(0) * d->h * d->g.value(U[static_cast<std::size_t>(i)]);
        return v;
    };
    f.gradient_fn = [d, padded](const Vector& lambda, const Vector& u) -> Vector {
        const auto U = padded(*d, u);
        Vector g(d->m);
        for (int k = 1; k <= d->m; ++k) {
            const auto K = static_cast<std::size_t>(k);
            const double left = (U[K] - U[K - 1]) / d->h;
            const double right = (U[K + 1] - U[K]) / d->h;
            g(k - 1) = d->w.d1(left) - d->w.d1(right) - lambda(0) * d->h * d->g.d1(U[K]);
        }
        return g;
    };
    f.hessian_fn = [d, padded](const Vector& lambda, const Vector& u) -> Matrix {
        const auto U = padded(*d, u);
        Matrix H = Matrix::Zero(d->m, d->m);
        for (int k = 1; k <= d->m; ++k) {
            const auto K = static_cast<std::size_t>(k);
            const double left = (U[K] - U[K - 1]) / d->h;
            const double right = (U[K + 1] - U[K]) / d->h;
            H(k - 1, k - 1) = (d->w.d2(left) + d->w.d2(right)) / d->h - lambda(0) * d->h * d->g.d2(U[K]);
            if (k < d->m) {
                H(k - 1, k) = -d->w.d2(right) / d->h;
                H(k, k - 1) = H(k - 1, k);
            }
        }
        return H;
    };
    return f;
}

} // namespace bifurcata
