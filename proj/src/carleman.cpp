#include "jumpwave/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace jumpwave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double resolve_alpha(Side side, double x_n, const CarlemanWeight& w) {
    if (side == Side::Auto) side = x_n < 0.0 ? Side::Minus : Side::Plus;
    return side == Side::Minus ? w.alpha_minus : w.alpha_plus;
}

double c_at(const MediumSpec& m, Vec2 x, Side side) {
    return side == Side::Minus ? m.coefficient.c_minus(x)
                               : m.coefficient.c_plus(x);
}

// Globally defined first-order root: sqrt(chi*s + (1-chi)*lambda^2) with
// s = Q - c^{-1} xi_t^2 and chi the clamped elliptic blend; coincides with
// the plain root where s >= 2 eps lambda^2 and stays >= sqrt(eps)|xi|.
double patched_m(const MediumSpec& m, Vec2 x, double xi_prime, double xi_t,
                 Side side, double eps) {
    double lam2 = xi_prime * xi_prime + xi_t * xi_t;
    if (lam2 <= 0.0) return 0.0;
    double s = symbol_Q(m, x, xi_prime) - xi_t * xi_t / c_at(m, x, side);
    double chi = std::clamp((s / lam2 - eps) / eps, 0.0, 1.0);
    return std::sqrt(chi * s + (1.0 - chi) * lam2);
}

struct IfaceSample {
    Vec2 p;
    Vec2 normal;  // unit, from minus to plus
};

std::vector<IfaceSample> interface_samples(const MediumSpec& m, int count) {
    std::vector<IfaceSample> out;
    if (m.interface.kind == InterfaceSpec::Kind::Point1D) {
        out.push_back({{m.interface.point, 0.0}, {1.0, 0.0}});
        return out;
    }
    const auto& poly = m.interface.polyline;
    double total = 0.0;
    std::vector<double> cum(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) {
        total += norm(poly[i] - poly[i - 1]);
        cum[i] = total;
    }
    for (int j = 0; j < count; ++j) {
        double s = total * (j + 0.5) / count;
        std::size_t seg = 1;
        while (seg + 1 < poly.size() && cum[seg] < s) ++seg;
        Vec2 a = poly[seg - 1], b = poly[seg];
        double len = cum[seg] - cum[seg - 1];
        double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
        Vec2 tangent = (1.0 / std::max(len, 1e-300)) * (b - a);
        out.push_back({a + (t * len) * tangent, {tangent.y, -tangent.x}});
    }
    return out;
}

double interface_abscissa(const MediumSpec& m) {
    return m.interface.kind == InterfaceSpec::Kind::Point1D
               ? m.interface.point
               : m.interface.polyline.front().x;
}

MediumSpec branch_medium(const MediumSpec& m, Side side) {
    MediumSpec out = m;
    auto f = side == Side::Minus ? m.coefficient.c_minus : m.coefficient.c_plus;
    out.coefficient.c_minus = f;
    out.coefficient.c_plus = f;
    return out;
}

}  // namespace

double phi(double x_n, Side side, const CarlemanWeight& w) {
    return resolve_alpha(side, x_n, w) * x_n + 0.5 * w.beta * x_n * x_n;
}

double phi_prime(double x_n, Side side, const CarlemanWeight& w) {
    return resolve_alpha(side, x_n, w) + w.beta * x_n;
}

double psi(double t, Vec2 x, const CarlemanWeight& w) {
    double dt = t - w.t0;
    Vec2 dx = x - w.x0;
    return phi(x.x - w.x0.x, Side::Auto, w) - w.delta_conv * (dt * dt + dot(dx, dx));
}

bool check_convexification(const CarlemanWeight& w, double R, double delta,
                           int grid_per_axis) {
    w.validate();
    if (!(R > 0.0) || !(delta > 0.0) || grid_per_axis < 2)
        throw ValidationError("check_convexification: need R > 0, delta > 0");
    if (delta > w.delta_conv * R * R / 40.0 * (1.0 + 1e-12))
        throw ValidationError(
            "check_convexification: need delta <= delta_conv * R^2 / 40");
    const double rho = delta / 10.0;
    const double H = 3.0 * R;
    const double h = 2.0 * H / (grid_per_axis - 1);
    for (int it = 0; it < grid_per_axis; ++it)
        for (int ix = 0; ix < grid_per_axis; ++ix)
            for (int iy = 0; iy < grid_per_axis; ++iy) {
                double t = w.t0 - H + it * h;
                Vec2 x = {w.x0.x - H + ix * h, w.x0.y - H + iy * h};
                double dt = t - w.t0;
                Vec2 dx = x - w.x0;
                double r = std::sqrt(dt * dt + dot(dx, dx));
                if (r < 0.5 * R || r > 2.5 * R) continue;
                double p = psi(t, x, w);
                if (p < -9.0 * delta || p > 2.0 * delta) continue;
                if (!(phi(x.x - w.x0.x, Side::Auto, w) > 2.0 * rho) || r > 3.0 * R)
                    return false;
            }
    return true;
}

double symbol_Q(const MediumSpec& m, Vec2 x, double xi_prime) {
    return m.tangential_form(x) * xi_prime * xi_prime;
}

RegionTags classify(const MicrolocalPoint& p, const MediumSpec& m, double eps) {
    double lam2 = p.lambda_sq();
    if (!(lam2 > 0.0))
        throw ValidationError("classify: zero frequency (xi', xi_t)");
    RegionTags tags;
    tags.epsilon = eps;
    double Q = symbol_Q(m, p.x, p.xi_prime);
    double s_minus = Q - p.xi_t * p.xi_t / c_at(m, p.x, Side::Minus);
    double s_plus = Q - p.xi_t * p.xi_t / c_at(m, p.x, Side::Plus);
    tags.E_minus = s_minus >= eps * lam2;
    tags.E_plus = s_plus >= eps * lam2;
    tags.GH_minus = s_minus <= 2.0 * eps * lam2;
    tags.GH_plus = s_plus <= 2.0 * eps * lam2;
    return tags;
}

EllipticRoots compute_m(const MicrolocalPoint& p, const MediumSpec& m,
                        double eps) {
    RegionTags tags = classify(p, m, eps);
    EllipticRoots roots;
    double Q = symbol_Q(m, p.x, p.xi_prime);
    if (tags.E_minus)
        roots.m_minus =
            std::sqrt(Q - p.xi_t * p.xi_t / c_at(m, p.x, Side::Minus));
    if (tags.E_plus)
        roots.m_plus =
            std::sqrt(Q - p.xi_t * p.xi_t / c_at(m, p.x, Side::Plus));
    return roots;
}

FactorSymbols factors(const MicrolocalPoint& p, const CarlemanWeight& w,
                      const MediumSpec& m, double eps) {
    EllipticRoots roots = compute_m(p, m, eps);
    FactorSymbols f;
    f.m_minus = roots.m_minus;
    f.m_plus = roots.m_plus;
    double x_n = p.x.x - w.x0.x;
    if (roots.m_minus) {
        double tp = p.tau * phi_prime(x_n, Side::Minus, w);
        f.e_minus = tp + *roots.m_minus;
        f.f_minus = tp - *roots.m_minus;
    }
    if (roots.m_plus) {
        double tp = p.tau * phi_prime(x_n, Side::Plus, w);
        f.e_plus = tp + *roots.m_plus;
        f.f_plus = tp - *roots.m_plus;
    }
    return f;
}

double geometric_alpha_ratio(const MediumSpec& m, double eps, int sphere_grid,
                             int interface_grid) {
    if (sphere_grid < 8 || interface_grid < 1)
        throw ValidationError("geometric_alpha_ratio: grid too coarse");
    auto samples = interface_samples(m, interface_grid);
    double best = 0.0;
    bool found = false;
    for (const IfaceSample& s : samples) {
        double b = m.tangential_form(s.p);
        double cm = c_at(m, s.p, Side::Minus);
        double cp = c_at(m, s.p, Side::Plus);
        auto ratio_at = [&](double th) {
            double xp = std::cos(th), xt = std::sin(th);
            double s_m = b * xp * xp - xt * xt / cm;
            double s_p = b * xp * xp - xt * xt / cp;
            if (s_m < eps || s_p < eps) return -1.0;
            return std::sqrt(s_p / s_m);
        };
        // dense scan of [0, pi) plus two zoom rounds around the running best;
        // the sup sits on the E boundary where the minus root saturates eps
        double lo = 0.0, hi = kPi;
        for (int round = 0; round < 3; ++round) {
            double step = (hi - lo) / sphere_grid;
            double best_local = -1.0, best_th = lo;
            for (int i = 0; i <= sphere_grid; ++i) {
                double th = lo + i * step;
                double r = ratio_at(th);
                if (r > best_local) {
                    best_local = r;
                    best_th = th;
                }
            }
            if (best_local < 0.0) break;
            found = true;
            best = std::max(best, best_local);
            lo = std::max(0.0, best_th - 10.0 * step);
            hi = std::min(kPi, best_th + 10.0 * step);
        }
    }
    if (!found)
        throw ValidationError(
            "geometric_alpha_ratio: E- and E+ do not intersect on the unit "
            "sphere; reduce epsilon");
    return best;
}

GammaCoverReport check_gamma_cover(const CarlemanWeight& w, const MediumSpec& m,
                                   double eps, double mu, double mu0,
                                   const GammaCoverGrid& grid) {
    w.validate();
    if (!(1.0 < mu && mu < mu0))
        throw ValidationError("check_gamma_cover: need 1 < mu < mu0");
    if (grid.xn_points < 1 || grid.sphere_points < 8 || grid.tau_values.empty())
        throw ValidationError("check_gamma_cover: grid too coarse");

    auto samples = interface_samples(m, 5);
    const std::size_t nt = grid.tau_values.size();
    std::vector<double> min_margin(nt, kInf);
    std::vector<MicrolocalPoint> argmin(nt);
    std::vector<bool> argmin_plus(nt, true);

    for (std::size_t ti = 0; ti < nt; ++ti) {
        double tau = grid.tau_values[ti];
        for (const IfaceSample& s : samples) {
            for (int k = 0; k < grid.xn_points; ++k) {
                double xn = grid.xn_points > 1
                                ? grid.eta * k / (grid.xn_points - 1)
                                : 0.0;
                Vec2 pp = s.p + xn * s.normal;   // plus-side collar point
                Vec2 pm = s.p - xn * s.normal;   // minus-side collar point
                for (int a = 0; a < grid.sphere_points; ++a) {
                    double th = kPi * a / grid.sphere_points;
                    double xp = std::cos(th), xt = std::sin(th);
                    double mp_pp = patched_m(m, pp, xp, xt, Side::Plus, eps);
                    double mp_pm = patched_m(m, pm, xp, xt, Side::Plus, eps);
                    double mm_pm = patched_m(m, pm, xp, xt, Side::Minus, eps);

                    double radii[14] = {0.5, 1.0, 1.9, 2.1, 4.0, 16.0, 64.0,
                                        256.0, 0, 0, 0, 0, 0, 0};
                    // straddle both membership thresholds in |xi|
                    double r_gam = tau * w.alpha_plus / (mu * mp_pp);
                    double r_til = tau * w.alpha_plus / (mu0 * mp_pm);
                    radii[8] = 0.95 * r_gam;
                    radii[9] = 1.05 * r_gam;
                    radii[10] = 0.98 * r_til;
                    radii[11] = 1.02 * r_til;
                    radii[12] = 1.05 * r_til;
                    radii[13] = 1.2 * r_til;

                    for (double r : radii) {
                        if (!(r > 0.0) || !std::isfinite(r)) continue;
                        double lam_tau = std::sqrt(tau * tau + r * r);
                        // f_+ >= C lam_tau on Gamma_mu, 0 <= x_n <= eta
                        bool in_gamma =
                            r < 2.0 || tau * w.alpha_plus > mu * r * mp_pp;
                        if (in_gamma) {
                            double f_plus =
                                tau * phi_prime(xn, Side::Plus, w) - r * mp_pp;
                            double margin = f_plus / lam_tau;
                            if (margin < min_margin[ti]) {
                                min_margin[ti] = margin;
                                argmin[ti] = {pp, r * xp, r * xt, tau};
                                argmin_plus[ti] = true;
                            }
                        }
                        // f_- <= -C lam_tau on tilde-Gamma_mu0, -eta <= x_n <= 0
                        bool in_tilde =
                            r > 1.0 && tau * w.alpha_plus < mu0 * r * mp_pm;
                        if (in_tilde) {
                            double f_minus =
                                tau * phi_prime(-xn, Side::Minus, w) - r * mm_pm;
                            double margin = -f_minus / lam_tau;
                            if (margin < min_margin[ti]) {
                                min_margin[ti] = margin;
                                argmin[ti] = {pm, r * xp, r * xt, tau};
                                argmin_plus[ti] = false;
                            }
                        }
                    }
                }
            }
        }
    }

    GammaCoverReport rep;
    // smallest tau from which every larger grid tau keeps positive margins
    std::size_t i0 = nt;
    for (std::size_t i = nt; i-- > 0;) {
        if (min_margin[i] > 0.0)
            i0 = i;
        else
            break;
    }
    if (i0 < nt) {
        rep.cover_holds = true;
        rep.tau0 = grid.tau_values[i0];
        double c = kInf;
        for (std::size_t i = i0; i < nt; ++i) c = std::min(c, min_margin[i]);
        rep.C = c;
    } else {
        rep.cover_holds = false;
        rep.has_witness = true;
        rep.witness = argmin[nt - 1];
        rep.C = min_margin[nt - 1];
        rep.failure = argmin_plus[nt - 1]
                          ? "f_+ fails the lower bound C*lambda_tau on Gamma "
                            "at the witness point"
                          : "f_- fails the upper bound -C*lambda_tau on "
                            "tilde-Gamma at the witness point; the weight "
                            "slope ratio is too small";
    }
    return rep;
}

double subellipticity_bracket(const MicrolocalPoint& p, const CarlemanWeight& w,
                              const MediumSpec& m, double eps, double mu) {
    double x_n = p.x.x - w.x0.x;
    double r = std::sqrt(p.lambda_sq());
    double mp = patched_m(m, p.x, p.xi_prime, p.xi_t, Side::Plus, eps);
    double f_plus = p.tau * phi_prime(x_n, Side::Plus, w) - mp;
    double dm = 0.0;
    if (r > 0.0) {
        // central difference at unit frequency, rescaled by 1-homogeneity
        const double h = 1e-4;
        Vec2 xl = p.x, xr = p.x;
        xl.x -= h;
        xr.x += h;
        dm = r *
             (patched_m(m, xr, p.xi_prime / r, p.xi_t / r, Side::Plus, eps) -
              patched_m(m, xl, p.xi_prime / r, p.xi_t / r, Side::Plus, eps)) /
             (2.0 * h);
    }
    return (mu * f_plus * f_plus + p.tau * (p.tau * w.beta - dm)) /
           p.lambda_tau_sq();
}

double check_subellipticity(const CarlemanWeight& w, const MediumSpec& m,
                            double eps, double mu, const GammaCoverGrid& grid) {
    w.validate();
    if (grid.xn_points < 1 || grid.sphere_points < 8 || grid.tau_values.empty())
        throw ValidationError("check_subellipticity: grid too coarse");
    auto samples = interface_samples(m, 5);
    double worst = kInf;
    for (const IfaceSample& s : samples) {
        int nxn = std::max(2 * grid.xn_points - 1, 1);
        for (int k = 0; k < nxn; ++k) {
            double xn = nxn > 1 ? -grid.eta + 2.0 * grid.eta * k / (nxn - 1)
                                : 0.0;
            Vec2 x = s.p + xn * s.normal;
            for (int a = 0; a < grid.sphere_points; ++a) {
                double th = kPi * a / grid.sphere_points;
                double xp = std::cos(th), xt = std::sin(th);
                MicrolocalPoint p{x, xp, xt, 1.0};
                for (double tau : grid.tau_values) {
                    p.tau = tau;
                    worst = std::min(worst, subellipticity_bracket(p, w, m, eps, mu));
                }
                // insert the exact zero of f_+ for this direction
                double fp = phi_prime(xn, Side::Plus, w);
                double mp = patched_m(m, x, xp, xt, Side::Plus, eps);
                if (fp > 0.0 && mp > 0.0) {
                    p.tau = mp / fp;
                    worst = std::min(worst, subellipticity_bracket(p, w, m, eps, mu));
                }
            }
        }
    }
    return worst;
}

namespace {

// Lagrange quadratic through (x0,f0),(x1,f1),(x2,f2): value and derivative at xq
void lagrange3(double x0, double x1, double x2, double f0, double f1, double f2,
               double xq, double& val, double& der) {
    double l0 = (xq - x1) * (xq - x2) / ((x0 - x1) * (x0 - x2));
    double l1 = (xq - x0) * (xq - x2) / ((x1 - x0) * (x1 - x2));
    double l2 = (xq - x0) * (xq - x1) / ((x2 - x0) * (x2 - x1));
    double d0 = (2.0 * xq - x1 - x2) / ((x0 - x1) * (x0 - x2));
    double d1 = (2.0 * xq - x0 - x2) / ((x1 - x0) * (x1 - x2));
    double d2 = (2.0 * xq - x0 - x1) / ((x2 - x0) * (x2 - x1));
    val = f0 * l0 + f1 * l1 + f2 * l2;
    der = f0 * d0 + f1 * d1 + f2 * d2;
}

struct SideGeometry {
    double xs = 0.0;                 // interface abscissa
    std::vector<double> x_n;         // per column
    std::vector<std::int8_t> side;   // per node, -1 or +1
    double cell = 0.0;               // spatial quadrature weight per node
};

SideGeometry side_geometry(const SidePair& u, const MediumSpec& m) {
    SideGeometry g;
    g.xs = interface_abscissa(m);
    g.x_n.resize(u.nx);
    for (int ix = 0; ix < u.nx; ++ix)
        g.x_n[ix] = u.origin.x + ix * u.hx - g.xs;
    g.side.resize(static_cast<std::size_t>(u.nx) * u.ny);
    for (int iy = 0; iy < u.ny; ++iy)
        for (int ix = 0; ix < u.nx; ++ix)
            g.side[static_cast<std::size_t>(iy) * u.nx + ix] =
                g.x_n[ix] < 0.0 ? -1 : +1;
    g.cell = u.ny > 1 ? u.hx * u.hy : u.hx;
    return g;
}

// trapezoid-in-time, cell-weighted squared norm restricted to one side
double heaviside_norm_sq(const SpaceTimeField& f, const SideGeometry& g,
                         int want_side) {
    double total = 0.0;
    for (std::size_t node = 0; node < f.nspace; ++node) {
        if (g.side[node] != want_side) continue;
        double acc = 0.0;
        for (std::size_t it = 0; it < f.nt; ++it) {
            double wt = (it == 0 || it + 1 == f.nt) ? 0.5 : 1.0;
            double v = f.at(node, it);
            acc += wt * v * v;
        }
        total += acc;
    }
    return total * f.dt * g.cell;
}

// spatial gradient by central differences (second-order one-sided at edges)
void spatial_gradient(const SpaceTimeField& f, int nx, int ny, double hx,
                      double hy, SpaceTimeField& gx, SpaceTimeField& gy) {
    gx = f;
    gy = f;
    auto idx = [nx](int ix, int iy) {
        return static_cast<std::size_t>(iy) * nx + ix;
    };
    for (std::size_t it = 0; it < f.nt; ++it) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                double d;
                if (ix == 0)
                    d = (-3.0 * f.at(idx(0, iy), it) +
                         4.0 * f.at(idx(1, iy), it) - f.at(idx(2, iy), it)) /
                        (2.0 * hx);
                else if (ix == nx - 1)
                    d = (3.0 * f.at(idx(nx - 1, iy), it) -
                         4.0 * f.at(idx(nx - 2, iy), it) +
                         f.at(idx(nx - 3, iy), it)) /
                        (2.0 * hx);
                else
                    d = (f.at(idx(ix + 1, iy), it) - f.at(idx(ix - 1, iy), it)) /
                        (2.0 * hx);
                gx.at(idx(ix, iy), it) = d;
                double e = 0.0;
                if (ny > 1) {
                    if (iy == 0)
                        e = (-3.0 * f.at(idx(ix, 0), it) +
                             4.0 * f.at(idx(ix, 1), it) - f.at(idx(ix, 2), it)) /
                            (2.0 * hy);
                    else if (iy == ny - 1)
                        e = (3.0 * f.at(idx(ix, ny - 1), it) -
                             4.0 * f.at(idx(ix, ny - 2), it) +
                             f.at(idx(ix, ny - 3), it)) /
                            (2.0 * hy);
                    else
                        e = (f.at(idx(ix, iy + 1), it) -
                             f.at(idx(ix, iy - 1), it)) /
                            (2.0 * hy);
                }
                gy.at(idx(ix, iy), it) = e;
            }
    }
}

double gradient_norm_sq(const SpaceTimeField& f, const SideGeometry& g,
                        int want_side, int nx, int ny, double hx, double hy) {
    SpaceTimeField gx, gy;
    spatial_gradient(f, nx, ny, hx, hy, gx, gy);
    return heaviside_norm_sq(gx, g, want_side) +
           heaviside_norm_sq(gy, g, want_side);
}

void check_support(const SpaceTimeField& f, const SideGeometry& g,
                   int want_side, const SidePair& u, const CarlemanWeight& w,
                   double r0) {
    double max_abs = 0.0;
    for (double v : f.data) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0.0) return;
    for (int iy = 0; iy < u.ny; ++iy)
        for (int ix = 0; ix < u.nx; ++ix) {
            std::size_t node = static_cast<std::size_t>(iy) * u.nx + ix;
            if (g.side[node] != want_side) continue;
            Vec2 x = {u.origin.x + ix * u.hx, u.origin.y + iy * u.hy};
            Vec2 dx = x - w.x0;
            for (std::size_t it = 0; it < f.nt; ++it) {
                double t = f.t0 + it * f.dt - w.t0;
                if (t * t + dot(dx, dx) <= r0 * r0) continue;
                if (std::abs(f.at(node, it)) > 1e-9 * max_abs)
                    throw ValidationError(
                        "carleman_sides: side data escapes the support ball "
                        "B((t0,x0), r0)");
            }
        }
}

// P^side v = d^2/dt^2 v + A_side v, zero extension in time outside the window
SpaceTimeField apply_P(const SpaceTimeField& v, const DiscreteOperator& A) {
    SpaceTimeField out = v;
    const double inv_dt2 = 1.0 / (v.dt * v.dt);
    std::vector<double> slice(A.n), Aslice(A.n);
    for (std::size_t it = 0; it < v.nt; ++it) {
        for (std::size_t node = 0; node < A.n; ++node)
            slice[node] = v.at(node, it);
        A.apply(slice.data(), Aslice.data());
        for (std::size_t node = 0; node < A.n; ++node) {
            double prev = it > 0 ? v.at(node, it - 1) : 0.0;
            double next = it + 1 < v.nt ? v.at(node, it + 1) : 0.0;
            out.at(node, it) =
                (next - 2.0 * v.at(node, it) + prev) * inv_dt2 + Aslice[node];
        }
    }
    return out;
}

DiscreteOperator side_operator(const SidePair& u, const MediumSpec& m,
                               Side side) {
    GridSpec gs;
    gs.nx_cells = u.nx + 1;
    gs.ny_cells = u.ny > 1 ? u.ny + 1 : 0;
    DiscreteOperator A = assemble(branch_medium(m, side), gs);
    if (A.nx != u.nx || A.ny != u.ny || std::abs(A.hx - u.hx) > 1e-12 ||
        std::abs(A.origin.x - u.origin.x) > 1e-12)
        throw ValidationError(
            "carleman_sides: side samples are not on the operator grid of "
            "the medium's domain");
    return A;
}

std::vector<double> phi_nodes_for(const SidePair& u, const SideGeometry& g,
                                  const CarlemanWeight& w, Side side) {
    std::vector<double> out(static_cast<std::size_t>(u.nx) * u.ny);
    for (int iy = 0; iy < u.ny; ++iy)
        for (int ix = 0; ix < u.nx; ++ix)
            out[static_cast<std::size_t>(iy) * u.nx + ix] =
                phi(g.x_n[ix], side, w);
    return out;
}

SpaceTimeField exp_weighted(const SpaceTimeField& v,
                            const std::vector<double>& phi_nodes, double tau) {
    SpaceTimeField out = v;
    for (std::size_t node = 0; node < v.nspace; ++node) {
        double e = std::exp(tau * phi_nodes[node]);
        for (std::size_t it = 0; it < v.nt; ++it)
            out.at(node, it) = v.at(node, it) * e;
    }
    return out;
}

}  // namespace

CarlemanBreakdown carleman_sides(const SidePair& u, const TransmissionData& td,
                                 const CarlemanWeight& w, double tau,
                                 const CarlemanConfig& cfg,
                                 const MediumSpec& m) {
    w.validate();
    if (!(tau >= 1.0)) throw ValidationError("carleman_sides: need tau >= 1");
    if (!(cfg.delta > 0.0) || !(cfg.d > 0.0) || !(cfg.r0 > 0.0))
        throw ValidationError("carleman_sides: delta, d, r0 must be positive");
    const std::size_t nspace = static_cast<std::size_t>(u.nx) * u.ny;
    if (u.u_minus.nspace != nspace || u.u_plus.nspace != nspace ||
        u.u_minus.nt != u.u_plus.nt || u.u_minus.nt < 3 ||
        u.u_minus.dt != u.u_plus.dt)
        throw ValidationError("carleman_sides: side fields disagree on the grid");

    SideGeometry g = side_geometry(u, m);
    check_support(u.u_minus, g, -1, u, w, cfg.r0);
    check_support(u.u_plus, g, +1, u, w, cfg.r0);

    const double lambda = 2.0 * tau / cfg.delta;
    const int pad = required_padding(lambda, u.u_minus.dt);

    DiscreteOperator A_minus = side_operator(u, m, Side::Minus);
    DiscreteOperator A_plus = side_operator(u, m, Side::Plus);
    std::vector<double> phi_m = phi_nodes_for(u, g, w, Side::Minus);
    std::vector<double> phi_p = phi_nodes_for(u, g, w, Side::Plus);

    CarlemanBreakdown out;
    auto side_terms = [&](const SpaceTimeField& v, const DiscreteOperator& A,
                          const std::vector<double>& phin, int sgn,
                          double& conj, double& rhs0, double& rhs1,
                          double& rem0, double& rem1) {
        SpaceTimeField padded = v;
        padded.padding = pad;
        SpaceTimeField Pv = apply_P(padded, A);
        SpaceTimeField QPv = apply_Qphi(Pv, tau, cfg.delta, phin);
        conj = heaviside_norm_sq(QPv, g, sgn);
        SpaceTimeField Qv = apply_Qphi(padded, tau, cfg.delta, phin);
        rhs0 = heaviside_norm_sq(Qv, g, sgn);
        rhs1 = gradient_norm_sq(Qv, g, sgn, u.nx, u.ny, u.hx, u.hy);
        SpaceTimeField Ev = exp_weighted(padded, phin, tau);
        rem0 = heaviside_norm_sq(Ev, g, sgn);
        rem1 = gradient_norm_sq(Ev, g, sgn, u.nx, u.ny, u.hx, u.hy);
    };

    double rhs0_m, rhs1_m, rem0_m, rem1_m;
    double rhs0_p, rhs1_p, rem0_p, rem1_p;
    side_terms(u.u_minus, A_minus, phi_m, -1, out.conjugated_minus, rhs0_m,
               rhs1_m, rem0_m, rem1_m);
    side_terms(u.u_plus, A_plus, phi_p, +1, out.conjugated_plus, rhs0_p,
               rhs1_p, rem0_p, rem1_p);

    const double tau3 = tau * tau * tau;
    out.rhs_zero_order = tau3 * (rhs0_m + rhs0_p);
    out.rhs_gradient = tau * (rhs1_m + rhs1_p);
    out.rhs = out.rhs_zero_order + out.rhs_gradient;
    out.remainder = std::exp(-cfg.d * tau) *
                    (tau3 * (rem0_m + rem0_p) + tau * (rem1_m + rem1_p));

    // interface term: on Sigma the weight is phi(0) = 0, so Q^phi reduces to
    // the Gaussian time regularization
    if (!td.theta.empty() || !td.Theta.empty()) {
        const std::size_t nt = u.u_minus.nt;
        const std::size_t ny = static_cast<std::size_t>(u.ny);
        if (td.theta.size() != nt * ny || td.Theta.size() != nt * ny)
            throw ValidationError(
                "carleman_sides: transmission traces not on the Sigma grid");
        const double wy = u.ny > 1 ? u.hy : 1.0;
        auto trace_norm_sq = [&](const std::vector<double>& row_data,
                                 bool tangential_derivative) {
            // optionally differentiate in the tangential (y) direction first
            std::vector<double> work(row_data);
            if (tangential_derivative) {
                if (u.ny <= 1) return 0.0;
                std::vector<double> der(nt * ny, 0.0);
                for (std::size_t iy = 0; iy < ny; ++iy)
                    for (std::size_t it = 0; it < nt; ++it) {
                        double d;
                        if (iy == 0)
                            d = (-3.0 * work[it] + 4.0 * work[nt + it] -
                                 work[2 * nt + it]) /
                                (2.0 * u.hy);
                        else if (iy + 1 == ny)
                            d = (3.0 * work[iy * nt + it] -
                                 4.0 * work[(iy - 1) * nt + it] +
                                 work[(iy - 2) * nt + it]) /
                                (2.0 * u.hy);
                        else
                            d = (work[(iy + 1) * nt + it] -
                                 work[(iy - 1) * nt + it]) /
                                (2.0 * u.hy);
                        der[iy * nt + it] = d;
                    }
                work = std::move(der);
            }
            double total = 0.0;
            TimeSignal sig;
            sig.dt = u.u_minus.dt;
            sig.t0 = u.u_minus.t0;
            sig.padding = pad;
            for (std::size_t iy = 0; iy < ny; ++iy) {
                sig.samples.assign(work.begin() + iy * nt,
                                   work.begin() + (iy + 1) * nt);
                TimeSignal reg = gaussian_regularize(sig, lambda);
                double acc = 0.0;
                for (std::size_t it = 0; it < nt; ++it) {
                    double wt = (it == 0 || it + 1 == nt) ? 0.5 : 1.0;
                    acc += wt * reg.samples[it] * reg.samples[it];
                }
                total += acc * sig.dt * wy;
            }
            return total;
        };
        out.T_theta = tau3 * trace_norm_sq(td.theta, false) +
                      tau * trace_norm_sq(td.theta, true) +
                      tau * trace_norm_sq(td.Theta, false);
    }

    out.lhs = out.conjugated_minus + out.conjugated_plus + out.remainder +
              out.T_theta;
    return out;
}

TransmissionData transmission_residuals(const SidePair& u,
                                        const MediumSpec& m) {
    const double xs = interface_abscissa(m);
    int mc = static_cast<int>(std::round((xs - u.origin.x) / u.hx - 0.5));
    if (mc < 2 || mc + 3 >= u.nx)
        throw ValidationError(
            "transmission_residuals: interface too close to the grid edge");
    auto xcol = [&](int ix) { return u.origin.x + ix * u.hx; };

    const std::size_t nt = u.u_minus.nt;
    TransmissionData td;
    td.theta.assign(nt * u.ny, 0.0);
    td.Theta.assign(nt * u.ny, 0.0);
    for (int iy = 0; iy < u.ny; ++iy) {
        double y = u.origin.y + iy * u.hy;
        double cm = c_at(m, {xs, y}, Side::Minus);
        double cp = c_at(m, {xs, y}, Side::Plus);
        for (std::size_t it = 0; it < nt; ++it) {
            auto fld = [&](const SpaceTimeField& f, int ix) {
                return f.at(static_cast<std::size_t>(iy) * u.nx + ix, it);
            };
            double vm, dm, vp, dp;
            lagrange3(xcol(mc - 2), xcol(mc - 1), xcol(mc),
                      fld(u.u_minus, mc - 2), fld(u.u_minus, mc - 1),
                      fld(u.u_minus, mc), xs, vm, dm);
            lagrange3(xcol(mc + 1), xcol(mc + 2), xcol(mc + 3),
                      fld(u.u_plus, mc + 1), fld(u.u_plus, mc + 2),
                      fld(u.u_plus, mc + 3), xs, vp, dp);
            td.theta[static_cast<std::size_t>(iy) * nt + it] = vm - vp;
            td.Theta[static_cast<std::size_t>(iy) * nt + it] =
                cm * dm - cp * dp;
        }
    }
    return td;
}

std::vector<CertificationRow> carleman_certify(
    const std::vector<SidePair>& family, const CarlemanWeight& w,
    const CarlemanConfig& cfg, const std::vector<double>& tau_grid,
    const MediumSpec& m) {
    if (family.empty() || tau_grid.empty())
        throw ValidationError("carleman_certify: empty family or tau grid");
    std::vector<CertificationRow> rows;
    rows.reserve(tau_grid.size());
    for (double tau : tau_grid) {
        CertificationRow row;
        row.tau = tau;
        bool any = false;
        for (const SidePair& member : family) {
            TransmissionData td = transmission_residuals(member, m);
            CarlemanBreakdown b = carleman_sides(member, td, w, tau, cfg, m);
            if (b.lhs <= 0.0 && b.rhs <= 0.0) continue;  // zero member
            if (b.lhs <= 0.0) {
                row.degenerate = true;
                row.C = kInf;
                continue;
            }
            any = true;
            row.C = std::max(row.C, b.rhs / b.lhs);
        }
        if (!any && !row.degenerate) row.degenerate = true;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace jumpwave
