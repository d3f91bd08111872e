#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "jumpwave/carleman.hpp"
#include "jumpwave/config.hpp"
#include "jumpwave/control.hpp"
#include "jumpwave/kernels.hpp"

namespace jumpwave {

namespace kernels {
bool use_parallel = true;
}

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Csv {
  public:
    Csv(const std::filesystem::path& path, const std::string& header) {
        out_.open(path, std::ios::binary);  // '\n' line ends on every platform
        if (!out_)
            throw ValidationError("cannot write output file " + path.string());
        out_ << header << "\n";
    }
    Csv& cell(double v) { return raw(fmt(v)); }
    Csv& cell(long v) { return raw(std::to_string(v)); }
    Csv& cell(int v) { return raw(std::to_string(v)); }
    Csv& cell(const std::string& s) { return raw(s); }
    void end_row() {
        out_ << line_ << "\n";
        line_.clear();
    }

  private:
    Csv& raw(const std::string& s) {
        if (!line_.empty()) line_ += ",";
        line_ += s;
        return *this;
    }
    std::ofstream out_;
    std::string line_;
};

double opt_num(const json& j, const std::string& key, double fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<double>();
}

long opt_int(const json& j, const std::string& key, long fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<long>();
}

double interface_x(const MediumSpec& m) {
    return m.interface.kind == InterfaceSpec::Kind::Point1D
               ? m.interface.point
               : m.interface.polyline.front().x;
}

ObservationRegion build_region(const json& r, const DiscreteOperator& A,
                               const Domain& dom) {
    if (r.contains("interval")) {
        ObservationRegion reg =
            interval_mask(A, r["interval"][0].get<double>(),
                          r["interval"][1].get<double>());
        if (std::find(reg.mask.begin(), reg.mask.end(), 1) == reg.mask.end())
            throw ValidationError("region: interval selects no grid node");
        return reg;
    }
    if (r.contains("box")) {
        const json& v = r["box"];
        ObservationRegion reg = box_mask(
            A, {v[0].get<double>(), v[1].get<double>()},
            {v[2].get<double>(), v[3].get<double>()});
        if (std::find(reg.mask.begin(), reg.mask.end(), 1) == reg.mask.end())
            throw ValidationError("region: box selects no grid node");
        return reg;
    }
    const json& b = r["boundary"];
    std::string edge = b["edge"].get<std::string>();
    BoundarySet bs;
    bs.edge = edge == "left"     ? BoundarySet::Edge::Left
              : edge == "right"  ? BoundarySet::Edge::Right
              : edge == "bottom" ? BoundarySet::Edge::Bottom
                                 : BoundarySet::Edge::Top;
    bool vertical = bs.edge == BoundarySet::Edge::Left ||
                    bs.edge == BoundarySet::Edge::Right;
    bs.lo = opt_num(b, "lo", vertical ? dom.y0 : dom.x0);
    bs.hi = opt_num(b, "hi", vertical ? dom.y1 : dom.x1);
    ObservationRegion reg;
    reg.boundary.push_back(bs);
    return reg;
}

WaveState build_init(const json& init, const DiscreteOperator& A,
                     const MediumSpec& med) {
    WaveState s;
    s.u.assign(A.n, 0.0);
    s.v.assign(A.n, 0.0);
    std::string kind = init["kind"].get<std::string>();
    if (kind == "mode") {
        std::size_t k = static_cast<std::size_t>(init["k"].get<long>());
        Spectrum sp = eigendecompose(A, k);
        const double* e = sp.vec(k - 1);
        s.u.assign(e, e + A.n);
        return s;
    }
    const json& c = init["center"];
    Vec2 xc = {c[0].get<double>(),
               c.size() > 1 ? c[1].get<double>() : 0.0};
    double sigma = init["sigma"].get<double>();
    double k = opt_num(init, "wavenumber", 0.0) * 2.0 * std::numbers::pi;
    Vec2 dir = {1.0, 0.0};
    if (init.contains("direction")) {
        dir = {init["direction"][0].get<double>(),
               init["direction"].size() > 1
                   ? init["direction"][1].get<double>()
                   : 0.0};
        double nd = norm(dir);
        if (!(nd > 0.0))
            throw ValidationError("init: zero direction vector");
        dir = (1.0 / nd) * dir;
    }
    double speed = std::sqrt(eval_c(med, xc, Side::Auto));
    for (int iy = 0; iy < A.ny; ++iy)
        for (int ix = 0; ix < A.nx; ++ix) {
            std::size_t i = static_cast<std::size_t>(iy) * A.nx + ix;
            Vec2 d = A.node(ix, iy) - xc;
            double env = std::exp(-dot(d, d) / (2.0 * sigma * sigma));
            if (k == 0.0) {
                s.u[i] = env;
                continue;
            }
            double ph = k * dot(dir, d);
            double denv = -dot(dir, d) / (sigma * sigma) * env;
            s.u[i] = env * std::cos(ph);
            s.v[i] = -speed * (denv * std::cos(ph) - k * env * std::sin(ph));
        }
    return s;
}

std::vector<WaveState> mode_ensemble(const DiscreteOperator& A,
                                     std::size_t modes, Spectrum& sp) {
    sp = eigendecompose(A, modes);
    std::vector<WaveState> out(modes);
    for (std::size_t k = 0; k < modes; ++k) {
        out[k].u.assign(sp.vec(k), sp.vec(k) + A.n);
        out[k].v.assign(A.n, 0.0);
    }
    return out;
}

ControlProblem build_problem(const json& p, const DiscreteOperator& A,
                             const Domain& dom, double cfl_fraction) {
    ControlProblem prob;
    prob.omega = build_region(p["omega"], A, dom);
    prob.T = p["T"].get<double>();
    prob.cfl_fraction = cfl_fraction;
    prob.dt = opt_num(p, "dt", 0.0);
    prob.eps_ctl = opt_num(p, "eps_ctl", 0.1);
    prob.hum.penalty = opt_num(p, "penalty", 1e-2);
    prob.hum.cg_tol = opt_num(p, "cg_tol", 1e-8);
    prob.hum.cg_max_iters = static_cast<int>(opt_int(p, "cg_max_iters", 200));
    prob.hum.bisection_steps =
        static_cast<int>(opt_int(p, "bisection_steps", 8));
    return prob;
}

CarlemanWeight build_weight(const json& p, const MediumSpec& med, double ratio,
                            double mu0) {
    const json w = p.contains("weight") ? p["weight"] : json::object();
    CarlemanWeight cw;
    cw.alpha_minus = opt_num(w, "alpha_minus", 1.0);
    cw.alpha_plus =
        opt_num(w, "alpha_plus", mu0 * mu0 * ratio * cw.alpha_minus);
    cw.beta = opt_num(w, "beta", 1.0);
    cw.delta_conv = opt_num(w, "delta_conv", 0.0);
    cw.t0 = opt_num(w, "t0", 0.0);
    cw.x0 = {interface_x(med), 0.5 * (med.domain.y0 + med.domain.y1)};
    if (med.domain.kind == Domain::Kind::Interval1D) cw.x0.y = 0.0;
    cw.validate();
    return cw;
}

// smooth radial cutoff supported in |rho| < 1, equal to 1 at 0
double radial_cutoff(double rho) {
    double r2 = rho * rho;
    if (r2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r2 * r2));
}

std::vector<SidePair> random_bump_family(const ExperimentConfig& cfg,
                                         const CarlemanWeight& w, double r0,
                                         int bumps, int nt) {
    const MediumSpec& med = cfg.medium;
    const Domain& dom = med.domain;
    const bool two_d = dom.kind == Domain::Kind::Rectangle2D;
    const double xs = interface_x(med);
    if (xs - r0 <= dom.x0 || xs + r0 >= dom.x1)
        throw ValidationError(
            "carleman-certify: support ball B(r0) leaves the domain");

    const int nx = cfg.grid.nx_cells - 1;
    const int ny = two_d ? cfg.grid.ny_cells - 1 : 1;
    SidePair base;
    base.nx = nx;
    base.ny = ny;
    base.hx = (dom.x1 - dom.x0) / cfg.grid.nx_cells;
    base.hy = two_d ? (dom.y1 - dom.y0) / cfg.grid.ny_cells : 1.0;
    base.origin = {dom.x0 + base.hx, two_d ? dom.y0 + base.hy : 0.0};
    const double t_half = 1.1 * r0;
    const double dt = 2.0 * t_half / (nt - 1);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<SidePair> family;
    family.reserve(bumps);
    for (int b = 0; b < bumps; ++b) {
        SidePair sp = base;
        for (SpaceTimeField* f : {&sp.u_minus, &sp.u_plus}) {
            *f = SpaceTimeField::zeros(
                static_cast<std::size_t>(nt),
                static_cast<std::size_t>(nx) * ny, dt, w.t0 - t_half, 0);
            struct Blob {
                double a, tc, xc, yc, sg, om, kp, ph;
            } blob[2];
            for (Blob& bl : blob) {
                bl.a = 0.5 + uni(rng);
                bl.tc = w.t0 + (uni(rng) - 0.5) * 0.6 * r0;
                bl.xc = w.x0.x + (uni(rng) - 0.5) * 0.6 * r0;
                bl.yc = w.x0.y + (two_d ? (uni(rng) - 0.5) * 0.6 * r0 : 0.0);
                bl.sg = (0.1 + 0.1 * uni(rng)) * r0;
                bl.om = 3.0 * uni(rng) / r0;
                bl.kp = 3.0 * uni(rng) / r0;
                bl.ph = 2.0 * std::numbers::pi * uni(rng);
            }
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    std::size_t node = static_cast<std::size_t>(iy) * nx + ix;
                    Vec2 x = {base.origin.x + ix * base.hx,
                              base.origin.y + iy * base.hy};
                    Vec2 dx = x - w.x0;
                    for (int it = 0; it < nt; ++it) {
                        double t = w.t0 - t_half + it * dt;
                        double rr = std::sqrt((t - w.t0) * (t - w.t0) +
                                              dot(dx, dx));
                        double cut = radial_cutoff(rr / (0.9 * r0));
                        if (cut == 0.0) continue;
                        double v = 0.0;
                        for (const Blob& bl : blob) {
                            double q = (t - bl.tc) * (t - bl.tc) +
                                       (x.x - bl.xc) * (x.x - bl.xc) +
                                       (x.y - bl.yc) * (x.y - bl.yc);
                            v += bl.a *
                                 std::exp(-q / (2.0 * bl.sg * bl.sg)) *
                                 std::cos(bl.om * t + bl.kp * x.x + bl.ph);
                        }
                        f->at(node, static_cast<std::size_t>(it)) = cut * v;
                    }
                }
        }
        family.push_back(std::move(sp));
    }
    return family;
}

// ---- task runners ----

void run_simulate(const ExperimentConfig& cfg,
                  const std::filesystem::path& out) {
    DiscreteOperator A = assemble(cfg.medium, cfg.grid);
    WaveState init = build_init(cfg.params["init"], A, cfg.medium);
    SimConfig sc;
    sc.T = cfg.params["T"].get<double>();
    sc.dt = opt_num(cfg.params, "dt", 0.0);
    sc.cfl_fraction = cfg.cfl_fraction;
    sc.snapshot_stride =
        static_cast<int>(opt_int(cfg.params, "snapshot_stride", 1));
    Trajectory traj = simulate(A, init, sc);

    Csv energy_csv(out / "energy.csv", "step,energy");
    for (std::size_t i = 0; i < traj.energy.size(); ++i) {
        energy_csv.cell(static_cast<long>(i + 1)).cell(traj.energy[i]);
        energy_csv.end_row();
    }
    Csv state_csv(out / "final_state.csv", "x,y,u,v");
    for (int iy = 0; iy < A.ny; ++iy)
        for (int ix = 0; ix < A.nx; ++ix) {
            std::size_t i = static_cast<std::size_t>(iy) * A.nx + ix;
            Vec2 p = A.node(ix, iy);
            state_csv.cell(p.x).cell(p.y).cell(traj.final_state.u[i]).cell(
                traj.final_state.v[i]);
            state_csv.end_row();
        }
    TransmissionReport rep = check_transmission(traj, A, cfg.medium);
    Csv trans_csv(out / "transmission.csv",
                  "displacement_jump,harmonic_flux_jump,one_sided_flux_jump");
    trans_csv.cell(rep.displacement_jump)
        .cell(rep.harmonic_flux_jump)
        .cell(rep.one_sided_flux_jump);
    trans_csv.end_row();
}

void run_distance(const ExperimentConfig& cfg,
                  const std::filesystem::path& out) {
    const json& p = cfg.params;
    const json& src = p["source"];
    DistanceOptions opt;
    opt.resolution = opt_num(
        p, "resolution",
        (cfg.medium.domain.x1 - cfg.medium.domain.x0) / cfg.grid.nx_cells);
    opt.stencil_radius = static_cast<int>(opt_int(p, "stencil_radius", 8));

    std::function<bool(Vec2)> pred;
    if (src.contains("point")) {
        Vec2 pt = {src["point"][0].get<double>(),
                   src["point"].size() > 1 ? src["point"][1].get<double>()
                                           : 0.0};
        double tol = 0.75 * opt.resolution;
        pred = [pt, tol](Vec2 x) { return norm(x - pt) <= tol; };
    } else if (src.contains("interval")) {
        double a = src["interval"][0].get<double>();
        double b = src["interval"][1].get<double>();
        pred = [a, b](Vec2 x) { return x.x >= a && x.x <= b; };
    } else {
        const json& v = src["box"];
        double ax = v[0].get<double>(), ay = v[1].get<double>();
        double bx = v[2].get<double>(), by = v[3].get<double>();
        pred = [=](Vec2 x) {
            return x.x >= ax && x.x <= bx && x.y >= ay && x.y <= by;
        };
    }
    DistanceField field = distance_field(pred, cfg.medium, opt);
    Csv dist_csv(out / "distance.csv", "x,y,dist");
    double L = 0.0;
    for (int iy = 0; iy < field.ny; ++iy)
        for (int ix = 0; ix < field.nx; ++ix) {
            Vec2 x = field.node(ix, iy);
            double v = field.value[static_cast<std::size_t>(iy) * field.nx + ix];
            L = std::max(L, v);
            dist_csv.cell(x.x).cell(x.y).cell(v);
            dist_csv.end_row();
        }
    Csv sum_csv(out / "summary.csv", "largest_distance");
    sum_csv.cell(L);
    sum_csv.end_row();
}

void run_spectrum(const ExperimentConfig& cfg,
                  const std::filesystem::path& out) {
    DiscreteOperator A = assemble(cfg.medium, cfg.grid);
    std::size_t count =
        static_cast<std::size_t>(opt_int(cfg.params, "count", 16));
    Spectrum sp = eigendecompose(A, count);
    Csv spec_csv(out / "spectrum.csv", "k,lambda");
    for (std::size_t k = 0; k < sp.k; ++k) {
        spec_csv.cell(static_cast<long>(k + 1)).cell(sp.lambda[k]);
        spec_csv.end_row();
    }
    if (cfg.params.contains("init")) {
        WaveState init = build_init(cfg.params["init"], A, cfg.medium);
        Csv freq_csv(out / "frequency.csv", "typical_frequency");
        freq_csv.cell(typical_frequency(init.u, init.v, sp));
        freq_csv.end_row();
    }
}

void run_observe(const ExperimentConfig& cfg,
                 const std::filesystem::path& out) {
    DiscreteOperator A = assemble(cfg.medium, cfg.grid);
    ControlProblem prob = build_problem(cfg.params, A, cfg.medium.domain,
                                        cfg.cfl_fraction);
    WaveState init = build_init(cfg.params["init"], A, cfg.medium);
    Csv obs_csv(out / "observe.csv", "observation");
    obs_csv.cell(observe(init, prob, A));
    obs_csv.end_row();
}

void run_uc_check(const ExperimentConfig& cfg,
                  const std::filesystem::path& out) {
    const json& p = cfg.params;
    DiscreteOperator A = assemble(cfg.medium, cfg.grid);
    ControlProblem prob =
        build_problem(p, A, cfg.medium.domain, cfg.cfl_fraction);
    std::size_t modes = static_cast<std::size_t>(opt_int(p, "modes", 10));
    Spectrum sp;
    std::vector<WaveState> ensemble = mode_ensemble(A, modes, sp);
    std::vector<double> mu = p["mu"].get<std::vector<double>>();
    double kappa = opt_num(p, "kappa", 1.0);

    double L = opt_num(p, "L_omega", -1.0);
    if (L <= 0.0 && p["omega"].contains("interval")) {
        double a = p["omega"]["interval"][0].get<double>();
        double b = p["omega"]["interval"][1].get<double>();
        DistanceOptions dopt;
        dopt.resolution =
            (cfg.medium.domain.x1 - cfg.medium.domain.x0) / cfg.grid.nx_cells;
        L = largest_distance(
            [a, b](Vec2 x) { return x.x >= a && x.x <= b; }, cfg.medium, dopt);
    }
    ObservabilityReport rep =
        quant_uc_check(ensemble, prob, mu, kappa, A, sp, L);
    Csv uc_csv(out / "uc_check.csv", "mu,C");
    for (std::size_t i = 0; i < rep.mu.size(); ++i) {
        uc_csv.cell(rep.mu[i]).cell(rep.C[i]);
        uc_csv.end_row();
    }
    Csv sum_csv(out / "summary.csv",
                "kappa,T,L_omega,ensemble,below_threshold,all_feasible");
    sum_csv.cell(rep.kappa)
        .cell(rep.T)
        .cell(L)
        .cell(static_cast<long>(rep.ensemble_size))
        .cell(rep.time_below_threshold ? 1 : 0)
        .cell(rep.all_feasible ? 1 : 0);
    sum_csv.end_row();
}

void run_stability(const ExperimentConfig& cfg,
                   const std::filesystem::path& out) {
    DiscreteOperator A = assemble(cfg.medium, cfg.grid);
    ControlProblem prob = build_problem(cfg.params, A, cfg.medium.domain,
                                        cfg.cfl_fraction);
    std::size_t modes =
        static_cast<std::size_t>(opt_int(cfg.params, "modes", 10));
    Spectrum sp;
    std::vector<WaveState> ensemble = mode_ensemble(A, modes, sp);
    StabilityReport rep = stability_check(ensemble, prob, A, sp);
    Csv csv(out / "stability.csv",
            "C_exponential,C_log,binding_member,skipped_zero_observation");
    csv.cell(rep.C_exponential)
        .cell(rep.C_log)
        .cell(static_cast<long>(rep.binding_member))
        .cell(static_cast<long>(rep.skipped_zero_observation));
    csv.end_row();
}

void run_hum(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    DiscreteOperator A = assemble(cfg.medium, cfg.grid);
    ControlProblem prob = build_problem(cfg.params, A, cfg.medium.domain,
                                        cfg.cfl_fraction);
    prob.eps_ctl = cfg.params["eps_ctl"].get<double>();
    WaveState init = build_init(cfg.params["init"], A, cfg.medium);
    HumResult res = hum_control(init, prob, A);
    Csv csv(out / "hum.csv",
            "cost,achieved_ratio,penalty_used,cg_iterations,achieved");
    csv.cell(res.cost)
        .cell(res.achieved_ratio)
        .cell(res.penalty_used)
        .cell(res.cg_iterations)
        .cell(res.achieved ? 1 : 0);
    csv.end_row();
    Csv jh(out / "j_history.csv", "iteration,J");
    for (std::size_t i = 0; i < res.J_history.size(); ++i) {
        jh.cell(static_cast<long>(i)).cell(res.J_history[i]);
        jh.end_row();
    }
    if (!res.achieved)
        throw NumericError(
            "hum: target terminal ratio not reached within the bisection "
            "budget (partial result written)");
}

void run_cost_curve(const ExperimentConfig& cfg,
                    const std::filesystem::path& out) {
    DiscreteOperator A = assemble(cfg.medium, cfg.grid);
    ControlProblem prob = build_problem(cfg.params, A, cfg.medium.domain,
                                        cfg.cfl_fraction);
    WaveState init = build_init(cfg.params["init"], A, cfg.medium);
    std::vector<double> eps = cfg.params["eps"].get<std::vector<double>>();
    CostCurve curve = cost_curve(init, prob, eps, A);
    Csv csv(out / "cost_curve.csv", "eps,cost,achieved_ratio,ok");
    for (std::size_t i = 0; i < curve.eps.size(); ++i) {
        csv.cell(curve.eps[i])
            .cell(curve.cost[i])
            .cell(curve.achieved[i])
            .cell(static_cast<int>(curve.ok[i]));
        csv.end_row();
    }
    Csv fit(out / "fit.csv", "slope,intercept,residual");
    fit.cell(curve.fit_slope).cell(curve.fit_intercept).cell(curve.fit_residual);
    fit.end_row();
}

void run_carleman_regions(const ExperimentConfig& cfg,
                          const std::filesystem::path& out) {
    const json& p = cfg.params;
    double eps = opt_num(p, "eps", 0.1);
    double ext = opt_num(p, "extent", 2.0);
    int n = static_cast<int>(opt_int(p, "n", 64));
    Vec2 x = {interface_x(cfg.medium),
              0.5 * (cfg.medium.domain.y0 + cfg.medium.domain.y1)};
    if (cfg.medium.domain.kind == Domain::Kind::Interval1D) x.y = 0.0;
    if (p.contains("x"))
        x = {p["x"][0].get<double>(),
             p["x"].size() > 1 ? p["x"][1].get<double>() : 0.0};

    Csv csv(out / "regions.csv",
            "xi_prime,xi_t,E_minus,E_plus,GH_minus,GH_plus,m_minus,m_plus");
    const double nan = std::nan("");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double xp = -ext + 2.0 * ext * i / (n - 1);
            double xt = -ext + 2.0 * ext * j / (n - 1);
            if (xp == 0.0 && xt == 0.0) continue;
            MicrolocalPoint pt{x, xp, xt, 1.0};
            RegionTags tags = classify(pt, cfg.medium, eps);
            EllipticRoots m = compute_m(pt, cfg.medium, eps);
            csv.cell(xp)
                .cell(xt)
                .cell(tags.E_minus ? 1 : 0)
                .cell(tags.E_plus ? 1 : 0)
                .cell(tags.GH_minus ? 1 : 0)
                .cell(tags.GH_plus ? 1 : 0)
                .cell(m.m_minus ? *m.m_minus : nan)
                .cell(m.m_plus ? *m.m_plus : nan);
            csv.end_row();
        }
}

void run_carleman_weights(const ExperimentConfig& cfg,
                          const std::filesystem::path& out) {
    const json& p = cfg.params;
    double eps = opt_num(p, "eps", 0.1);
    double mu = opt_num(p, "mu", 1.1);
    double mu0 = opt_num(p, "mu0", 1.3);
    double ratio = geometric_alpha_ratio(cfg.medium, eps);
    CarlemanWeight w = build_weight(p, cfg.medium, ratio, mu0);

    GammaCoverGrid grid;
    grid.eta = opt_num(p, "eta", 0.1);
    grid.xn_points = static_cast<int>(opt_int(p, "xn_points", 9));
    grid.sphere_points = static_cast<int>(opt_int(p, "sphere_points", 720));
    grid.tau_values = p["tau"].get<std::vector<double>>();

    GammaCoverReport cover = check_gamma_cover(w, cfg.medium, eps, mu, mu0, grid);
    double subell = check_subellipticity(w, cfg.medium, eps, mu, grid);
    double convex = std::nan("");
    if (w.delta_conv > 0.0) {
        double R = opt_num(p, "R", 1.0);
        double delta = opt_num(p, "delta", w.delta_conv * R * R / 40.0);
        convex = check_convexification(w, R, delta) ? 1.0 : 0.0;
    }

    Csv wcsv(out / "weights.csv", "x_n,phi,phi_prime");
    int nsamp = 65;
    for (int i = 0; i < nsamp; ++i) {
        double xn = -grid.eta + 2.0 * grid.eta * i / (nsamp - 1);
        wcsv.cell(xn)
            .cell(phi(xn, Side::Auto, w))
            .cell(phi_prime(xn, Side::Auto, w));
        wcsv.end_row();
    }
    Csv rcsv(out / "report.csv",
             "sup_ratio,alpha_minus,alpha_plus,beta,cover_holds,C,tau0,"
             "subellipticity_margin,convexification,witness_xi_prime,"
             "witness_xi_t,witness_tau");
    const double nan = std::nan("");
    rcsv.cell(ratio)
        .cell(w.alpha_minus)
        .cell(w.alpha_plus)
        .cell(w.beta)
        .cell(cover.cover_holds ? 1 : 0)
        .cell(cover.C)
        .cell(cover.tau0)
        .cell(subell)
        .cell(convex)
        .cell(cover.has_witness ? cover.witness.xi_prime : nan)
        .cell(cover.has_witness ? cover.witness.xi_t : nan)
        .cell(cover.has_witness ? cover.witness.tau : nan);
    rcsv.end_row();
}

void run_carleman_certify(const ExperimentConfig& cfg,
                          const std::filesystem::path& out) {
    const json& p = cfg.params;
    CarlemanConfig cc;
    cc.delta = opt_num(p, "delta", 0.5);
    cc.d = opt_num(p, "d", 8.0 * cc.delta);
    cc.r0 = opt_num(p, "r0", 0.25);
    cc.eps = opt_num(p, "eps", 0.1);
    double mu0 = opt_num(p, "mu0", 1.3);
    double ratio = geometric_alpha_ratio(cfg.medium, cc.eps);
    CarlemanWeight w = build_weight(p, cfg.medium, ratio, mu0);
    int bumps = static_cast<int>(opt_int(p, "bumps", 20));
    int nt = static_cast<int>(opt_int(p, "nt", 128));
    std::vector<double> taus = p["tau"].get<std::vector<double>>();

    std::vector<SidePair> family = random_bump_family(cfg, w, cc.r0, bumps, nt);
    std::vector<CertificationRow> rows =
        carleman_certify(family, w, cc, taus, cfg.medium);
    Csv csv(out / "certify.csv", "tau,C,degenerate");
    for (const CertificationRow& r : rows) {
        csv.cell(r.tau).cell(r.C).cell(r.degenerate ? 1 : 0);
        csv.end_row();
    }
}

void run_trapping(const ExperimentConfig& cfg,
                  const std::filesystem::path& out) {
    double angle =
        cfg.params["angle_deg"].get<double>() * std::numbers::pi / 180.0;
    double frequency = cfg.params["frequency"].get<double>();
    TrappingReport rep = trapping_demo(cfg.medium, angle, frequency, cfg.grid);
    Csv csv(out / "trapping.csv",
            "reflected,transmitted,residual,analytic_reflected,"
            "analytic_transmitted,critical_angle_deg,evanescent");
    csv.cell(rep.reflected_fraction)
        .cell(rep.transmitted_fraction)
        .cell(rep.residual_fraction)
        .cell(rep.analytic_reflected)
        .cell(rep.analytic_transmitted)
        .cell(rep.critical_angle * 180.0 / std::numbers::pi)
        .cell(rep.evanescent ? 1 : 0);
    csv.end_row();
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    validate_experiment(cfg);
    if (const char* cap = std::getenv("JUMPWAVE_THREADS")) {
        int t = std::atoi(cap);
        if (t < 1)
            throw ValidationError("JUMPWAVE_THREADS must be a positive integer");
        omp_set_num_threads(t);
    }

    std::filesystem::path out(out_dir.empty() ? cfg.output_dir : out_dir);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec)
        throw ValidationError("cannot create output directory " + out.string());

    auto t0 = std::chrono::steady_clock::now();
    if (cfg.task == "simulate")
        run_simulate(cfg, out);
    else if (cfg.task == "distance")
        run_distance(cfg, out);
    else if (cfg.task == "spectrum")
        run_spectrum(cfg, out);
    else if (cfg.task == "observe")
        run_observe(cfg, out);
    else if (cfg.task == "uc-check")
        run_uc_check(cfg, out);
    else if (cfg.task == "stability")
        run_stability(cfg, out);
    else if (cfg.task == "hum")
        run_hum(cfg, out);
    else if (cfg.task == "cost-curve")
        run_cost_curve(cfg, out);
    else if (cfg.task == "carleman-regions")
        run_carleman_regions(cfg, out);
    else if (cfg.task == "carleman-weights")
        run_carleman_weights(cfg, out);
    else if (cfg.task == "carleman-certify")
        run_carleman_certify(cfg, out);
    else if (cfg.task == "trapping")
        run_trapping(cfg, out);
    else
        throw ValidationError("unknown task '" + cfg.task + "'");
    auto t1 = std::chrono::steady_clock::now();

    json manifest;
    manifest["config"] = cfg.raw;
    manifest["version"] = jumpwave_version();
    manifest["timings"]["total_seconds"] =
        std::chrono::duration<double>(t1 - t0).count();
    std::ofstream mf(out / "manifest.json", std::ios::binary);
    mf << manifest.dump(2) << "\n";
}

}  // namespace jumpwave
