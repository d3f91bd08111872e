#include "jumpwave/config.hpp"

#include <fstream>
#include <set>

namespace jumpwave {

using nlohmann::json;

namespace {

const std::set<std::string> kTasks = {
    "simulate",        "distance",  "spectrum",         "observe",
    "uc-check",        "stability", "hum",              "cost-curve",
    "carleman-regions", "carleman-weights", "carleman-certify", "trapping"};

const json& need(const json& j, const std::string& key,
                 const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw ValidationError("config: missing '" + key + "' in " + where);
    return *it;
}

double need_num(const json& j, const std::string& key,
                const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_number())
        throw ValidationError("config: '" + key + "' in " + where +
                              " must be a number");
    return v.get<double>();
}

double opt_num(const json& j, const std::string& key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number())
        throw ValidationError("config: '" + key + "' must be a number");
    return it->get<double>();
}

long opt_int(const json& j, const std::string& key, long fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer())
        throw ValidationError("config: '" + key + "' must be an integer");
    return it->get<long>();
}

void check_region(const json& r, const std::string& where, bool two_d) {
    if (!r.is_object())
        throw ValidationError("config: region in " + where +
                              " must be an object");
    int forms = 0;
    if (r.contains("interval")) {
        ++forms;
        const json& v = r["interval"];
        if (!v.is_array() || v.size() != 2 || !(v[0].get<double>() <
                                                v[1].get<double>()))
            throw ValidationError("config: 'interval' in " + where +
                                  " must be [a, b] with a < b");
    }
    if (r.contains("box")) {
        ++forms;
        const json& v = r["box"];
        if (!two_d)
            throw ValidationError("config: 'box' region needs a 2D medium");
        if (!v.is_array() || v.size() != 4)
            throw ValidationError("config: 'box' in " + where +
                                  " must be [ax, ay, bx, by]");
    }
    if (r.contains("boundary")) {
        ++forms;
        const json& v = r["boundary"];
        std::string edge = need(v, "edge", where).get<std::string>();
        if (edge != "left" && edge != "right" && edge != "bottom" &&
            edge != "top")
            throw ValidationError("config: boundary edge in " + where +
                                  " must be left/right/bottom/top");
    }
    if (forms != 1)
        throw ValidationError("config: region in " + where +
                              " needs exactly one of interval/box/boundary");
}

void check_init(const json& init, const std::string& where, bool two_d) {
    std::string kind = need(init, "kind", where).get<std::string>();
    if (kind == "mode") {
        long k = opt_int(init, "k", 0);
        if (k < 1)
            throw ValidationError("config: mode init needs integer k >= 1");
    } else if (kind == "gaussian" || kind == "packet") {
        const json& c = need(init, "center", where);
        std::size_t want = two_d ? 2 : 1;
        if (!c.is_array() || c.size() != want)
            throw ValidationError("config: init center has wrong dimension");
        if (!(need_num(init, "sigma", where) > 0.0))
            throw ValidationError("config: init sigma must be positive");
        if (kind == "packet" && !(need_num(init, "wavenumber", where) > 0.0))
            throw ValidationError("config: packet wavenumber must be positive");
    } else {
        throw ValidationError("config: init kind must be mode/gaussian/packet");
    }
}

void check_weight(const json& w, const std::string& where) {
    double am = opt_num(w, "alpha_minus", 1.0);
    double beta = opt_num(w, "beta", 1.0);
    if (!(am > 0.0) || !(beta > 0.0))
        throw ValidationError("config: weight in " + where +
                              " needs alpha_minus > 0 and beta > 0");
    if (w.contains("alpha_plus") && !(opt_num(w, "alpha_plus", 0.0) > am))
        throw ValidationError("config: weight alpha_plus must exceed alpha_minus");
}

std::vector<double> need_grid_values(const json& j, const std::string& key,
                                     const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_array() || v.empty())
        throw ValidationError("config: '" + key + "' in " + where +
                              " must be a nonempty array");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number())
            throw ValidationError("config: '" + key + "' entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config: root must be an object");
    ExperimentConfig cfg;
    cfg.raw = j;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw ValidationError("config: 'seed' must be an integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output")) {
        if (!j["output"].is_string())
            throw ValidationError("config: 'output' must be a string");
        cfg.output_dir = j["output"].get<std::string>();
    }

    const json& med = need(j, "medium", "root");
    const json& dom = need(med, "domain", "medium");
    std::string kind = need(dom, "kind", "medium.domain").get<std::string>();
    Domain d;
    d.x0 = need_num(dom, "x0", "medium.domain");
    d.x1 = need_num(dom, "x1", "medium.domain");
    if (kind == "interval") {
        d.kind = Domain::Kind::Interval1D;
    } else if (kind == "rectangle") {
        d.kind = Domain::Kind::Rectangle2D;
        d.y0 = need_num(dom, "y0", "medium.domain");
        d.y1 = need_num(dom, "y1", "medium.domain");
    } else {
        throw ValidationError("config: domain kind must be interval/rectangle");
    }
    d.validate();

    double xs = need_num(med, "interface", "medium");
    InterfaceSpec iface;
    if (d.kind == Domain::Kind::Interval1D) {
        iface.kind = InterfaceSpec::Kind::Point1D;
        iface.point = xs;
    } else {
        iface = InterfaceSpec::vertical_line(xs, d.y0, d.y1);
    }

    double cm = need_num(med, "c_minus", "medium");
    double cp = need_num(med, "c_plus", "medium");
    double b = opt_num(med, "b", 1.0);
    if (!(cm > 0.0) || !(cp > 0.0) || !(b > 0.0))
        throw ValidationError("config: c_minus, c_plus, b must be positive");

    cfg.medium.domain = d;
    cfg.medium.interface = iface;
    cfg.medium.coefficient = PiecewiseCoefficient::constants(cm, cp);
    cfg.medium.tangential_form = [b](Vec2) { return b; };
    cfg.medium.b1 = b;
    cfg.medium.b2 = b;
    cfg.medium.validate();

    const json& grid = need(j, "grid", "root");
    cfg.grid.nx_cells = static_cast<int>(opt_int(grid, "nx", 256));
    cfg.grid.ny_cells = static_cast<int>(opt_int(grid, "ny", 0));
    cfg.cfl_fraction = opt_num(grid, "cfl_fraction", 0.9);
    if (cfg.grid.nx_cells < 4 || cfg.grid.ny_cells < 0)
        throw ValidationError("config: grid nx must be >= 4, ny >= 0");
    if ((d.kind == Domain::Kind::Rectangle2D) != (cfg.grid.ny_cells > 0))
        throw ValidationError("config: grid ny must match the domain dimension");
    if (!(cfg.cfl_fraction > 0.0 && cfg.cfl_fraction <= 1.0))
        throw ValidationError("config: cfl_fraction must be in (0,1]");

    const json& task = need(j, "task", "root");
    cfg.task = need(task, "name", "task").get<std::string>();
    if (kTasks.find(cfg.task) == kTasks.end())
        throw ValidationError("config: unknown task '" + cfg.task + "'");
    cfg.params = task;
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("config: cannot read '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
    return parse_config_json(j);
}

void validate_experiment(const ExperimentConfig& cfg) {
    const json& p = cfg.params;
    const bool two_d = cfg.medium.domain.kind == Domain::Kind::Rectangle2D;
    auto need_T = [&]() {
        if (!(need_num(p, "T", cfg.task) > 0.0))
            throw ValidationError("config: T must be positive");
    };

    if (cfg.task == "simulate") {
        need_T();
        check_init(need(p, "init", cfg.task), cfg.task, two_d);
        if (opt_num(p, "dt", 0.0) < 0.0)
            throw ValidationError("config: dt must be nonnegative");
        if (opt_int(p, "snapshot_stride", 1) < 1)
            throw ValidationError("config: snapshot_stride must be >= 1");
    } else if (cfg.task == "distance") {
        const json& src = need(p, "source", cfg.task);
        if (src.contains("point")) {
            const json& v = src["point"];
            if (!v.is_array() || v.size() != (two_d ? 2u : 1u))
                throw ValidationError("config: source point has wrong dimension");
        } else {
            check_region(src, "distance.source", two_d);
            if (src.contains("boundary"))
                throw ValidationError(
                    "config: distance source must be an interior set");
        }
        if (!(opt_num(p, "resolution", 1.0 / cfg.grid.nx_cells) > 0.0))
            throw ValidationError("config: resolution must be positive");
        if (opt_int(p, "stencil_radius", 8) < 1)
            throw ValidationError("config: stencil_radius must be >= 1");
    } else if (cfg.task == "spectrum") {
        long k = opt_int(p, "count", 16);
        if (k < 1) throw ValidationError("config: spectrum count must be >= 1");
        if (p.contains("init")) check_init(p["init"], cfg.task, two_d);
    } else if (cfg.task == "observe") {
        need_T();
        check_region(need(p, "omega", cfg.task), cfg.task, two_d);
        check_init(need(p, "init", cfg.task), cfg.task, two_d);
    } else if (cfg.task == "uc-check") {
        need_T();
        check_region(need(p, "omega", cfg.task), cfg.task, two_d);
        if (opt_int(p, "modes", 10) < 1)
            throw ValidationError("config: modes must be >= 1");
        for (double mu : need_grid_values(p, "mu", cfg.task))
            if (!(mu > 0.0))
                throw ValidationError("config: mu values must be positive");
        if (!(opt_num(p, "kappa", 1.0) >= 0.0))
            throw ValidationError("config: kappa must be nonnegative");
    } else if (cfg.task == "stability") {
        need_T();
        check_region(need(p, "omega", cfg.task), cfg.task, two_d);
        if (opt_int(p, "modes", 10) < 1)
            throw ValidationError("config: modes must be >= 1");
    } else if (cfg.task == "hum" || cfg.task == "cost-curve") {
        need_T();
        check_region(need(p, "omega", cfg.task), cfg.task, two_d);
        if (need(p, "omega", cfg.task).contains("boundary"))
            throw ValidationError("config: control region must be interior");
        check_init(need(p, "init", cfg.task), cfg.task, two_d);
        if (cfg.task == "hum") {
            double e = need_num(p, "eps_ctl", cfg.task);
            if (!(e > 0.0 && e < 1.0))
                throw ValidationError("config: eps_ctl must lie in (0,1)");
        } else {
            std::vector<double> eps = need_grid_values(p, "eps", cfg.task);
            for (std::size_t i = 0; i < eps.size(); ++i) {
                if (!(eps[i] > 0.0 && eps[i] < 1.0))
                    throw ValidationError("config: eps values must lie in (0,1)");
                if (i > 0 && !(eps[i] < eps[i - 1]))
                    throw ValidationError(
                        "config: eps list must be strictly decreasing");
            }
        }
        if (!(opt_num(p, "penalty", 1e-2) > 0.0) ||
            !(opt_num(p, "cg_tol", 1e-8) > 0.0) ||
            opt_int(p, "cg_max_iters", 200) < 1 ||
            opt_int(p, "bisection_steps", 8) < 0)
            throw ValidationError("config: bad HUM options");
    } else if (cfg.task == "carleman-regions") {
        if (!(opt_num(p, "eps", 0.1) > 0.0))
            throw ValidationError("config: eps must be positive");
        if (!(opt_num(p, "extent", 2.0) > 0.0) || opt_int(p, "n", 64) < 2)
            throw ValidationError("config: bad frequency grid");
    } else if (cfg.task == "carleman-weights") {
        check_weight(p.contains("weight") ? p["weight"] : json::object(),
                     cfg.task);
        double mu = opt_num(p, "mu", 1.1), mu0 = opt_num(p, "mu0", 1.3);
        if (!(1.0 < mu && mu < mu0))
            throw ValidationError("config: need 1 < mu < mu0");
        if (!(opt_num(p, "eps", 0.1) > 0.0) || !(opt_num(p, "eta", 0.1) > 0.0))
            throw ValidationError("config: eps, eta must be positive");
        for (double t : need_grid_values(p, "tau", cfg.task))
            if (!(t >= 1.0))
                throw ValidationError("config: tau values must be >= 1");
    } else if (cfg.task == "carleman-certify") {
        check_weight(p.contains("weight") ? p["weight"] : json::object(),
                     cfg.task);
        if (opt_int(p, "bumps", 20) < 1)
            throw ValidationError("config: bumps must be >= 1");
        if (opt_int(p, "nt", 128) < 8)
            throw ValidationError("config: nt must be >= 8");
        if (!(opt_num(p, "delta", 0.5) > 0.0) ||
            !(opt_num(p, "r0", 0.25) > 0.0) || !(opt_num(p, "d", 4.0) > 0.0))
            throw ValidationError("config: delta, d, r0 must be positive");
        for (double t : need_grid_values(p, "tau", cfg.task))
            if (!(t >= 1.0))
                throw ValidationError("config: tau values must be >= 1");
    } else if (cfg.task == "trapping") {
        if (!two_d)
            throw ValidationError("config: trapping needs a 2D medium");
        double a = need_num(p, "angle_deg", cfg.task);
        if (!(a >= 0.0 && a < 90.0))
            throw ValidationError("config: angle_deg must lie in [0, 90)");
        if (!(need_num(p, "frequency", cfg.task) > 0.0))
            throw ValidationError("config: frequency must be positive");
    }
}

std::string jumpwave_version() { return "1.0.0"; }

}  // namespace jumpwave
