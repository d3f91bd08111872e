#include "jumpwave/medium.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace jumpwave {

bool Domain::contains(Vec2 p, double tol) const {
    if (p.x < x0 - tol || p.x > x1 + tol) return false;
    if (kind == Kind::Rectangle2D && (p.y < y0 - tol || p.y > y1 + tol)) return false;
    return true;
}

void Domain::validate() const {
    if (!(x1 > x0)) throw ValidationError("domain: nonpositive x extent");
    if (kind == Kind::Rectangle2D && !(y1 > y0))
        throw ValidationError("domain: nonpositive y extent");
}

InterfaceSpec InterfaceSpec::vertical_line(double xs, double ylo, double yhi) {
    InterfaceSpec s;
    s.kind = Kind::Polyline2D;
    // Upward traversal puts the minus side (left of the tangent) at x < xs.
    s.polyline = {{xs, ylo}, {xs, yhi}};
    return s;
}

int InterfaceSpec::side_of(Vec2 p, double tol) const {
    if (kind == Kind::Point1D) {
        if (std::abs(p.x - point) <= tol) return 0;
        return p.x < point ? -1 : +1;
    }
    // Nearest point on the polyline, then the sign of the cross product with
    // the local tangent. Minus side is to the left of the tangent.
    double best_d2 = std::numeric_limits<double>::infinity();
    double best_cross = 0.0;
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
        Vec2 a = polyline[i], b = polyline[i + 1];
        Vec2 ab = b - a;
        double t = dot(p - a, ab) / dot(ab, ab);
        t = std::clamp(t, 0.0, 1.0);
        Vec2 proj = a + t * ab;
        double d2 = dot(p - proj, p - proj);
        if (d2 < best_d2) {
            best_d2 = d2;
            best_cross = ab.x * (p.y - a.y) - ab.y * (p.x - a.x);
        }
    }
    if (std::sqrt(best_d2) <= tol) return 0;
    return best_cross > 0 ? -1 : +1;
}

std::vector<double> InterfaceSpec::crossings(Vec2 p, Vec2 q) const {
    std::vector<double> ts;
    if (kind == Kind::Point1D) {
        double dx = q.x - p.x;
        if (std::abs(dx) > 0) {
            double t = (point - p.x) / dx;
            if (t > 1e-14 && t < 1.0 - 1e-14) ts.push_back(t);
        }
        return ts;
    }
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
        Vec2 a = polyline[i], b = polyline[i + 1];
        Vec2 r = q - p, s = b - a;
        double denom = r.x * s.y - r.y * s.x;
        if (std::abs(denom) < 1e-300) continue;
        double t = ((a.x - p.x) * s.y - (a.y - p.y) * s.x) / denom;
        double u = ((a.x - p.x) * r.y - (a.y - p.y) * r.x) / denom;
        if (t > 1e-14 && t < 1.0 - 1e-14 && u >= -1e-14 && u <= 1.0 + 1e-14)
            ts.push_back(t);
    }
    std::sort(ts.begin(), ts.end());
    return ts;
}

void InterfaceSpec::validate(const Domain& dom) const {
    if (kind == Kind::Point1D) {
        if (dom.kind != Domain::Kind::Interval1D)
            throw ValidationError("interface: point interface needs 1D domain");
        if (!(point > dom.x0 && point < dom.x1))
            throw ValidationError("interface: point not strictly inside domain");
    } else {
        if (dom.kind != Domain::Kind::Rectangle2D)
            throw ValidationError("interface: polyline interface needs 2D domain");
        if (polyline.size() < 2)
            throw ValidationError("interface: polyline needs >= 2 points");
        for (const Vec2& p : polyline)
            if (p.x < dom.x0 - 1e-12 || p.x > dom.x1 + 1e-12)
                throw ValidationError("interface: polyline leaves domain in x");
    }
}

PiecewiseCoefficient PiecewiseCoefficient::constants(double cm, double cp) {
    PiecewiseCoefficient c;
    c.c_minus = [cm](Vec2) { return cm; };
    c.c_plus = [cp](Vec2) { return cp; };
    c.c_min = 0.5 * std::min(cm, cp);
    c.c_max = 2.0 * std::max(cm, cp);
    return c;
}

void MediumSpec::validate() const {
    domain.validate();
    interface.validate(domain);
    if (!coefficient.c_minus || !coefficient.c_plus)
        throw ValidationError("coefficient: missing branch function");
    if (!(coefficient.c_min > 0.0) || !(coefficient.c_max > coefficient.c_min))
        throw ValidationError("coefficient: need 0 < c_min < c_max");
    if (!(b1 > 0.0) || !(b2 >= b1))
        throw ValidationError("tangential form: need 0 < b1 <= b2");
}

double eval_c(const MediumSpec& m, Vec2 p, Side side) {
    if (!m.domain.contains(p))
        throw ValidationError("eval_c: point outside domain");
    if (side == Side::Auto) {
        int s = m.interface.side_of(p);
        if (s == 0)
            throw ValidationError("eval_c: point on interface, side=auto is ambiguous");
        side = s < 0 ? Side::Minus : Side::Plus;
    }
    double v = side == Side::Minus ? m.coefficient.c_minus(p) : m.coefficient.c_plus(p);
    if (!(v > 0.0)) throw NumericError("eval_c: nonpositive coefficient value");
    return v;
}

namespace {

// Fermat length of a straight segment, split at interface crossings; each
// piece gets midpoint quadrature with `sub` panels.
double segment_length(Vec2 p, Vec2 q, const MediumSpec& m, int sub) {
    std::vector<double> ts = m.interface.crossings(p, q);
    ts.insert(ts.begin(), 0.0);
    ts.push_back(1.0);
    const double seg_len = norm(q - p);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        double t0 = ts[i], t1 = ts[i + 1];
        if (t1 - t0 < 1e-15) continue;
        Vec2 mid = p + (0.5 * (t0 + t1)) * (q - p);
        int s = m.interface.side_of(mid);
        Side side = s < 0 ? Side::Minus : Side::Plus;  // measure-zero tie goes plus
        double piece = 0.0;
        for (int k = 0; k < sub; ++k) {
            double tm = t0 + (t1 - t0) * (k + 0.5) / sub;
            Vec2 pm = p + tm * (q - p);
            piece += 1.0 / std::sqrt(eval_c(m, pm, side));
        }
        total += piece * seg_len * (t1 - t0) / sub;
    }
    return total;
}

// Grid graph for the adapted distance. Vertices on a uniform grid over the
// closed domain; vertices lying exactly on the interface are duplicated (one
// copy per side) and linked by a zero-length edge.
struct DistGraph {
    const MediumSpec& m;
    int nx, ny;
    double hx, hy;
    Vec2 origin;
    std::vector<int> dup_index;            // grid node -> plus-copy id or -1
    int n_nodes;                           // grid nodes + duplicates
    std::vector<std::pair<int, int>> dirs; // coprime moves, radius-limited
    int radius;

    DistGraph(const MediumSpec& med, const DistanceOptions& opt) : m(med) {
        if (!(opt.resolution > 0.0))
            throw ValidationError("distance: nonpositive resolution");
        const Domain& d = m.domain;
        bool two_d = d.kind == Domain::Kind::Rectangle2D;
        nx = static_cast<int>(std::ceil((d.x1 - d.x0) / opt.resolution)) + 1;
        ny = two_d ? static_cast<int>(std::ceil((d.y1 - d.y0) / opt.resolution)) + 1 : 1;
        nx = std::max(nx, 2);
        hx = (d.x1 - d.x0) / (nx - 1);
        hy = two_d && ny > 1 ? (d.y1 - d.y0) / (ny - 1) : 0.0;
        origin = {d.x0, two_d ? d.y0 : 0.0};
        radius = two_d ? std::max(1, opt.stencil_radius) : 1;

        dup_index.assign(static_cast<std::size_t>(nx) * ny, -1);
        int extra = 0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                if (m.interface.side_of(node(ix, iy)) == 0)
                    dup_index[iy * nx + ix] = nx * ny + extra++;
        n_nodes = nx * ny + extra;

        if (two_d) {
            for (int dx = -radius; dx <= radius; ++dx)
                for (int dy = -radius; dy <= radius; ++dy) {
                    if (dx == 0 && dy == 0) continue;
                    if (std::gcd(std::abs(dx), std::abs(dy)) != 1) continue;
                    dirs.emplace_back(dx, dy);
                }
        } else {
            dirs = {{1, 0}, {-1, 0}};
        }
    }

    Vec2 node(int ix, int iy) const {
        return {origin.x + ix * hx, origin.y + iy * hy};
    }

    // Node id for grid point (ix,iy) approached from `side` (+1/-1).
    int id_for(int ix, int iy, int side) const {
        int base = iy * nx + ix;
        int dup = dup_index[base];
        if (dup < 0) return base;
        return side > 0 ? dup : base;  // base copy is minus, duplicate is plus
    }

    // Dijkstra from given seeds (node id, initial value).
    std::vector<double> run(const std::vector<std::pair<int, double>>& seeds) const {
        std::vector<double> dist(n_nodes, std::numeric_limits<double>::infinity());
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        for (auto [id, v] : seeds) {
            if (v < dist[id]) {
                dist[id] = v;
                pq.emplace(v, id);
            }
        }
        while (!pq.empty()) {
            auto [dv, v] = pq.top();
            pq.pop();
            if (dv > dist[v] + 1e-300) continue;
            int base = v < nx * ny ? v : duplicate_base(v);
            int ix = base % nx, iy = base / nx;
            Vec2 pv = node(ix, iy);
            // Zero-length crossing edge between the two copies.
            if (dup_index[base] >= 0) {
                int other = v == base ? dup_index[base] : base;
                if (dv < dist[other]) {
                    dist[other] = dv;
                    pq.emplace(dv, other);
                }
            }
            for (auto [dx, dy] : dirs) {
                int jx = ix + dx, jy = iy + dy;
                if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
                Vec2 pw = node(jx, jy);
                double w = segment_length(pv, pw, m, 8);
                int sw = m.interface.side_of(pw);
                if (sw == 0) {
                    // side of the approach decides the copy
                    Vec2 mid = pv + 0.999 * (pw - pv);
                    sw = m.interface.side_of(mid);
                    if (sw == 0) sw = 1;
                }
                int u = id_for(jx, jy, sw);
                if (dv + w < dist[u]) {
                    dist[u] = dv + w;
                    pq.emplace(dv + w, u);
                }
            }
        }
        return dist;
    }

    int duplicate_base(int dup_id) const {
        for (std::size_t i = 0; i < dup_index.size(); ++i)
            if (dup_index[i] == dup_id) return static_cast<int>(i);
        throw NumericError("distance: dangling duplicate node");
    }

    std::vector<std::pair<int, double>> seeds_near(Vec2 p) const {
        // Connect an off-grid point to nearby grid vertices.
        std::vector<std::pair<int, double>> seeds;
        int cx = static_cast<int>(std::round((p.x - origin.x) / hx));
        int cy = ny > 1 ? static_cast<int>(std::round((p.y - origin.y) / hy)) : 0;
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
                int ix = cx + dx, iy = cy + dy;
                if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) continue;
                Vec2 q = node(ix, iy);
                double w = segment_length(p, q, m, 8);
                int sq = m.interface.side_of(q);
                if (sq == 0) sq = 1;
                seeds.emplace_back(id_for(ix, iy, sq), w);
            }
        return seeds;
    }
};

}  // namespace

double path_length(const std::vector<Vec2>& poly, const MediumSpec& m,
                   int subdivisions) {
    if (poly.size() < 2)
        throw ValidationError("path_length: polyline needs >= 2 points");
    for (const Vec2& p : poly)
        if (!m.domain.contains(p))
            throw ValidationError("path_length: polyline leaves domain");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < poly.size(); ++i)
        total += segment_length(poly[i], poly[i + 1], m, subdivisions);
    return total;
}

double distance(Vec2 a, Vec2 b, const MediumSpec& m, const DistanceOptions& opt) {
    if (!m.domain.contains(a) || !m.domain.contains(b))
        throw ValidationError("distance: endpoint outside domain");
    if (norm(a - b) == 0.0) return 0.0;
    DistGraph g(m, opt);
    std::vector<double> dist = g.run(g.seeds_near(a));
    double best = std::numeric_limits<double>::infinity();
    for (auto [id, w] : g.seeds_near(b)) best = std::min(best, dist[id] + w);
    // direct segment, for endpoints closer than the stencil reach
    best = std::min(best, segment_length(a, b, m, 32));
    return best;
}

DistanceField distance_field(const std::function<bool(Vec2)>& source_set,
                             const MediumSpec& m, const DistanceOptions& opt) {
    if (!source_set) throw ValidationError("distance_field: empty source set");
    DistGraph g(m, opt);
    std::vector<std::pair<int, double>> seeds;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            if (source_set(g.node(ix, iy))) {
                int base = iy * g.nx + ix;
                seeds.emplace_back(base, 0.0);
                if (g.dup_index[base] >= 0) seeds.emplace_back(g.dup_index[base], 0.0);
            }
    if (seeds.empty())
        throw ValidationError("distance_field: source set meets no grid node");
    std::vector<double> dist = g.run(seeds);
    DistanceField f;
    f.nx = g.nx;
    f.ny = g.ny;
    f.hx = g.hx;
    f.hy = g.hy;
    f.origin = g.origin;
    f.value.resize(static_cast<std::size_t>(g.nx) * g.ny);
    for (int i = 0; i < g.nx * g.ny; ++i) {
        double v = dist[i];
        if (g.dup_index[i] >= 0) v = std::min(v, dist[g.dup_index[i]]);
        f.value[i] = v;
    }
    return f;
}

double largest_distance(const std::function<bool(Vec2)>& E, const MediumSpec& m,
                        const DistanceOptions& opt) {
    DistanceField f = distance_field(E, m, opt);
    double sup = 0.0;
    for (double v : f.value) sup = std::max(sup, v);
    return sup;
}

}  // namespace jumpwave
