#pragma once

// Domain, interface and piecewise wave-speed coefficient, plus the adapted
// (Fermat) distance: path length weights Euclidean arc length by 1/sqrt(c),
// so dist(x0,x1) = inf over paths of integral |gamma'|/sqrt(c).

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "jumpwave/errors.hpp"

namespace jumpwave {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

enum class Side { Minus, Plus, Auto };

struct Domain {
    enum class Kind { Interval1D, Rectangle2D };
    Kind kind = Kind::Interval1D;
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;  // unused in 1D

    bool contains(Vec2 p, double tol = 1e-12) const;
    void validate() const;
};

// Interface between Omega_minus and Omega_plus. 1D: a single point. 2D: a
// polyline; the minus side is to the left of the traversal direction (the
// unit normal, rotated -90 deg from the tangent, points from minus to plus).
struct InterfaceSpec {
    enum class Kind { Point1D, Polyline2D };
    Kind kind = Kind::Point1D;
    double point = 0.5;             // 1D
    std::vector<Vec2> polyline;     // 2D, >= 2 points

    // -1 strictly on the minus side, +1 plus, 0 on the interface.
    int side_of(Vec2 p, double tol = 1e-12) const;
    // Crossing parameters of the open segment (p,q), strictly inside (0,1).
    std::vector<double> crossings(Vec2 p, Vec2 q) const;
    void validate(const Domain& dom) const;

    static InterfaceSpec vertical_line(double xs, double ylo, double yhi);
};

struct PiecewiseCoefficient {
    std::function<double(Vec2)> c_minus;
    std::function<double(Vec2)> c_plus;
    double c_min = 0.0;
    double c_max = 0.0;

    static PiecewiseCoefficient constants(double cm, double cp);
};

struct MediumSpec {
    Domain domain;
    InterfaceSpec interface;
    PiecewiseCoefficient coefficient;
    // Tangential form b(x) of the interface symbol Q(x,xi') = b(x) |xi'|^2
    // (one tangential dimension in our 2D setting). Identity by default.
    std::function<double(Vec2)> tangential_form = [](Vec2) { return 1.0; };
    double b1 = 1.0, b2 = 1.0;

    void validate() const;
};

double eval_c(const MediumSpec& m, Vec2 p, Side side = Side::Auto);

// Fermat length of a polyline, with segments split at interface crossings
// and midpoint quadrature on `subdivisions` pieces per split segment.
double path_length(const std::vector<Vec2>& poly, const MediumSpec& m,
                   int subdivisions = 32);

struct DistanceOptions {
    double resolution = 1.0 / 256.0;
    int stencil_radius = 8;  // grid-graph moves up to this Chebyshev radius
};

double distance(Vec2 a, Vec2 b, const MediumSpec& m, const DistanceOptions& opt);

// Full multi-source distance field on the grid; used by largest_distance and
// exported as CSV by the distance task.
struct DistanceField {
    int nx = 0, ny = 0;
    double hx = 0.0, hy = 0.0;
    Vec2 origin;
    std::vector<double> value;  // row-major (iy*nx + ix), min over node copies

    Vec2 node(int ix, int iy) const {
        return {origin.x + ix * hx, origin.y + iy * hy};
    }
};

DistanceField distance_field(const std::function<bool(Vec2)>& source_set,
                             const MediumSpec& m, const DistanceOptions& opt);

// L(M,E) = sup_x dist(x,E).
double largest_distance(const std::function<bool(Vec2)>& E, const MediumSpec& m,
                        const DistanceOptions& opt);

}  // namespace jumpwave
