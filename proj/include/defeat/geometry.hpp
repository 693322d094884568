#pragma once

// Mesh-pair generators for the built-in experiment geometries.
//
// Every geometry is a rectangle with one disk-shaped negative feature,
// either internal or cut from the top edge as a half disk. The rectangle
// is covered by a tensor-product grid whose lines include the domain
// edges, the edges of every QoI region and the edges of a square box
// around the feature. Inside the box the grid is replaced by concentric
// rings of regular polygons, geometrically graded from the feature
// boundary outward, so that elements scale with the feature size. The
// feature interior is filled with the same kind of rings down to its
// center, which yields the defeatured mesh; the exact mesh is the subset
// of triangles outside the feature.

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>
#include <vector>

#include "mesh_pair.hpp"

namespace defeat {

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool contains(const Vec2 &p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    double overlap_area(const Rect &o) const
    {
        const double w = std::min(x1, o.x1) - std::max(x0, o.x0);
        const double h = std::min(y1, o.y1) - std::max(y0, o.y0);
        return (w > 0.0 && h > 0.0) ? w * h : 0.0;
    }
    Rect shifted(const Vec2 &d) const { return {x0 + d.x, y0 + d.y, x1 + d.x, y1 + d.y}; }
};

enum class GeometryKind { BoundarySemicircle, InternalDisk, Cantilever, LidDrivenHole };

inline std::string to_string(GeometryKind k)
{
    switch (k) {
    case GeometryKind::BoundarySemicircle: return "boundary_semicircle";
    case GeometryKind::InternalDisk: return "internal_disk";
    case GeometryKind::Cantilever: return "cantilever";
    case GeometryKind::LidDrivenHole: return "lid_driven";
    }
    return "unknown";
}

/// Parameters of one built-in geometry. Use the named constructors.
struct ExperimentGeometry {
    GeometryKind kind = GeometryKind::InternalDisk;
    Rect domain;
    std::vector<Rect> qoi_regions;
    Vec2 center;
    double radius = 0.0;
    bool on_top_edge = false;
    double box_half = 0.1;
    FeatureKind feature_kind = FeatureKind::DirichletInternal;

    /// Half disk of radius r cut from the top edge of [-1/2,1/2]^2 at (0,1/2).
    static ExperimentGeometry boundary_semicircle(double r)
    {
        ExperimentGeometry g;
        g.kind = GeometryKind::BoundarySemicircle;
        g.domain = {-0.5, -0.5, 0.5, 0.5};
        g.qoi_regions = {{-0.25, -0.25, 0.25, 0.25}};
        g.center = {0.0, 0.5};
        g.radius = r;
        g.on_top_edge = true;
        g.box_half = 0.125;
        g.feature_kind = FeatureKind::DirichletDirichlet;
        return g;
    }

    /// Disk of radius r at the center of [-1/2,1/2]^2.
    static ExperimentGeometry internal_disk(double r)
    {
        ExperimentGeometry g;
        g.kind = GeometryKind::InternalDisk;
        g.domain = {-0.5, -0.5, 0.5, 0.5};
        g.qoi_regions = {{-0.25, -0.4, 0.25, -0.15}};
        g.center = {0.0, 0.0};
        g.radius = r;
        g.box_half = 0.1;
        g.feature_kind = FeatureKind::DirichletInternal;
        return g;
    }

    /// Plane-strain beam [0,2]x[-1/4,1/4] with a traction-free hole of
    /// radius 0.05 centered at (x_hole, 0).
    static ExperimentGeometry cantilever(double x_hole)
    {
        ExperimentGeometry g;
        g.kind = GeometryKind::Cantilever;
        g.domain = {0.0, -0.25, 2.0, 0.25};
        g.center = {x_hole, 0.0};
        g.radius = 0.05;
        g.box_half = 0.125;
        g.feature_kind = FeatureKind::Neumann;
        return g;
    }

    /// Channel [-1/2,1/2]x[-1/4,1/4] with a no-slip disk of radius r at the
    /// origin; QoI region [1/10,1/2]x[-1/16,1/16].
    static ExperimentGeometry lid_driven(double r)
    {
        ExperimentGeometry g;
        g.kind = GeometryKind::LidDrivenHole;
        g.domain = {-0.5, -0.25, 0.5, 0.25};
        g.qoi_regions = {{0.1, -0.0625, 0.5, 0.0625}};
        g.center = {0.0, 0.0};
        g.radius = r;
        g.box_half = 0.1;
        g.feature_kind = FeatureKind::DirichletInternal;
        return g;
    }

    ExperimentGeometry translated(const Vec2 &d) const
    {
        ExperimentGeometry g = *this;
        g.domain = domain.shifted(d);
        for (auto &q : g.qoi_regions)
            q = q.shifted(d);
        g.center = center + d;
        return g;
    }

    /// Largest admissible radius (the rings need room inside the box).
    double max_radius() const { return 0.9 * box_half; }

    Rect box() const
    {
        return on_top_edge ? Rect{center.x - box_half, center.y - box_half, center.x + box_half, center.y}
                           : Rect{center.x - box_half, center.y - box_half, center.x + box_half,
                                  center.y + box_half};
    }
};

/// Segment count of the polygon approximating a full circle at the given
/// refinement depth; half disks use half of it.
inline int polygon_segments(int refinement_depth) { return 64 << refinement_depth; }

namespace detail {

struct RingNode {
    int vertex;
    double angle;
};
using Ring = std::vector<RingNode>;

inline std::vector<double> grid_lines(std::vector<double> breaks, int resolution)
{
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> uniq;
    for (double b : breaks)
        if (uniq.empty() || b - uniq.back() > 1e-12)
            uniq.push_back(b);
    std::vector<double> lines{uniq.front()};
    for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
        const double a = uniq[k], b = uniq[k + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) * resolution - 1e-9)));
        for (int m = 1; m < n; ++m)
            lines.push_back(a + (b - a) * m / n);
        lines.push_back(b);
    }
    return lines;
}

inline int line_index(const std::vector<double> &lines, double v)
{
    for (std::size_t k = 0; k < lines.size(); ++k)
        if (std::abs(lines[k] - v) <= 1e-12)
            return static_cast<int>(k);
    throw GeometryError("grid line missing");
}

// Joins an inner and an outer ring (angles increasing, unwrapped) with a
// strip of triangles, advancing along whichever ring has the smaller next
// angle.
inline void stitch(const Ring &inner, const Ring &outer, const std::vector<Vec2> &pts, int region,
                   std::vector<Triangle> &out)
{
    std::size_t i = 0, j = 0;
    const std::size_t na = inner.size(), nb = outer.size();
    auto ok = [&](int a, int b, int c) { return orient2d(pts[a], pts[b], pts[c]) > 0.0; };
    while (i + 1 < na || j + 1 < nb) {
        const int a = inner[i].vertex, b = outer[j].vertex;
        bool advance_inner;
        if (i + 1 >= na)
            advance_inner = false;
        else if (j + 1 >= nb)
            advance_inner = true;
        else {
            const int a1 = inner[i + 1].vertex, b1 = outer[j + 1].vertex;
            const bool va = ok(a, b, a1), vb = ok(a, b, b1);
            if (va && vb) {
                const double da = inner[i + 1].angle, db = outer[j + 1].angle;
                if (std::abs(da - db) < 1e-12)
                    advance_inner = distance(pts[a1], pts[b]) < distance(pts[a], pts[b1]);
                else
                    advance_inner = da < db;
            } else if (va || vb) {
                advance_inner = va;
            } else {
                throw GeometryError("ring stitching failed");
            }
        }
        if (advance_inner) {
            const int a1 = inner[i + 1].vertex;
            if (!ok(a, b, a1))
                throw GeometryError("ring stitching produced an inverted triangle");
            out.push_back({{a, b, a1}, region});
            ++i;
        } else {
            const int b1 = outer[j + 1].vertex;
            if (!ok(a, b, b1))
                throw GeometryError("ring stitching produced an inverted triangle");
            out.push_back({{a, b, b1}, region});
            ++j;
        }
    }
}

// Closed rings are unrolled so that both start near the same angle and
// end with a copy of their first node shifted by a full turn.
inline std::pair<Ring, Ring> unroll_closed(const Ring &inner, const Ring &outer)
{
    auto wrap = [](double a) {
        a = std::fmod(a, 2.0 * pi);
        return a < 0.0 ? a + 2.0 * pi : a;
    };
    Ring a = inner, b = outer;
    for (auto &n : a)
        n.angle = wrap(n.angle);
    for (auto &n : b)
        n.angle = wrap(n.angle);
    auto rotate_to_min = [](Ring &r) {
        auto it = std::min_element(r.begin(), r.end(),
                                   [](const RingNode &p, const RingNode &q) { return p.angle < q.angle; });
        std::rotate(r.begin(), it, r.end());
        for (std::size_t k = 1; k < r.size(); ++k)
            while (r[k].angle < r[k - 1].angle)
                r[k].angle += 2.0 * pi;
    };
    rotate_to_min(a);
    rotate_to_min(b);
    // Start the outer ring at the node closest in angle to the inner start.
    std::size_t best = 0;
    double best_gap = 1e300;
    for (std::size_t k = 0; k < b.size(); ++k) {
        double gap = std::abs(b[k].angle - a[0].angle);
        gap = std::min(gap, 2.0 * pi - gap);
        if (gap < best_gap) {
            best_gap = gap;
            best = k;
        }
    }
    std::rotate(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(best), b.end());
    // Re-unwrap relative to the inner start.
    for (auto &n : b) {
        while (n.angle < a[0].angle - pi)
            n.angle += 2.0 * pi;
        while (n.angle > a[0].angle + pi)
            n.angle -= 2.0 * pi;
    }
    for (std::size_t k = 1; k < b.size(); ++k)
        while (b[k].angle < b[k - 1].angle)
            b[k].angle += 2.0 * pi;
    a.push_back({a[0].vertex, a[0].angle + 2.0 * pi});
    b.push_back({b[0].vertex, b[0].angle + 2.0 * pi});
    return {a, b};
}

inline void join_rings(const Ring &inner, const Ring &outer, bool closed, const std::vector<Vec2> &pts,
                       int region, std::vector<Triangle> &out)
{
    if (closed) {
        auto [a, b] = unroll_closed(inner, outer);
        stitch(a, b, pts, region, out);
    } else {
        stitch(inner, outer, pts, region, out);
    }
}

// Ring of n segments (closed: n nodes on the full circle; open: n
// segments on the lower half with endpoints exactly on the horizontal line
// through the center). `blend` in [0,1] morphs the circle of radius rho
// into the square of half-size rho.
inline Ring make_ring(const Vec2 &c, double rho, int n, bool closed, std::vector<Vec2> &pts, double blend = 0.0)
{
    Ring ring;
    auto place = [&](double th) {
        const Vec2 u{std::cos(th), std::sin(th)};
        const double inf = std::max(std::abs(u.x), std::abs(u.y));
        return c + rho * ((1.0 - blend) * u + (blend / inf) * u);
    };
    if (closed) {
        for (int j = 0; j < n; ++j) {
            const double th = 2.0 * pi * j / n;
            ring.push_back({static_cast<int>(pts.size()), th});
            pts.push_back(place(th));
        }
    } else {
        for (int j = 0; j <= n; ++j) {
            const double th = -pi + pi * j / n;
            Vec2 p = place(th);
            if (j == 0)
                p = {c.x - rho, c.y};
            if (j == n)
                p = {c.x + rho, c.y};
            ring.push_back({static_cast<int>(pts.size()), th});
            pts.push_back(p);
        }
    }
    return ring;
}

} // namespace detail

/// Builds the conformal exact/defeatured pair for `geometry`.
/// `resolution` is the number of background cells per unit length;
/// `refinement_depth` doubles the polygon and ring density near the
/// feature once per level, inside annuli of radius 3*diam(gamma)*2^k.
inline MeshPair build_mesh_pair(const ExperimentGeometry &geometry, int resolution, int refinement_depth)
{
    using namespace detail;
    const ExperimentGeometry &g = geometry;
    if (resolution < 1)
        throw GeometryError("resolution must be positive");
    if (refinement_depth < 0 || refinement_depth > 6)
        throw GeometryError("refinement depth out of range");
    if (!(g.radius > 0.0) || !std::isfinite(g.radius))
        throw GeometryError("degenerate feature: radius must be positive");
    const int n_full = polygon_segments(refinement_depth);
    const double scale = std::max(g.domain.x1 - g.domain.x0, g.domain.y1 - g.domain.y0);
    if (2.0 * pi * g.radius / n_full < 1e-10 * scale)
        throw GeometryError("feature smaller than one representable edge length");
    if (g.radius > g.max_radius())
        throw GeometryError("feature radius exceeds the admissible range of the geometry");
    const Rect box = g.box();
    const bool closed = !g.on_top_edge;
    if (closed) {
        if (box.x0 <= g.domain.x0 || box.x1 >= g.domain.x1 || box.y0 <= g.domain.y0 || box.y1 >= g.domain.y1)
            throw GeometryError("feature intersects the outer boundary");
    } else {
        if (box.x0 <= g.domain.x0 || box.x1 >= g.domain.x1 || box.y0 <= g.domain.y0 ||
            g.center.y != g.domain.y1)
            throw GeometryError("boundary feature must sit on the top edge away from the corners");
    }
    for (const auto &q : g.qoi_regions)
        if (q.overlap_area(box) > 0.0)
            throw GeometryError("QoI region overlaps the feature neighbourhood");

    // Background grid.
    std::vector<double> xb{g.domain.x0, g.domain.x1, box.x0, box.x1};
    std::vector<double> yb{g.domain.y0, g.domain.y1, box.y0, box.y1};
    for (const auto &q : g.qoi_regions) {
        xb.insert(xb.end(), {q.x0, q.x1});
        yb.insert(yb.end(), {q.y0, q.y1});
    }
    const auto xs = grid_lines(xb, resolution);
    const auto ys = grid_lines(yb, resolution);
    const int nx = static_cast<int>(xs.size()) - 1, ny = static_cast<int>(ys.size()) - 1;
    const int ib0 = line_index(xs, box.x0), ib1 = line_index(xs, box.x1);
    const int jb0 = line_index(ys, box.y0), jb1 = line_index(ys, box.y1);

    std::vector<Vec2> pts;
    std::vector<int> gid((nx + 1) * (ny + 1), -1);
    auto inside_box_vertex = [&](int i, int j) {
        return i > ib0 && i < ib1 && j > jb0 && (closed ? j < jb1 : true);
    };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            if (!inside_box_vertex(i, j)) {
                gid[j * (nx + 1) + i] = static_cast<int>(pts.size());
                pts.push_back({xs[i], ys[j]});
            }
    auto vid = [&](int i, int j) { return gid[j * (nx + 1) + i]; };

    // The box sides are subdivided m <= 4 times finer than the grid so that the
    // rings can meet them without excessive halving; the grid cells along
    // the box are then fanned from their center.
    const double diam = 2.0 * g.radius;
    const double a_box = g.box_half;
    int n_rule = n_full;
    for (int k = 0; n_rule / 2 >= 8 && 3.0 * diam * (1 << k) < 0.9 * a_box; ++k)
        n_rule /= 2;
    const double h_box = (box.x1 - box.x0) / (ib1 - ib0);
    const int m = std::clamp(static_cast<int>(std::lround(h_box * n_rule / (2.0 * pi * a_box))), 1, 4);

    std::vector<std::pair<int, int>> perim_grid;
    if (closed) {
        for (int i = ib0; i <= ib1; ++i)
            perim_grid.push_back({i, jb0});
        for (int j = jb0 + 1; j <= jb1; ++j)
            perim_grid.push_back({ib1, j});
        for (int i = ib1 - 1; i >= ib0; --i)
            perim_grid.push_back({i, jb1});
        for (int j = jb1 - 1; j >= jb0; --j)
            perim_grid.push_back({ib0, j});
    } else {
        for (int j = jb1; j >= jb0; --j)
            perim_grid.push_back({ib0, j});
        for (int i = ib0 + 1; i <= ib1; ++i)
            perim_grid.push_back({i, jb0});
        for (int j = jb0 + 1; j <= jb1; ++j)
            perim_grid.push_back({ib1, j});
    }
    std::unordered_map<std::uint64_t, std::pair<int, std::vector<int>>> split;
    for (std::size_t k = 0; k + 1 < perim_grid.size(); ++k) {
        const int va = vid(perim_grid[k].first, perim_grid[k].second);
        const int vb = vid(perim_grid[k + 1].first, perim_grid[k + 1].second);
        std::vector<int> mids;
        for (int q = 1; q < m; ++q) {
            mids.push_back(static_cast<int>(pts.size()));
            pts.push_back(pts[va] + (static_cast<double>(q) / m) * (pts[vb] - pts[va]));
        }
        split[edge_key(va, vb)] = {va, std::move(mids)};
    }
    // Nodes strictly between two grid vertices, ordered from `from` to `to`.
    auto between = [&](int from, int to) {
        auto it = split.find(edge_key(from, to));
        if (it == split.end())
            return std::vector<int>{};
        std::vector<int> mids = it->second.second;
        if (it->second.first != from)
            std::reverse(mids.begin(), mids.end());
        return mids;
    };

    std::vector<Triangle> tris;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (i >= ib0 && i < ib1 && j >= jb0 && j < jb1)
                continue;
            const Vec2 mid{0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])};
            int region = tags::bulk_region;
            for (const auto &q : g.qoi_regions)
                if (q.contains(mid))
                    region = tags::qoi_region;
            const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
            std::vector<int> cycle;
            for (auto [p0, p1] : {std::pair{v00, v10}, {v10, v11}, {v11, v01}, {v01, v00}}) {
                cycle.push_back(p0);
                for (int w : between(p0, p1))
                    cycle.push_back(w);
            }
            if (cycle.size() > 4) {
                const int c = static_cast<int>(pts.size());
                pts.push_back(mid);
                for (std::size_t k = 0; k < cycle.size(); ++k)
                    tris.push_back({{c, cycle[k], cycle[(k + 1) % cycle.size()]}, region});
                continue;
            }
            bool slash = (i + j) % 2 == 0;
            if ((i == 0 && j == 0) || (i == nx - 1 && j == ny - 1))
                slash = true;
            if ((i == nx - 1 && j == 0) || (i == 0 && j == ny - 1))
                slash = false;
            if (slash) {
                tris.push_back({{v00, v10, v11}, region});
                tris.push_back({{v00, v11, v01}, region});
            } else {
                tris.push_back({{v00, v10, v01}, region});
                tris.push_back({{v10, v11, v01}, region});
            }
        }

    // Box perimeter, counterclockwise around the feature center.
    Ring perimeter;
    auto push_perim = [&](int v) {
        const Vec2 d = pts[v] - g.center;
        perimeter.push_back({v, std::atan2(d.y, d.x)});
    };
    for (std::size_t k = 0; k < perim_grid.size(); ++k) {
        const int v = vid(perim_grid[k].first, perim_grid[k].second);
        if (closed && k + 1 == perim_grid.size())
            break;
        push_perim(v);
        if (k + 1 < perim_grid.size())
            for (int w : between(v, vid(perim_grid[k + 1].first, perim_grid[k + 1].second)))
                push_perim(w);
    }
    if (!closed) {
        perimeter.front().angle = -pi;
        perimeter.back().angle = 0.0;
        for (std::size_t k = 1; k + 1 < perimeter.size(); ++k)
            if (perimeter[k].angle > 0.0)
                perimeter[k].angle -= 2.0 * pi;
    }

    // Polygon and outward rings. `n` counts segments on a full circle.
    const int feature_id = 1;
    auto segs = [&](int n) { return closed ? n : n / 2; };
    const Ring polygon = make_ring(g.center, g.radius, segs(n_full), closed, pts);
    {
        // Halve the ring density once per doubling of 3*diam, and earlier
        // when the remaining room would not fit the halvings needed to meet
        // the box perimeter at a comparable spacing.
        const double a = g.box_half;
        const double perim = closed ? 8.0 * a : 4.0 * a;
        const double full_perimeter_nodes =
            (closed ? 1.0 : 2.0) * static_cast<double>(perimeter.size() - (closed ? 0 : 1));
        const double n_target = 2.0 * pi * a * full_perimeter_nodes / (closed ? perim : 2.0 * perim);
        int pending = std::max(0, static_cast<int>(std::lround(std::log2(n_full / n_target))));
        while (pending > 0 && (n_full >> pending) < 8)
            --pending;
        std::vector<std::pair<double, int>> rings;
        double rho = g.radius;
        int n = n_full;
        int halvings = 0;
        while (true) {
            int n_next = n;
            const double rho_next = rho + 2.0 * pi * rho / n;
            if (pending > 0) {
                const double room = a - rho_next;
                const double need = (pending + 1) * 2.0 * pi * rho_next / (n / 2);
                if (rho_next >= 3.0 * diam * (1 << halvings) || room < need) {
                    n_next = n / 2;
                    ++halvings;
                    --pending;
                }
            }
            const double step_next = 2.0 * pi * rho_next / n_next;
            if (rho_next + 0.6 * step_next > a)
                break;
            rings.push_back({rho_next, n_next});
            rho = rho_next;
            n = n_next;
        }
        // Rings morph linearly from the circle into the box square.
        Ring prev = polygon;
        const double last = rings.empty() ? g.radius : rings.back().first;
        for (const auto &[rk, nk] : rings) {
            const double blend = (rk - g.radius) / (last - g.radius);
            Ring ring = make_ring(g.center, rk, segs(nk), closed, pts, blend);
            join_rings(prev, ring, closed, pts, tags::bulk_region, tris);
            prev = std::move(ring);
        }
        join_rings(prev, perimeter, closed, pts, tags::bulk_region, tris);
    }

    // Feature interior.
    const int fregion = tags::feature_region(feature_id);
    {
        Ring outer = polygon;
        double rho = g.radius, rho_ref = g.radius;
        int n = n_full;
        while (n > 8) {
            double rho_next = rho * (1.0 - 2.0 * pi / n);
            int n_next = n;
            if (rho_next <= 0.5 * rho_ref) {
                n_next = n / 2;
                rho_ref = rho_next;
            }
            Ring ring = make_ring(g.center, rho_next, segs(n_next), closed, pts);
            join_rings(ring, outer, closed, pts, fregion, tris);
            outer = std::move(ring);
            rho = rho_next;
            n = n_next;
        }
        const int c = static_cast<int>(pts.size());
        pts.push_back(g.center);
        const std::size_t m = outer.size();
        const std::size_t segments = closed ? m : m - 1;
        for (std::size_t k = 0; k < segments; ++k)
            tris.push_back({{c, outer[k].vertex, outer[(k + 1) % m].vertex}, fregion});
    }

    // Boundary tags of the defeatured mesh; the flat side of a half-disk
    // feature is its simplified boundary.
    auto defeatured = std::make_shared<Mesh>();
    defeatured->vertices = pts;
    defeatured->triangles = std::move(tris);
    const double xc_lo = g.center.x - g.radius, xc_hi = g.center.x + g.radius;
    for (const auto &e : topological_boundary(*defeatured)) {
        const Vec2 p = pts[e[0]], q = pts[e[1]];
        int tag;
        if (p.y == g.domain.y1 && q.y == g.domain.y1)
            tag = (!closed && std::min(p.x, q.x) >= xc_lo && std::max(p.x, q.x) <= xc_hi)
                      ? tags::gamma0(feature_id)
                      : tags::top;
        else if (p.y == g.domain.y0 && q.y == g.domain.y0)
            tag = tags::bottom;
        else if (p.x == g.domain.x1 && q.x == g.domain.x1)
            tag = tags::right;
        else if (p.x == g.domain.x0 && q.x == g.domain.x0)
            tag = tags::left;
        else
            throw GeometryError("unclassified boundary edge");
        defeatured->boundary_edges.push_back({e, tag});
    }
    return make_mesh_pair(defeatured, {{feature_id, g.feature_kind}});
}

} // namespace defeat
