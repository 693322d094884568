#pragma once

#include <memory>

#include "defeat/mesh_pair.hpp"

namespace defeat::testing {

// Structured nx x ny grid on [x0, x0+w] x [y0, y0+h], boundary tagged
// bottom/right/top/left.
inline std::shared_ptr<Mesh> rect_mesh(int nx, int ny, double x0, double y0, double w, double h)
{
    auto m = std::make_shared<Mesh>();
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m->vertices.push_back({x0 + w * i / nx, y0 + h * j / ny});
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if ((i + j) % 2 == 0) {
                m->triangles.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, 0});
                m->triangles.push_back({{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, 0});
            } else {
                m->triangles.push_back({{id(i, j), id(i + 1, j), id(i, j + 1)}, 0});
                m->triangles.push_back({{id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)}, 0});
            }
        }
    for (int i = 0; i < nx; ++i) {
        m->boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, tags::bottom});
        m->boundary_edges.push_back({{id(i + 1, ny), id(i, ny)}, tags::top});
    }
    for (int j = 0; j < ny; ++j) {
        m->boundary_edges.push_back({{id(nx, j), id(nx, j + 1)}, tags::right});
        m->boundary_edges.push_back({{id(0, j + 1), id(0, j)}, tags::left});
    }
    return m;
}

inline std::shared_ptr<Mesh> unit_square(int n) { return rect_mesh(n, n, 0.0, 0.0, 1.0, 1.0); }

// Unit square (n divisible by 4) whose top-middle block
// [1/4,3/4]x[3/4,1] is feature 1 of the given kind; optionally the strip
// y < 1/4 is the QoI region.
inline MeshPair notch_pair(int n, FeatureKind kind, bool qoi_strip = false)
{
    auto m = unit_square(n);
    for (std::size_t t = 0; t < m->triangles.size(); ++t) {
        const Vec2 c = m->centroid(t);
        if (c.x > 0.25 && c.x < 0.75 && c.y > 0.75)
            m->triangles[t].region = tags::feature_region(1);
        else if (qoi_strip && c.y < 0.25)
            m->triangles[t].region = tags::qoi_region;
    }
    return make_mesh_pair(m, {{1, kind}});
}

} // namespace defeat::testing
