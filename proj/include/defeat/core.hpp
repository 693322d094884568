#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace defeat {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 &operator+=(const Vec2 &o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2 &operator-=(const Vec2 &o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2 &operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
constexpr Vec2 operator-(const Vec2 &a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }

constexpr double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2 &a, const Vec2 &b) { return norm(a - b); }

// Counterclockwise rotation by 90 degrees.
constexpr Vec2 perp(const Vec2 &a) { return {-a.y, a.x}; }

/// Twice the signed area of (a, b, c); positive for counterclockwise order.
constexpr double orient2d(const Vec2 &a, const Vec2 &b, const Vec2 &c)
{
    return cross(b - a, c - a);
}

inline double point_segment_distance(const Vec2 &p, const Vec2 &a, const Vec2 &b)
{
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0)
        return distance(p, a);
    double t = dot(p - a, ab) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return distance(p, a + t * ab);
}

inline constexpr double pi = 3.14159265358979323846;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ExpressionError : public Error {
public:
    using Error::Error;
};

class FemError : public Error {
public:
    using Error::Error;
};

class SolverError : public FemError {
public:
    SolverError(const std::string &what, std::ptrdiff_t pivot = -1)
        : FemError(what), pivot_(pivot) {}
    std::ptrdiff_t pivot() const { return pivot_; }

private:
    std::ptrdiff_t pivot_;
};

class EstimatorError : public Error {
public:
    using Error::Error;
};

class QoiError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace defeat
