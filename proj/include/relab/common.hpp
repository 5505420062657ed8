#ifndef RELAB_COMMON_HPP
#define RELAB_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relab {

using Vec = std::vector<double>;
using PointView = std::span<const double>;

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct InvalidArgument : Error { using Error::Error; };
struct DuplicateBoundary : Error { using Error::Error; };
struct NoIntersection : Error { using Error::Error; };
struct SharedBreakline : Error { using Error::Error; };
struct InvalidResponse : Error { using Error::Error; };
struct SignatureMismatch : Error { using Error::Error; };
struct OnBreakline : Error { using Error::Error; };
struct OffBreakline : Error { using Error::Error; };
struct NonFiniteIntegrand : Error { using Error::Error; };
struct BadExponent : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct KappaTooSmall : Error { using Error::Error; };
struct ReconstructionFailed : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct PreconditionViolation : Error { using Error::Error; };
struct AuditFailed : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// ----------------------------------------------------------------------------
// Small vector helpers
// ----------------------------------------------------------------------------

inline double dot(PointView a, PointView b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(PointView a) {
    return std::sqrt(dot(a, a));
}

inline double norm_inf(PointView a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Vec scaled(PointView a, double c) {
    Vec r(a.begin(), a.end());
    for (double& v : r) v *= c;
    return r;
}

inline Vec negated(PointView a) { return scaled(a, -1.0); }

inline void add_scaled(Vec& dst, PointView src, double c) {
    if (dst.size() != src.size()) throw DimensionMismatch("add_scaled: size mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
}

inline Vec sum(PointView a, PointView b) {
    Vec r(a.begin(), a.end());
    add_scaled(r, b, 1.0);
    return r;
}

inline bool all_finite(PointView a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

/// Compensated (Kahan) accumulator; keeps deterministic, order-stable sums.
class KahanSum {
public:
    void add(double x) {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// Round-trip safe decimal formatting (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

} // namespace relab

#endif // RELAB_COMMON_HPP
