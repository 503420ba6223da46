#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace drmco {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// lp_core
struct MalformedProgram : Error { using Error::Error; };
struct NumericalBreakdown : Error { using Error::Error; };

// shared
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidParams : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// model
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct DimensionTooLarge : Error { using Error::Error; };

// approx
struct LipschitzViolation : Error { using Error::Error; };

// oracle / ddp
struct InfeasibleStage : Error { using Error::Error; };
struct UnboundedStage : Error { using Error::Error; };
struct ScheduleError : Error { using Error::Error; };
struct ContractViolation : Error { using Error::Error; };

// instances
struct InvalidDepth : Error { using Error::Error; };

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

inline double norm_1(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

inline double norm_2(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

/// Seeded generator with portable output: draws are produced from raw
/// mt19937_64 bits so that identical seeds give identical streams on any
/// standard library implementation.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(gen_() % span);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

/// Verbosity from the DDP_LOG environment variable (error|info|debug).
LogLevel log_level();
void log_line(LogLevel level, const std::string& msg);

}  // namespace drmco
