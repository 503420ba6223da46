#pragma once

#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "drmco/common.hpp"

namespace drmco {

/// Affine under-estimator v + g.(x - anchor).
struct Cut {
    Vec anchor;
    double value_at_anchor = 0.0;
    Vec gradient;

    double eval(const Vec& x) const;
};

/// Under-approximation of a cost-to-go function: the pointwise maximum of a
/// permanent zero floor and the collected cuts.
class CutPool {
  public:
    CutPool() = default;
    /// `lipschitz_cap` bounds the gradient inf-norm of admissible cuts;
    /// pass nullopt in unregularized mode (no cap).
    CutPool(int stage, std::optional<double> lipschitz_cap)
        : stage_(stage), cap_(lipschitz_cap) {}

    int stage() const { return stage_; }
    std::optional<double> lipschitz_cap() const { return cap_; }
    const std::vector<Cut>& cuts() const { return cuts_; }
    std::size_t size() const { return cuts_.size(); }

    double eval_under(const Vec& x) const;

    /// Throws LipschitzViolation if the gradient inf-norm exceeds the cap
    /// by more than 1e-9. Exact duplicates are skipped.
    void add_cut(const Cut& cut);

  private:
    int stage_ = 0;
    std::optional<double> cap_;
    std::vector<Cut> cuts_;
};

struct EnvelopePoint {
    Vec anchor;
    double value = 0.0;
};

/// Over-approximation of a cost-to-go function: the convex hull of norm
/// cones v_j + M |x - anchor_j|_1. Empty means identically +infinity; the
/// terminal pool is identically zero. With M = +infinity the cones collapse
/// and the pool is the convex interpolation of its points, +infinity outside
/// their hull (the unregularized diagnostic mode).
class EnvelopePool {
  public:
    EnvelopePool() = default;
    EnvelopePool(int stage, double lipschitz) : stage_(stage), lipschitz_(lipschitz) {}
    EnvelopePool(const EnvelopePool& other)
        : stage_(other.stage_), lipschitz_(other.lipschitz_), terminal_(other.terminal_),
          points_(other.points_) {}
    EnvelopePool& operator=(const EnvelopePool& other) {
        stage_ = other.stage_;
        lipschitz_ = other.lipschitz_;
        terminal_ = other.terminal_;
        points_ = other.points_;
        std::scoped_lock lock(cache_mutex_);
        cache_.clear();
        return *this;
    }

    static EnvelopePool terminal(int stage);

    int stage() const { return stage_; }
    double lipschitz() const { return lipschitz_; }
    bool is_terminal() const { return terminal_; }
    bool empty() const { return !terminal_ && points_.empty(); }
    const std::vector<EnvelopePoint>& points() const { return points_; }

    /// Envelope value at x; +infinity when empty (or outside the point hull
    /// in unregularized mode). Values are cached per evaluation point.
    double eval_over(const Vec& x) const;

    /// A repeated anchor keeps the lower of the two values.
    void add_point(const EnvelopePoint& pt);

  private:
    int stage_ = 0;
    double lipschitz_ = 0.0;
    bool terminal_ = false;
    std::vector<EnvelopePoint> points_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::string, double> cache_;
};

/// Warm-start files: pool contents as JSON with full-precision floats.
std::string pools_to_json(const std::vector<CutPool>& under,
                          const std::vector<EnvelopePool>& over);
void pools_from_json(const std::string& text, std::vector<CutPool>& under,
                     std::vector<EnvelopePool>& over);

}  // namespace drmco
