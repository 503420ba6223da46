#include "drmco/lp.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace drmco {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("DDP_LOG");
        if (env == nullptr) return LogLevel::Error;
        const std::string s(env);
        if (s == "debug") return LogLevel::Debug;
        if (s == "info") return LogLevel::Info;
        return LogLevel::Error;
    }();
    return level;
}

void log_line(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) <= static_cast<int>(log_level())) {
        static std::mutex mu;
        std::scoped_lock lock(mu);
        std::cerr << msg << '\n';
    }
}

int LinearProgram::add_var(double lo, double up, double obj, std::string name) {
    objective.push_back(obj);
    lower.push_back(lo);
    upper.push_back(up);
    for (auto& row : rows) row.coeffs.push_back(0.0);
    if (!name.empty() || !var_names.empty()) {
        var_names.resize(objective.size());
        var_names.back() = std::move(name);
    }
    return static_cast<int>(objective.size()) - 1;
}

int LinearProgram::add_row(Sense sense, double rhs,
                           const std::vector<std::pair<int, double>>& terms,
                           std::string name) {
    LpRow row;
    row.coeffs.assign(num_vars(), 0.0);
    row.sense = sense;
    row.rhs = rhs;
    for (const auto& [j, v] : terms) {
        if (j < 0 || static_cast<std::size_t>(j) >= num_vars())
            throw MalformedProgram("row term references unknown variable");
        row.coeffs[j] += v;
    }
    rows.push_back(std::move(row));
    if (!name.empty() || !row_names.empty()) {
        row_names.resize(rows.size());
        row_names.back() = std::move(name);
    }
    return static_cast<int>(rows.size()) - 1;
}

void LinearProgram::check_well_formed() const {
    const std::size_t n = num_vars();
    if (lower.size() != n || upper.size() != n)
        throw MalformedProgram("bound vectors do not match variable count");
    for (std::size_t j = 0; j < n; ++j) {
        if (lower[j] > upper[j]) throw MalformedProgram("crossed bounds on variable " + std::to_string(j));
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || std::isnan(objective[j]))
            throw MalformedProgram("NaN in program data");
    }
    for (const auto& row : rows) {
        if (row.coeffs.size() != n)
            throw MalformedProgram("row coefficient vector length mismatch");
        if (std::isnan(row.rhs)) throw MalformedProgram("NaN row rhs");
    }
}

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kOptTol = 1e-9;
constexpr double kZeroPivot = 1e-11;
constexpr int kDegenerateLimit = 500;  // pivots before Bland's rule kicks in
constexpr int kRefactorEvery = 64;

struct SparseCol {
    std::vector<std::pair<int, double>> entries;  // (row, value)
};

enum class VarState : char { Basic, AtLower, AtUpper, FreeNB };

// Two-phase bounded-variable revised simplex with an explicit dense basis
// inverse. Variable layout: [0,n) structural, [n,n+m) slack, [n+m,...)
// artificial. Deterministic: fixed pricing, fixed tie-breaks, no randomness.
class Simplex {
  public:
    explicit Simplex(const LinearProgram& lp)
        : n_(static_cast<int>(lp.num_vars())), m_(static_cast<int>(lp.num_rows())) {
        cols_.resize(n_ + m_);
        lo_.assign(n_ + m_, 0.0);
        up_.assign(n_ + m_, 0.0);
        cost_.assign(n_ + m_, 0.0);
        b_.assign(m_, 0.0);
        for (int j = 0; j < n_; ++j) {
            lo_[j] = lp.lower[j];
            up_[j] = lp.upper[j];
            cost_[j] = lp.objective[j];
        }
        for (int i = 0; i < m_; ++i) {
            const auto& row = lp.rows[i];
            b_[i] = row.rhs;
            for (int j = 0; j < n_; ++j)
                if (row.coeffs[j] != 0.0) cols_[j].entries.emplace_back(i, row.coeffs[j]);
            const int s = n_ + i;
            cols_[s].entries.emplace_back(i, 1.0);
            switch (row.sense) {
                case Sense::Le: lo_[s] = 0.0; up_[s] = kInf; break;
                case Sense::Eq: lo_[s] = 0.0; up_[s] = 0.0; break;
                case Sense::Ge: lo_[s] = -kInf; up_[s] = 0.0; break;
            }
        }
    }

    LpSolution run() {
        crash();
        if (need_phase1_) {
            phase_ = 1;
            const Outcome out1 = iterate();
            if (out1 != Outcome::Optimal) throw NumericalBreakdown("phase 1 did not terminate cleanly");
            double infeas = 0.0;
            for (int j = first_artificial_; j < total_; ++j) infeas += x_[j];
            if (infeas > kFeasTol * (1.0 + bscale_)) {
                LpSolution sol;
                sol.status = LpStatus::Infeasible;
                sol.objective_value = kInf;
                return sol;
            }
            expel_artificials();
        }
        phase_ = 2;
        const Outcome out2 = iterate();
        LpSolution sol;
        if (out2 == Outcome::Unbounded) {
            sol.status = LpStatus::Unbounded;
            sol.objective_value = -kInf;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.primal.assign(x_.begin(), x_.begin() + n_);
        sol.dual = row_duals();
        sol.objective_value = 0.0;
        for (int j = 0; j < n_; ++j) sol.objective_value += cost_[j] * x_[j];
        return sol;
    }

  private:
    enum class Outcome { Optimal, Unbounded };

    void crash() {
        total_ = n_ + m_;
        first_artificial_ = total_;
        x_.assign(total_, 0.0);
        state_.assign(total_, VarState::AtLower);
        for (int j = 0; j < total_; ++j) {
            x_[j] = initial_value(j);
            state_[j] = nonbasic_state(j, x_[j]);
        }

        bscale_ = 0.0;
        for (double v : b_) bscale_ = std::max(bscale_, std::abs(v));

        // Residuals with every variable at its initial point; a slack absorbs
        // its row's residual when its own bounds allow, otherwise the row gets
        // an artificial.
        Vec resid = b_;
        for (int j = 0; j < total_; ++j) {
            if (x_[j] == 0.0) continue;
            for (const auto& [i, v] : cols_[j].entries) resid[i] -= v * x_[j];
        }
        basis_.assign(m_, -1);
        need_phase1_ = false;
        for (int i = 0; i < m_; ++i) {
            const int s = n_ + i;
            const double target = x_[s] + resid[i];
            if (target >= lo_[s] - kFeasTol && target <= up_[s] + kFeasTol) {
                basis_[i] = s;
                state_[s] = VarState::Basic;
                x_[s] = target;
            } else {
                const double sigma = resid[i] >= 0.0 ? 1.0 : -1.0;
                cols_.push_back(SparseCol{{{i, sigma}}});
                lo_.push_back(0.0);
                up_.push_back(kInf);
                cost_.push_back(0.0);
                x_.push_back(std::abs(resid[i]));
                state_.push_back(VarState::Basic);
                basis_[i] = total_;
                ++total_;
                need_phase1_ = true;
            }
        }
        refactorize();
    }

    double initial_value(int j) const {
        const bool lo_fin = std::isfinite(lo_[j]);
        const bool up_fin = std::isfinite(up_[j]);
        if (lo_fin && up_fin) return std::abs(lo_[j]) <= std::abs(up_[j]) ? lo_[j] : up_[j];
        if (lo_fin) return lo_[j];
        if (up_fin) return up_[j];
        return 0.0;
    }

    VarState nonbasic_state(int j, double value) const {
        if (!std::isfinite(lo_[j]) && !std::isfinite(up_[j])) return VarState::FreeNB;
        if (value == lo_[j]) return VarState::AtLower;
        if (value == up_[j]) return VarState::AtUpper;
        return std::abs(value - lo_[j]) <= std::abs(value - up_[j]) ? VarState::AtLower
                                                                    : VarState::AtUpper;
    }

    double phase_cost(int j) const {
        if (phase_ == 1) return j >= first_artificial_ ? 1.0 : 0.0;
        return j < n_ ? cost_[j] : 0.0;
    }

    void refactorize() {
        binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        if (m_ == 0) return;
        // Gauss-Jordan on [B | I] with partial pivoting.
        std::vector<Vec> bmat(m_, Vec(m_, 0.0));
        for (int k = 0; k < m_; ++k)
            for (const auto& [i, v] : cols_[basis_[k]].entries) bmat[i][k] = v;
        for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
        for (int k = 0; k < m_; ++k) {
            int piv = -1;
            double best = kZeroPivot;
            for (int i = k; i < m_; ++i)
                if (std::abs(bmat[i][k]) > best) { best = std::abs(bmat[i][k]); piv = i; }
            if (piv < 0) throw NumericalBreakdown("singular basis during refactorization");
            if (piv != k) {
                std::swap(bmat[piv], bmat[k]);
                for (int c = 0; c < m_; ++c)
                    std::swap(binv_[static_cast<std::size_t>(piv) * m_ + c],
                              binv_[static_cast<std::size_t>(k) * m_ + c]);
            }
            const double d = bmat[k][k];
            for (int c = 0; c < m_; ++c) {
                bmat[k][c] /= d;
                binv_[static_cast<std::size_t>(k) * m_ + c] /= d;
            }
            for (int i = 0; i < m_; ++i) {
                if (i == k) continue;
                const double f = bmat[i][k];
                if (f == 0.0) continue;
                for (int c = 0; c < m_; ++c) {
                    bmat[i][c] -= f * bmat[k][c];
                    binv_[static_cast<std::size_t>(i) * m_ + c] -=
                        f * binv_[static_cast<std::size_t>(k) * m_ + c];
                }
            }
        }
        recompute_basic_values();
    }

    void recompute_basic_values() {
        Vec rhs = b_;
        for (int j = 0; j < total_; ++j) {
            if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
            for (const auto& [i, v] : cols_[j].entries) rhs[i] -= v * x_[j];
        }
        for (int i = 0; i < m_; ++i) {
            double s = 0.0;
            for (int k = 0; k < m_; ++k) s += binv_[static_cast<std::size_t>(i) * m_ + k] * rhs[k];
            x_[basis_[i]] = s;
        }
    }

    Vec multiplier_vector() const {
        Vec y(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const double c = phase_cost(basis_[i]);
            if (c == 0.0) continue;
            for (int k = 0; k < m_; ++k) y[k] += c * binv_[static_cast<std::size_t>(i) * m_ + k];
        }
        return y;
    }

    Vec row_duals() const {
        Vec y(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const int j = basis_[i];
            const double c = j < n_ ? cost_[j] : 0.0;
            if (c == 0.0) continue;
            for (int k = 0; k < m_; ++k) y[k] += c * binv_[static_cast<std::size_t>(i) * m_ + k];
        }
        return y;
    }

    double reduced_cost(int j, const Vec& y) const {
        double d = phase_cost(j);
        for (const auto& [i, v] : cols_[j].entries) d -= y[i] * v;
        return d;
    }

    // Eligibility: an improving move exists for the nonbasic variable.
    // Direction +1 means increase, -1 decrease, 0 not eligible.
    int improving_direction(int j, double d) const {
        switch (state_[j]) {
            case VarState::AtLower: return d < -kOptTol ? +1 : 0;
            case VarState::AtUpper: return d > kOptTol ? -1 : 0;
            case VarState::FreeNB:
                if (d < -kOptTol) return +1;
                if (d > kOptTol) return -1;
                return 0;
            case VarState::Basic: return 0;
        }
        return 0;
    }

    Vec ftran(int j) const {
        Vec w(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            double s = 0.0;
            for (const auto& [k, v] : cols_[j].entries)
                s += binv_[static_cast<std::size_t>(i) * m_ + k] * v;
            w[i] = s;
        }
        return w;
    }

    Outcome iterate() {
        int degenerate_streak = 0;
        bool bland = false;
        bool just_refactored = true;
        long pivots_since_refactor = 0;
        const long iter_limit = 50000 + 200L * (n_ + m_);
        for (long iter = 0; iter < iter_limit; ++iter) {
            const Vec y = multiplier_vector();
            int entering = -1, direction = 0;
            double best_score = 0.0;
            for (int j = 0; j < total_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (j >= first_artificial_) continue;  // artificials never re-enter
                if (phase_ == 2 && lo_[j] == up_[j]) continue;
                const double d = reduced_cost(j, y);
                const int dir = improving_direction(j, d);
                if (dir == 0) continue;
                if (bland) { entering = j; direction = dir; break; }
                const double score = std::abs(d);
                if (score > best_score + 1e-15) {
                    best_score = score;
                    entering = j;
                    direction = dir;
                }
            }
            if (entering < 0) {
                if (just_refactored) return Outcome::Optimal;
                refactorize();
                just_refactored = true;
                continue;  // re-price on clean numbers before declaring optimality
            }
            just_refactored = false;

            const Vec w = ftran(entering);
            const double t = static_cast<double>(direction);

            // Ratio test: the entering variable moves by theta >= 0 in
            // direction t; basic i moves at rate -t*w[i].
            double theta = kInf;
            int leaving_row = -1;
            double leaving_pivot = 0.0;
            const double own_range = up_[entering] - lo_[entering];
            if (std::isfinite(own_range)) theta = own_range;
            for (int i = 0; i < m_; ++i) {
                const double rate = -t * w[i];
                if (std::abs(rate) <= kZeroPivot) continue;
                const int jb = basis_[i];
                double limit;
                if (rate > 0.0) {
                    if (!std::isfinite(up_[jb])) continue;
                    limit = (up_[jb] - x_[jb]) / rate;
                } else {
                    if (!std::isfinite(lo_[jb])) continue;
                    limit = (lo_[jb] - x_[jb]) / rate;
                }
                if (limit < -1e-12) limit = 0.0;  // drift guard
                bool accept;
                if (leaving_row < 0) {
                    accept = limit < theta + 1e-12;
                } else if (limit < theta - 1e-12) {
                    accept = true;
                } else if (limit < theta + 1e-12) {
                    accept = bland ? jb < basis_[leaving_row]
                                   : std::abs(w[i]) > std::abs(leaving_pivot) + 1e-15;
                } else {
                    accept = false;
                }
                if (accept) {
                    theta = std::min(theta, std::max(limit, 0.0));
                    leaving_row = i;
                    leaving_pivot = w[i];
                }
            }

            if (!std::isfinite(theta)) {
                if (phase_ == 1) throw NumericalBreakdown("unbounded phase-1 direction");
                return Outcome::Unbounded;
            }
            if (theta <= 1e-12) {
                ++degenerate_streak;
                if (degenerate_streak >= kDegenerateLimit) bland = true;
            } else {
                degenerate_streak = 0;
            }

            if (leaving_row < 0) {
                // Bound flip: entering runs to its opposite bound.
                apply_step(entering, t, theta, w);
                x_[entering] = direction > 0 ? up_[entering] : lo_[entering];
                state_[entering] = direction > 0 ? VarState::AtUpper : VarState::AtLower;
                continue;
            }

            if (std::abs(leaving_pivot) <= kZeroPivot)
                throw NumericalBreakdown("pivot tolerance exhausted");

            apply_step(entering, t, theta, w);
            const int leaving = basis_[leaving_row];
            // Pin the leaving variable exactly on the bound it reached.
            const double rate = -t * leaving_pivot;
            x_[leaving] = rate > 0.0 ? up_[leaving] : lo_[leaving];
            state_[leaving] = rate > 0.0 ? VarState::AtUpper : VarState::AtLower;
            basis_[leaving_row] = entering;
            state_[entering] = VarState::Basic;
            update_binv(leaving_row, w);
            if (++pivots_since_refactor >= kRefactorEvery) {
                refactorize();
                pivots_since_refactor = 0;
            }
        }
        throw NumericalBreakdown("simplex iteration limit exceeded");
    }

    void apply_step(int entering, double t, double theta, const Vec& w) {
        if (theta == 0.0) return;
        x_[entering] += t * theta;
        for (int i = 0; i < m_; ++i) {
            if (w[i] == 0.0) continue;
            x_[basis_[i]] -= t * theta * w[i];
        }
    }

    void update_binv(int r, const Vec& w) {
        const double piv = w[r];
        double* rowr = &binv_[static_cast<std::size_t>(r) * m_];
        for (int c = 0; c < m_; ++c) rowr[c] /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == r || w[i] == 0.0) continue;
            double* rowi = &binv_[static_cast<std::size_t>(i) * m_];
            const double f = w[i];
            for (int c = 0; c < m_; ++c) rowi[c] -= f * rowr[c];
        }
    }

    void expel_artificials() {
        for (int r = 0; r < m_; ++r) {
            if (basis_[r] < first_artificial_) continue;
            int best = -1;
            double best_alpha = 1e-9;
            for (int j = 0; j < n_ + m_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                double alpha = 0.0;
                for (const auto& [i, v] : cols_[j].entries)
                    alpha += binv_[static_cast<std::size_t>(r) * m_ + i] * v;
                if (std::abs(alpha) > best_alpha) { best_alpha = std::abs(alpha); best = j; }
            }
            if (best < 0) continue;  // redundant row, artificial stays pinned at 0
            const Vec w = ftran(best);
            const int art = basis_[r];
            basis_[r] = best;
            state_[best] = VarState::Basic;
            state_[art] = VarState::AtLower;
            x_[art] = 0.0;
            update_binv(r, w);
        }
        for (int j = first_artificial_; j < total_; ++j) up_[j] = 0.0;  // lock out
        refactorize();
    }

    int n_, m_;
    int total_ = 0;
    int first_artificial_ = 0;
    int phase_ = 2;
    bool need_phase1_ = false;
    double bscale_ = 0.0;
    std::vector<SparseCol> cols_;
    Vec lo_, up_, cost_, b_, x_;
    std::vector<VarState> state_;
    std::vector<int> basis_;
    Vec binv_;  // m x m row-major
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    lp.check_well_formed();
    Simplex simplex(lp);
    return simplex.run();
}

}  // namespace drmco
