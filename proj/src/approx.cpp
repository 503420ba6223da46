#include "drmco/approx.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "drmco/lp.hpp"

namespace drmco {

double Cut::eval(const Vec& x) const {
    if (x.size() != anchor.size()) throw DimensionMismatch("cut evaluated at wrong dimension");
    double v = value_at_anchor;
    for (std::size_t k = 0; k < x.size(); ++k) v += gradient[k] * (x[k] - anchor[k]);
    return v;
}

double CutPool::eval_under(const Vec& x) const {
    double best = 0.0;  // permanent floor, valid for nonnegative stage costs
    for (const Cut& cut : cuts_) best = std::max(best, cut.eval(x));
    return best;
}

void CutPool::add_cut(const Cut& cut) {
    if (cut.gradient.size() != cut.anchor.size())
        throw DimensionMismatch("cut gradient/anchor length mismatch");
    if (!cuts_.empty() && cuts_.front().anchor.size() != cut.anchor.size())
        throw DimensionMismatch("cut dimension differs from pool");
    if (cap_ && norm_inf(cut.gradient) > *cap_ + 1e-9)
        throw LipschitzViolation("cut gradient inf-norm " + std::to_string(norm_inf(cut.gradient)) +
                                 " exceeds cap " + std::to_string(*cap_) + " at stage " +
                                 std::to_string(stage_));
    for (const Cut& existing : cuts_) {
        if (existing.anchor == cut.anchor && existing.value_at_anchor == cut.value_at_anchor &&
            existing.gradient == cut.gradient)
            return;  // exact duplicate, max unchanged
    }
    cuts_.push_back(cut);
}

EnvelopePool EnvelopePool::terminal(int stage) {
    EnvelopePool pool(stage, 0.0);
    pool.terminal_ = true;
    return pool;
}

namespace {

std::string cache_key(const Vec& x) {
    return std::string(reinterpret_cast<const char*>(x.data()), x.size() * sizeof(double));
}

}  // namespace

double EnvelopePool::eval_over(const Vec& x) const {
    if (terminal_) return 0.0;
    if (points_.empty()) return kInf;
    const std::size_t d = points_.front().anchor.size();
    if (x.size() != d) throw DimensionMismatch("envelope evaluated at wrong dimension");

    const std::string key = cache_key(x);
    {
        std::scoped_lock lock(cache_mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }

    // The hull of cones collapses exactly to interpolation plus one 1-norm
    // term: min_{mu in simplex} sum_j mu_j v_j + M |x - sum_j mu_j anchor_j|_1
    // (per-point deviations pool into a single aggregate, which the triangle
    // inequality makes optimal). With M = +infinity the interpolation is
    // pinned to x.
    const std::size_t J = points_.size();
    const bool hull_only = !std::isfinite(lipschitz_);
    LinearProgram lp;
    std::vector<int> mu(J);
    for (std::size_t j = 0; j < J; ++j) mu[j] = lp.add_var(0.0, 1.0, points_[j].value);
    if (!hull_only) {
        for (std::size_t k = 0; k < d; ++k) {
            const int s = lp.add_var(0.0, kInf, lipschitz_);
            std::vector<std::pair<int, double>> pos{{s, 1.0}};
            std::vector<std::pair<int, double>> neg{{s, 1.0}};
            for (std::size_t j = 0; j < J; ++j) {
                if (points_[j].anchor[k] == 0.0) continue;
                pos.emplace_back(mu[j], points_[j].anchor[k]);
                neg.emplace_back(mu[j], -points_[j].anchor[k]);
            }
            lp.add_row(Sense::Ge, x[k], pos);    // s + sum mu anchor >= x
            lp.add_row(Sense::Ge, -x[k], neg);   // s - sum mu anchor >= -x
        }
    } else {
        for (std::size_t k = 0; k < d; ++k) {
            std::vector<std::pair<int, double>> terms;
            for (std::size_t j = 0; j < J; ++j)
                if (points_[j].anchor[k] != 0.0) terms.emplace_back(mu[j], points_[j].anchor[k]);
            lp.add_row(Sense::Eq, x[k], terms);
        }
    }
    {
        std::vector<std::pair<int, double>> terms;
        for (std::size_t j = 0; j < J; ++j) terms.emplace_back(mu[j], 1.0);
        lp.add_row(Sense::Eq, 1.0, terms);
    }

    const LpSolution sol = solve_lp(lp);
    double value;
    if (sol.status == LpStatus::Infeasible) {
        value = kInf;  // outside the point hull in unregularized mode
    } else if (sol.status == LpStatus::Optimal) {
        value = sol.objective_value;
    } else {
        throw NumericalBreakdown("envelope evaluation LP unbounded");
    }
    std::scoped_lock lock(cache_mutex_);
    cache_.emplace(key, value);
    return value;
}

void EnvelopePool::add_point(const EnvelopePoint& pt) {
    if (terminal_) throw InvalidParams("terminal envelope pool cannot take points");
    if (!points_.empty() && points_.front().anchor.size() != pt.anchor.size())
        throw DimensionMismatch("envelope point dimension differs from pool");
    if (!std::isfinite(pt.value)) return;  // conv with an infinite cone is a no-op
    for (EnvelopePoint& existing : points_) {
        if (existing.anchor == pt.anchor) {
            if (pt.value < existing.value) {
                existing.value = pt.value;
                std::scoped_lock lock(cache_mutex_);
                cache_.clear();
            }
            return;
        }
    }
    points_.push_back(pt);
    std::scoped_lock lock(cache_mutex_);
    cache_.clear();
}

std::string pools_to_json(const std::vector<CutPool>& under,
                          const std::vector<EnvelopePool>& over) {
    nlohmann::json doc;
    doc["cut_pools"] = nlohmann::json::array();
    for (const CutPool& pool : under) {
        nlohmann::json p;
        p["stage"] = pool.stage();
        if (pool.lipschitz_cap()) p["cap"] = *pool.lipschitz_cap();
        p["cuts"] = nlohmann::json::array();
        for (const Cut& cut : pool.cuts())
            p["cuts"].push_back({{"anchor", cut.anchor},
                                 {"value", cut.value_at_anchor},
                                 {"gradient", cut.gradient}});
        doc["cut_pools"].push_back(std::move(p));
    }
    doc["envelope_pools"] = nlohmann::json::array();
    for (const EnvelopePool& pool : over) {
        nlohmann::json p;
        p["stage"] = pool.stage();
        p["terminal"] = pool.is_terminal();
        if (std::isfinite(pool.lipschitz())) p["lipschitz"] = pool.lipschitz();
        p["points"] = nlohmann::json::array();
        for (const EnvelopePoint& pt : pool.points())
            p["points"].push_back({{"anchor", pt.anchor}, {"value", pt.value}});
        doc["envelope_pools"].push_back(std::move(p));
    }
    return doc.dump(2);
}

void pools_from_json(const std::string& text, std::vector<CutPool>& under,
                     std::vector<EnvelopePool>& over) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("warm-start JSON: ") + e.what());
    }
    under.clear();
    over.clear();
    try {
        for (const auto& p : doc.at("cut_pools")) {
            std::optional<double> cap;
            if (p.contains("cap")) cap = p["cap"].get<double>();
            CutPool pool(p.at("stage").get<int>(), cap);
            for (const auto& c : p.at("cuts")) {
                Cut cut;
                cut.anchor = c.at("anchor").get<Vec>();
                cut.value_at_anchor = c.at("value").get<double>();
                cut.gradient = c.at("gradient").get<Vec>();
                pool.add_cut(cut);
            }
            under.push_back(std::move(pool));
        }
        for (const auto& p : doc.at("envelope_pools")) {
            if (p.value("terminal", false)) {
                over.push_back(EnvelopePool::terminal(p.at("stage").get<int>()));
                continue;
            }
            const double lip = p.contains("lipschitz") ? p["lipschitz"].get<double>() : kInf;
            EnvelopePool pool(p.at("stage").get<int>(), lip);
            for (const auto& e : p.at("points")) {
                EnvelopePoint pt;
                pt.anchor = e.at("anchor").get<Vec>();
                pt.value = e.at("value").get<double>();
                pool.add_point(pt);
            }
            over.push_back(std::move(pool));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("warm-start JSON: ") + e.what());
    }
}

}  // namespace drmco
