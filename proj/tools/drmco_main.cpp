#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "drmco/ddp.hpp"
#include "drmco/instances.hpp"
#include "drmco/model.hpp"
#include "drmco/oracle.hpp"

namespace fs = std::filesystem;
using namespace drmco;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << content;
    }
    fs::rename(tmp, path);
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}

Vec parse_double_list(const std::string& text) {
    Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

struct GenOptions {
    std::string family;
    std::string out;
    std::uint64_t seed = 0;
    int stages = 0;  // 0 = family default
    int products = 0, factors = 0, samples = 0, regions = 0, dim = 0;
    double beta = -1.0, eps = -1.0, lipschitz = -1.0, diameter = -1.0, reg = -1.0;
};

int cmd_gen(const GenOptions& opt) {
    Instance inst;
    nlohmann::json params;
    params["family"] = opt.family;
    params["seed"] = opt.seed;
    if (opt.family == "inventory" || opt.family == "inventory-norecourse") {
        InventoryParams p;
        p.seed = opt.seed;
        if (opt.stages > 0) p.stages = opt.stages;
        if (opt.products > 0) p.products = opt.products;
        if (opt.factors > 0) p.factors = opt.factors;
        if (opt.reg > 0) p.reg_factor = opt.reg;
        inst = gen_inventory(p, opt.family == "inventory");
        params["stages"] = p.stages;
        params["products"] = p.products;
        params["factors"] = p.factors;
        params["reg_factor"] = p.reg_factor;
    } else if (opt.family == "hydro") {
        HydroParams p;
        p.seed = opt.seed;
        if (opt.stages > 0) p.stages = opt.stages;
        if (opt.samples > 0) p.samples = opt.samples;
        if (opt.regions > 0) p.regions = opt.regions;
        if (opt.beta >= 0) p.beta = opt.beta;
        if (opt.reg > 0) p.reg_factor = opt.reg;
        inst = gen_hydrothermal(p);
        params["stages"] = p.stages;
        params["samples"] = p.samples;
        params["regions"] = p.regions;
        params["beta"] = p.beta;
        params["reg_factor"] = p.reg_factor;
    } else if (opt.family == "chain") {
        const int T = opt.stages > 0 ? opt.stages : 5;
        const double reg = opt.reg > 0 ? opt.reg : 3.0;
        inst = gen_pathological_chain(T, reg);
        params["stages"] = T;
        params["reg_factor"] = reg;
    } else if (opt.family == "worstcase") {
        WorstCaseParams p;
        p.seed = opt.seed;
        if (opt.stages > 0) p.stages = opt.stages;
        if (opt.dim > 0) p.dim = opt.dim;
        if (opt.eps > 0) p.epsilon = opt.eps;
        if (opt.lipschitz > 0) p.lipschitz = opt.lipschitz;
        if (opt.diameter > 0) p.diameter = opt.diameter;
        auto wc = gen_worstcase(p);
        inst = std::move(wc.instance);
        params["stages"] = p.stages;
        params["dim"] = p.dim;
        params["epsilon"] = p.epsilon;
        params["lipschitz"] = p.lipschitz;
        params["diameter"] = p.diameter;
        nlohmann::json counts = nlohmann::json::array();
        for (int t = 2; t <= p.stages; ++t) counts.push_back(wc.points[t - 1].size());
        params["cap_counts"] = counts;
    } else if (opt.family == "tiny2") {
        inst = gen_tiny2(Tiny2Ambiguity::Simplex, opt.reg > 0 ? opt.reg : 5.0);
    } else {
        std::cerr << "unknown family: " << opt.family << "\n";
        return 1;
    }
    const Diagnostics diags = validate(inst);
    if (diags.has_error()) {
        std::cerr << diags.to_string();
        return 1;
    }
    save_instance(inst, opt.out);
    params["artifact_version"] = kVersion;
    params["created_utc"] = iso_timestamp();
    write_atomic(opt.out + ".manifest.json", params.dump(2) + "\n");
    std::cout << "wrote " << opt.out << " (" << inst.T << " stages)\n";
    return 0;
}

struct SolveOptions {
    std::string in;
    std::string mode = "seq";
    double eps = -1.0;
    double rel_gap = -1.0;
    std::string schedule;
    std::string reg;
    bool adaptive_m = false;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
    long max_iters = 100000;
    double max_secs = kInf;
};

SolveMode parse_mode(const std::string& mode) {
    if (mode == "seq") return SolveMode::SeqDDP;
    if (mode == "nddp") return SolveMode::NDDP;
    throw InvalidParams("--mode must be seq or nddp");
}

SolveConfig build_config(const SolveOptions& opt, int T) {
    SolveConfig cfg;
    cfg.mode = parse_mode(opt.mode);
    if (opt.eps > 0) cfg.epsilon = opt.eps;
    if (opt.rel_gap > 0) cfg.rel_gap = opt.rel_gap;
    if (!cfg.epsilon && !cfg.rel_gap)
        throw InvalidParams("pass exactly one of --eps or --rel-gap");
    cfg.max_iterations = opt.max_iters;
    cfg.max_wall_seconds = opt.max_secs;
    cfg.rng_seed = opt.seed;
    cfg.threads = opt.threads;
    cfg.adaptive_m = opt.adaptive_m;
    if (!opt.schedule.empty()) {
        if (opt.schedule.rfind("static:", 0) == 0) {
            cfg.schedule = GapSchedule::fixed(parse_double_list(opt.schedule.substr(7)));
        } else if (opt.schedule.rfind("dynamic:", 0) == 0) {
            cfg.schedule = GapSchedule::dynamic_relative(std::stod(opt.schedule.substr(8)));
        } else {
            throw InvalidParams("--schedule must be static:d1,...,dT or dynamic:alpha");
        }
    } else if (cfg.mode == SolveMode::NDDP) {
        // default schedules matching the gap criterion
        if (cfg.rel_gap) {
            cfg.schedule = GapSchedule::dynamic_relative(*cfg.rel_gap);
        } else {
            Vec deltas(T);
            for (int t = 1; t <= T; ++t) deltas[t - 1] = *cfg.epsilon * (static_cast<double>(T - t) / (T - 1));
            cfg.schedule = GapSchedule::fixed(deltas);
        }
    }
    return cfg;
}

void apply_reg_override(Instance& inst, const std::string& reg) {
    if (reg.empty()) return;
    if (reg == "unregularized") {
        inst.reg_factors.reset();
        return;
    }
    Vec factors = parse_double_list(reg);
    if (factors.size() == 1) factors.assign(std::max(inst.T - 1, 0), factors[0]);
    if (factors.size() != static_cast<std::size_t>(std::max(inst.T - 1, 0)))
        throw InvalidParams("--reg needs one factor or one per stage 1..T-1");
    inst.reg_factors = std::move(factors);
}

int cmd_solve(const SolveOptions& opt) {
    Instance inst = load_instance(opt.in);
    apply_reg_override(inst, opt.reg);
    const Diagnostics diags = validate(inst);
    if (diags.has_error()) {
        std::cerr << diags.to_string();
        return 1;
    }
    const SolveConfig cfg = build_config(opt, inst.T);

    fs::create_directories(opt.out_dir);
    const std::string trace_path = (fs::path(opt.out_dir) / "trace.csv").string();
    const std::string solution_path = (fs::path(opt.out_dir) / "solution.json").string();
    const std::string manifest_path = (fs::path(opt.out_dir) / "manifest.json").string();

    {
        std::ostringstream cfg_text;
        cfg_text << opt.mode << '|' << (opt.eps > 0 ? fmt17(opt.eps) : "-") << '|'
                 << (opt.rel_gap > 0 ? fmt17(opt.rel_gap) : "-") << '|' << opt.schedule << '|'
                 << opt.reg << '|' << opt.adaptive_m << '|' << opt.threads;
        nlohmann::json manifest;
        manifest["command_line"] = "solve --in " + opt.in + " --mode " + opt.mode;
        manifest["config_hash"] = fnv1a(cfg_text.str());
        manifest["instance_hash"] = fnv1a(read_file(opt.in));
        manifest["seed"] = opt.seed;
        manifest["artifact_version"] = kVersion;
        manifest["created_utc"] = iso_timestamp();
        write_atomic(manifest_path, manifest.dump(2) + "\n");
    }

    std::ofstream trace(trace_path, std::ios::binary);
    trace << "iter,stage_path,lb,ub,gap,n_eval,wall_ms\n" << std::flush;
    IterationCallback callback = [&](const IterationRecord& rec, const std::vector<CutPool>&,
                                     const std::vector<EnvelopePool>&) {
        std::string path;
        for (std::size_t i = 0; i < rec.stage_path.size(); ++i) {
            if (i > 0) path += '-';
            path += std::to_string(rec.stage_path[i]);
        }
        trace << rec.iteration << ',' << path << ',' << fmt17(rec.lower_bound) << ','
              << fmt17(rec.upper_bound) << ',' << fmt17(rec.upper_bound - rec.lower_bound) << ','
              << rec.n_eval << ',' << fmt17(rec.wall_ms) << '\n'
              << std::flush;
        log_line(LogLevel::Info, "iter " + std::to_string(rec.iteration) +
                                     " lb=" + std::to_string(rec.lower_bound) +
                                     " ub=" + std::to_string(rec.upper_bound));
    };

    const auto [sol, log] = solve(inst, cfg, callback);

    nlohmann::json out;
    out["x1"] = sol.x1;
    out["y1"] = sol.y1;
    out["lb"] = sol.lower_bound;
    out["ub"] = std::isfinite(sol.upper_bound) ? nlohmann::json(sol.upper_bound)
                                               : nlohmann::json("inf");
    out["n_eval"] = sol.n_eval;
    switch (log.status) {
        case SolveStatus::Converged: out["status"] = "converged"; break;
        case SolveStatus::IterLimit: out["status"] = "iter_limit"; break;
        case SolveStatus::TimeLimit: out["status"] = "time_limit"; break;
        case SolveStatus::Infeasible: out["status"] = "infeasible"; break;
    }
    write_atomic(solution_path, out.dump(2) + "\n");

    switch (log.status) {
        case SolveStatus::Converged:
            std::cout << "converged lb=" << fmt17(sol.lower_bound)
                      << " ub=" << fmt17(sol.upper_bound) << " n_eval=" << sol.n_eval << "\n";
            return 0;
        case SolveStatus::IterLimit:
        case SolveStatus::TimeLimit:
            std::cerr << "stopped at limit, gap " << fmt17(sol.upper_bound - sol.lower_bound)
                      << "\n";
            return 2;
        case SolveStatus::Infeasible:
            std::cerr << "infeasible: " << log.message << "\n";
            return 3;
    }
    return 1;
}

struct VerifyOptions {
    std::string in;
    std::string warm_start;
    std::string report;
    double eps = 1e-6;
    int samples = 50;
    std::int64_t path_limit = kDefaultSupportLimit;
    std::uint64_t seed = 0;
    int threads = 1;
};

int cmd_verify(const VerifyOptions& opt) {
    Instance inst = load_instance(opt.in);
    nlohmann::json report;
    report["instance"] = opt.in;
    std::string violated;

    double paths = 1.0;
    for (int t = 2; t <= inst.T; ++t) paths *= static_cast<double>(inst.nodes(t).size());
    if (paths > static_cast<double>(opt.path_limit)) {
        std::cerr << "instance has " << paths << " scenario paths, past the limit "
                  << opt.path_limit << "\n";
        return 4;
    }

    const bool regularized = inst.regularized();
    const double exact = extensive_optimum(inst, opt.path_limit);
    report["extensive_optimum"] = exact;

    // Reference values of the exact cost-to-go at sampled states, per stage.
    Rng rng(opt.seed);
    std::vector<std::vector<Vec>> sample_states(inst.T);
    std::vector<Vec> sample_values(inst.T);
    for (int t = 1; t < inst.T; ++t) {
        const auto [lo, hi] = inst.state_box(t);
        for (int s = 0; s < opt.samples; ++s) {
            Vec x(lo.size());
            for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.uniform(lo[k], hi[k]);
            sample_states[t - 1].push_back(x);
            sample_values[t - 1].push_back(
                extensive_cost_to_go(inst, t, x, regularized, opt.path_limit));
        }
    }

    WarmStart warm;
    const WarmStart* warm_ptr = nullptr;
    if (!opt.warm_start.empty()) {
        try {
            pools_from_json(read_file(opt.warm_start), warm.under, warm.over);
        } catch (const LipschitzViolation& e) {
            std::cerr << "violated invariant: cut Lipschitz cap (" << e.what() << ")\n";
            return 5;
        }
        for (const CutPool& pool : warm.under) {
            const int t = pool.stage();
            if (t < 1 || t >= inst.T) continue;
            if (regularized) {
                for (const Cut& cut : pool.cuts()) {
                    if (norm_inf(cut.gradient) > inst.reg_factor(t) + 1e-9) {
                        std::cerr << "violated invariant: warm-start cut gradient exceeds M_"
                                  << t << "\n";
                        return 5;
                    }
                }
            }
            for (std::size_t s = 0; s < sample_states[t - 1].size(); ++s) {
                if (pool.eval_under(sample_states[t - 1][s]) >
                    sample_values[t - 1][s] + 1e-6) {
                    std::cerr << "violated invariant: warm-start cut pool exceeds the exact "
                                 "cost-to-go at stage "
                              << t << "\n";
                    return 5;
                }
            }
        }
        for (const EnvelopePool& pool : warm.over) {
            const int t = pool.stage();
            if (t < 1 || t >= inst.T || pool.is_terminal()) continue;
            for (std::size_t s = 0; s < sample_states[t - 1].size(); ++s) {
                if (pool.eval_over(sample_states[t - 1][s]) <
                    sample_values[t - 1][s] - 1e-6) {
                    std::cerr << "violated invariant: warm-start envelope is below the exact "
                                 "cost-to-go at stage "
                              << t << "\n";
                    return 5;
                }
            }
        }
        warm_ptr = &warm;
    }

    SolveConfig cfg;
    cfg.mode = SolveMode::SeqDDP;
    cfg.epsilon = opt.eps;
    cfg.threads = opt.threads;
    long checks = 0;
    IterationCallback observer = [&](const IterationRecord& rec,
                                     const std::vector<CutPool>& under,
                                     const std::vector<EnvelopePool>& over) {
        if (!violated.empty()) return;
        if (rec.lower_bound > exact + 1e-6) violated = "lower bound exceeds the extensive optimum";
        if (std::isfinite(rec.upper_bound) && rec.upper_bound < exact - 1e-6)
            violated = "upper bound is below the extensive optimum";
        for (int t = 1; t < inst.T && violated.empty(); ++t) {
            for (std::size_t s = 0; s < sample_states[t - 1].size(); ++s) {
                const double lo = under[t - 1].eval_under(sample_states[t - 1][s]);
                const double hi = over[t - 1].eval_over(sample_states[t - 1][s]);
                const double mid = sample_values[t - 1][s];
                ++checks;
                if (lo > mid + 1e-6) {
                    violated = "under-approximation exceeds the exact cost-to-go";
                    break;
                }
                if (hi < mid - 1e-6) {
                    violated = "over-approximation is below the exact cost-to-go";
                    break;
                }
            }
        }
    };
    const auto [sol, log] = solve_seq_ddp(inst, cfg, observer, warm_ptr);
    report["lb"] = sol.lower_bound;
    report["ub"] = sol.upper_bound;
    report["n_eval"] = sol.n_eval;
    report["sandwich_checks"] = checks;
    report["status"] = violated.empty() ? "ok" : violated;
    if (violated.empty() && log.status == SolveStatus::Converged) {
        if (std::abs(sol.lower_bound - exact) > std::max(1e-6, opt.eps))
            violated = "converged value does not match the extensive optimum";
    }
    if (!opt.report.empty()) write_atomic(opt.report, report.dump(2) + "\n");
    if (!violated.empty()) {
        std::cerr << "violated invariant: " << violated << "\n";
        return 5;
    }
    std::cout << "verified: optimum " << fmt17(exact) << ", " << checks
              << " sandwich checks passed\n";
    return 0;
}

struct BoundOptions {
    int T = 0;
    std::string dims, diameters, lipschitz;
    double eps = -1.0, alpha = -1.0, C = -1.0;
    std::string schedule;
    std::string mode = "seq";
    std::string trace;
};

int cmd_bound(const BoundOptions& opt) {
    BoundParams params;
    params.T = opt.T;
    auto expand = [&](const std::string& text) {
        Vec v = parse_double_list(text);
        if (v.size() == 1) v.assign(std::max(opt.T - 1, 0), v[0]);
        return v;
    };
    params.dims = expand(opt.dims);
    params.diameters = expand(opt.diameters);
    params.lipschitz = expand(opt.lipschitz);
    if (!opt.schedule.empty()) params.delta = parse_double_list(opt.schedule);
    if (opt.eps > 0) params.epsilon = opt.eps;
    if (opt.alpha > 0) params.alpha = opt.alpha;
    if (opt.C > 0) params.C = opt.C;
    const SolveMode mode = parse_mode(opt.mode);
    const double bound = eval_upper_bound(params, mode);
    std::cout << fmt17(bound) << "\n";
    if (!opt.trace.empty()) {
        std::ifstream in(opt.trace);
        if (!in) throw IoError("cannot open trace " + opt.trace);
        std::string line, last;
        std::getline(in, line);  // header
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        if (last.empty()) throw InvalidParams("trace has no records");
        // n_eval is the second-to-last column
        std::vector<std::string> cols;
        std::stringstream ss(last);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        const double observed = std::stod(cols[cols.size() - 2]);
        std::cout << "observed n_eval " << observed << (observed <= bound ? " <= " : " > ")
                  << "bound\n";
        return observed <= bound ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust multistage convex optimization solver"};
    app.require_subcommand(1);

    GenOptions gen_opt;
    auto* gen = app.add_subcommand("gen", "generate a benchmark instance");
    gen->add_option("--family", gen_opt.family,
                    "inventory|inventory-norecourse|hydro|chain|worstcase|tiny2")
        ->required();
    gen->add_option("--out", gen_opt.out, "output instance file")->required();
    gen->add_option("--seed", gen_opt.seed);
    gen->add_option("--stages", gen_opt.stages);
    gen->add_option("--products", gen_opt.products);
    gen->add_option("--factors", gen_opt.factors);
    gen->add_option("--samples", gen_opt.samples);
    gen->add_option("--regions", gen_opt.regions);
    gen->add_option("--dim", gen_opt.dim);
    gen->add_option("--beta", gen_opt.beta);
    gen->add_option("--eps", gen_opt.eps);
    gen->add_option("--lipschitz", gen_opt.lipschitz);
    gen->add_option("--diameter", gen_opt.diameter);
    gen->add_option("--reg", gen_opt.reg, "regularization factor");

    SolveOptions solve_opt;
    auto* solve_cmd = app.add_subcommand("solve", "run a DDP solve");
    solve_cmd->add_option("--in", solve_opt.in)->required();
    solve_cmd->add_option("--mode", solve_opt.mode, "seq|nddp");
    solve_cmd->add_option("--eps", solve_opt.eps, "absolute optimality gap");
    solve_cmd->add_option("--rel-gap", solve_opt.rel_gap, "relative optimality gap");
    solve_cmd->add_option("--schedule", solve_opt.schedule, "static:d1,..,dT or dynamic:alpha");
    solve_cmd->add_option("--reg", solve_opt.reg, "factor list or 'unregularized'");
    solve_cmd->add_flag_callback(
        "--unregularized", [&solve_opt] { solve_opt.reg = "unregularized"; },
        "shorthand for --reg unregularized");
    solve_cmd->add_flag("--adaptive-m", solve_opt.adaptive_m);
    solve_cmd->add_option("--seed", solve_opt.seed);
    solve_cmd->add_option("--threads", solve_opt.threads);
    solve_cmd->add_option("--out", solve_opt.out_dir, "output directory");
    solve_cmd->add_option("--max-iters", solve_opt.max_iters);
    solve_cmd->add_option("--max-secs", solve_opt.max_secs);

    VerifyOptions verify_opt;
    auto* verify_cmd = app.add_subcommand("verify", "check invariants against the extensive oracle");
    verify_cmd->add_option("--in", verify_opt.in)->required();
    verify_cmd->add_option("--warm-start", verify_opt.warm_start);
    verify_cmd->add_option("--out", verify_opt.report, "report JSON path");
    verify_cmd->add_option("--eps", verify_opt.eps);
    verify_cmd->add_option("--samples", verify_opt.samples);
    verify_cmd->add_option("--path-limit", verify_opt.path_limit);
    verify_cmd->add_option("--seed", verify_opt.seed);
    verify_cmd->add_option("--threads", verify_opt.threads);

    BoundOptions bound_opt;
    auto* bound_cmd = app.add_subcommand("bound", "evaluate oracle-complexity bounds");
    bound_cmd->add_option("--T", bound_opt.T)->required();
    bound_cmd->add_option("--d", bound_opt.dims)->required();
    bound_cmd->add_option("--M", bound_opt.lipschitz)->required();
    bound_cmd->add_option("--D", bound_opt.diameters)->required();
    bound_cmd->add_option("--eps", bound_opt.eps);
    bound_cmd->add_option("--alpha", bound_opt.alpha);
    bound_cmd->add_option("--C", bound_opt.C);
    bound_cmd->add_option("--schedule", bound_opt.schedule, "analysis gap vector d1,..,dT");
    bound_cmd->add_option("--mode", bound_opt.mode, "seq|nddp");
    bound_cmd->add_option("--trace", bound_opt.trace, "compare against a trace CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen(gen_opt);
        if (*solve_cmd) return cmd_solve(solve_opt);
        if (*verify_cmd) return cmd_verify(verify_opt);
        if (*bound_cmd) return cmd_bound(bound_opt);
    } catch (const TooLarge& e) {
        std::cerr << "too large: " << e.what() << "\n";
        return 4;
    } catch (const InfeasibleStage& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
