#include "hmptcp/exp/presets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "hmptcp/exp/csv.hpp"

namespace hmptcp::exp {

namespace {

constexpr double kPacketBits = 8.0 * sim::kDefaultPacketBytes;
const std::vector<Controller> kControllers{Controller::Lia, Controller::DrlOnly, Controller::Hybrid};
const std::vector<double> kCapacitySweep{20, 30, 40, 50};

std::int64_t model_bytes(double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(600e6 * scale)));
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct Context {
    const PresetOptions& opt;
    std::shared_ptr<agent::AcrNetworks> hybrid, drl;
    PresetResult result;

    void note(const std::string& msg) const {
        if (opt.progress) opt.progress(msg);
    }

    RunResult run(Scenario s) {
        RunOptions ro;
        if (opt.checkpoint_dir) {
            const auto h = *opt.checkpoint_dir / "hybrid.ckpt";
            const auto d = *opt.checkpoint_dir / "drl.ckpt";
            if (std::filesystem::exists(h)) s.agent.hybrid_checkpoint = h;
            if (std::filesystem::exists(d)) s.agent.drl_checkpoint = d;
        }
        // Inference leaves the networks untouched, so one load serves every run.
        if (!hybrid) hybrid = make_networks(s, Controller::Hybrid);
        if (!drl) drl = make_networks(s, Controller::DrlOnly);
        ro.hybrid_networks = hybrid;
        ro.drl_networks = drl;
        return run_scenario(s, ro);
    }

    void add(std::string group, double value, Controller c, const RunMetrics& m) {
        result.runs.push_back(PresetRun{std::move(group), value, c, m});
    }

    std::filesystem::path file(const std::string& name) {
        auto f = opt.out / name;
        result.files.push_back(f);
        return f;
    }

    void write_groups(const std::string& preset, const std::string& sweep_name) {
        std::map<std::string, std::vector<const PresetRun*>> groups;
        std::vector<std::string> order;
        for (const auto& r : result.runs) {
            if (!groups.contains(r.group)) order.push_back(r.group);
            groups[r.group].push_back(&r);
        }
        CsvWriter summary(file(preset + "_summary.csv"),
                          {"group", sweep_name, "controller", "runs", "median_iter_time_s", "median_unfairness_iters",
                           "median_fluct_pps", "median_straggler_tput_pps"});
        for (const auto& g : order) {
            std::vector<RunMetrics> ms;
            for (const auto* r : groups[g]) ms.push_back(r->metrics);
            write_metrics(file(preset + "_" + g + "_metrics.csv"), ms);
            for (Controller c : kControllers) {
                std::vector<double> it, un, fl, st;
                for (const auto* r : groups[g]) {
                    if (r->controller != c) continue;
                    it.push_back(r->metrics.mean_iteration_time_s);
                    un.push_back(r->metrics.unfairness_iters);
                    fl.push_back(r->metrics.mean_fluct_pps);
                    st.push_back(r->metrics.straggler_mean_tput_pps);
                }
                if (it.empty()) continue;
                summary.row({g, num(groups[g].front()->sweep_value), std::string(to_string(c)), num(it.size()),
                             num(median(it)), num(median(un)), num(median(fl)), num(median(st))});
            }
        }
    }
};

void preset_exp1(Context& ctx) {
    std::vector<RunMetrics> metrics;
    for (Controller c : kControllers) {
        const Scenario s = exp1_scenario(c, ctx.opt.seed, ctx.opt.scale);
        ctx.note("exp1 " + std::string(to_string(c)));
        const RunResult r = ctx.run(s);
        metrics.push_back(r.metrics);
        ctx.add("square", 0.0, c, r.metrics);
        write_series(ctx.file("exp1_" + std::string(to_string(c)) + "_timeseries.csv"), r.series);
        ctx.result.tracking.push_back(exp1_tracking(s, r, c));
    }
    write_metrics(ctx.file("exp1_metrics.csv"), metrics);

    const Scenario s = exp1_scenario(Controller::Lia, ctx.opt.seed, ctx.opt.scale);
    CsvWriter cap(ctx.file("exp1_capacity.csv"), {"t_s", "path_id", "capacity_pps"});
    std::vector<sim::PathConfig> cfgs;
    for (const auto& p : s.paths) cfgs.push_back(p.to_config(s.duration_s));
    const auto slots = static_cast<int>(std::llround(s.duration_s / s.agent.slot_s));
    for (int k = 1; k <= slots; ++k) {
        const double t = k * s.agent.slot_s;
        for (std::size_t p = 0; p < cfgs.size(); ++p) {
            cap.row({num(t), num(p), num(cfgs[p].capacity.at(t - 0.5 * s.agent.slot_s) / kPacketBits)});
        }
    }

    CsvWriter tr(ctx.file("exp1_tracking.csv"), {"controller", "mean_abs_error_pps", "step_t_s", "reaction_s"});
    for (const auto& t : ctx.result.tracking) {
        for (std::size_t i = 0; i < t.step_times.size(); ++i) {
            tr.row({std::string(to_string(t.controller)), num(t.mean_abs_error_pps), num(t.step_times[i]),
                    num(t.reaction_s[i])});
        }
    }
}

void preset_sweep(Context& ctx, const std::string& name, del::ParallelismScheme scheme) {
    for (double cap : kCapacitySweep) {
        for (int k = 0; k < ctx.opt.seeds; ++k) {
            const std::uint64_t seed = ctx.opt.seed + static_cast<std::uint64_t>(k);
            for (Controller c : kControllers) {
                ctx.note(name + " " + num(cap) + " Mbps seed " + num(seed) + " " + std::string(to_string(c)));
                const auto r = ctx.run(del_scenario(c, seed, ctx.opt.scale, cap, scheme));
                ctx.add("c" + num(static_cast<int>(cap)), cap, c, r.metrics);
            }
        }
    }
    ctx.write_groups(name, "capacity_mbps");
}

void preset_exp4(Context& ctx) {
    CsvWriter series(ctx.file("exp4_straggler_series.csv"), {"controller", "seed", "worker", "t_s", "rate_pps"});
    for (int k = 0; k < ctx.opt.seeds; ++k) {
        const std::uint64_t seed = ctx.opt.seed + static_cast<std::uint64_t>(k);
        for (Controller c : kControllers) {
            ctx.note("exp4 seed " + num(seed) + " " + std::string(to_string(c)));
            Scenario s = del_scenario(c, seed, ctx.opt.scale, 30.0, del::ParallelismScheme::tap());
            s.timeseries = k == 0;
            const auto r = ctx.run(s);
            ctx.add("c30", 30.0, c, r.metrics);
            const auto& m = r.metrics;
            const auto& rates = m.worker_rates[m.straggler];
            for (std::size_t i = 0; i < rates.size(); ++i) {
                series.row({std::string(to_string(c)), num(seed), num(m.straggler),
                            num(static_cast<double>(i + 1) * s.agent.slot_s), num(rates[i])});
            }
            if (k == 0) write_series(ctx.file("exp4_" + std::string(to_string(c)) + "_timeseries.csv"), r.series);
        }
    }
    ctx.write_groups("exp4", "capacity_mbps");
}

void preset_exp6(Context& ctx) {
    for (int stragglers = 1; stragglers <= 4; ++stragglers) {
        for (int k = 0; k < ctx.opt.seeds; ++k) {
            const std::uint64_t seed = ctx.opt.seed + static_cast<std::uint64_t>(k);
            for (Controller c : kControllers) {
                ctx.note("exp6 stragglers " + num(stragglers) + " seed " + num(seed) + " " + std::string(to_string(c)));
                const auto r =
                    ctx.run(del_scenario(c, seed, ctx.opt.scale, 50.0, del::ParallelismScheme::tap(), stragglers));
                ctx.add("s" + num(stragglers), stragglers, c, r.metrics);
            }
        }
    }
    ctx.write_groups("exp6", "stragglers");
}

void preset_exp8(Context& ctx) {
    CsvWriter counts(ctx.file("exp8_compute.csv"),
                     {"controller", "seed", "sim_seconds", "decisions", "train_steps", "decisions_per_s", "macs_per_s"});
    std::map<Controller, std::pair<double, double>> wall;  // agent seconds, simulated seconds
    for (int k = 0; k < ctx.opt.seeds; ++k) {
        const std::uint64_t seed = ctx.opt.seed + static_cast<std::uint64_t>(k);
        for (Controller c : {Controller::DrlOnly, Controller::Hybrid}) {
            ctx.note("exp8 seed " + num(seed) + " " + std::string(to_string(c)));
            Scenario s = del_scenario(c, seed, ctx.opt.scale, 30.0, del::ParallelismScheme::tap());
            s.timeseries = false;
            const auto r = ctx.run(s);
            ctx.add("c30", 30.0, c, r.metrics);
            const auto& a = c == Controller::Hybrid ? r.metrics.hybrid_agent : r.metrics.drl_agent;
            const double t = r.end_time;
            counts.row({std::string(to_string(c)), num(seed), num(t), num(a.decisions), num(a.train_steps),
                        num(static_cast<double>(a.decisions) / t), num(static_cast<double>(a.macs) / t)});
            wall[c].first += a.compute_seconds;
            wall[c].second += t;
        }
    }
    std::ofstream txt(ctx.file("exp8_wallclock.txt"));
    txt << "# Proxy for agent CPU cost: wall-clock seconds spent in agent inference and training\n"
           "# per simulated second on this machine. Varies between runs and hosts.\n";
    for (const auto& [c, v] : wall) {
        txt << to_string(c) << " " << (v.second > 0 ? v.first / v.second : 0.0) << "\n";
    }
}

}  // namespace

std::vector<std::string> preset_names() { return {"exp1", "exp2", "exp3", "exp4", "exp5", "exp6", "exp8"}; }

Scenario exp1_scenario(Controller c, std::uint64_t seed, double scale) {
    Scenario s;
    s.name = "exp1";
    s.duration_s = 60.0;
    s.seed = seed;
    s.scheme = del::ParallelismScheme::tap();
    PathSpec fixed;
    fixed.capacity_bps = 8e6;
    fixed.delay_s = 0.05;
    fixed.loss = 0.03;
    fixed.queue_pkts = 100;
    PathSpec varying = fixed;
    varying.square_wave = SquareWave{4e6, 12e6, 15.0, true};
    s.paths = {fixed, varying};
    WorkerSpec w;
    w.controller = c;
    w.paths = {0, 1};
    w.model_bytes = model_bytes(scale);
    w.compute_mean_s = 0.0;
    w.compute_jitter = 0.0;
    s.workers = {w};
    return s;
}

Scenario del_scenario(Controller c, std::uint64_t seed, double scale, double capacity_mbps,
                      del::ParallelismScheme scheme, int stragglers) {
    if (stragglers < 0 || stragglers > 6) throw std::invalid_argument("straggler count must lie in 0..6");
    Scenario s;
    s.name = "del";
    s.duration_s = 120.0;
    s.seed = seed;
    s.scheme = scheme;
    s.timeseries = false;
    PathSpec p;
    p.capacity_bps = capacity_mbps * 1e6;
    p.delay_s = 0.05;
    p.loss = 0.001;
    p.queue_pkts = 200;
    s.paths = {p, p};
    for (int u = 0; u < 6; ++u) {
        WorkerSpec w;
        w.controller = c;
        w.paths = {0, 1};
        w.model_bytes = model_bytes(scale);
        w.compute_mean_s = 0.5;
        w.compute_jitter = 0.1;
        if (u >= 6 - stragglers) {
            w.access_delay_s = 0.05;
            w.access_loss = 0.01;
        }
        s.workers.push_back(w);
    }
    for (int k = 0; k < 5; ++k) s.competitors.push_back(CompetitorSpec{0, 0, 0.0});
    return s;
}

TrackingResult exp1_tracking(const Scenario& s, const RunResult& run, Controller c) {
    TrackingResult out;
    out.controller = c;
    const auto cfg = s.paths.at(1).to_config(s.duration_s);
    const double slot = s.agent.slot_s;
    std::vector<double> t, rate, cap;
    for (const auto& row : run.series) {
        if (row.flow_id != 0 || row.subflow_id != 1) continue;
        t.push_back(row.t);
        rate.push_back(row.rate_pps);
        cap.push_back(cfg.capacity.at(row.t - 0.5 * slot) / kPacketBits);
    }
    if (t.empty()) throw std::logic_error("exp1 tracking needs the time series of worker 0");
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) err += std::abs(rate[i] - cap[i]);
    out.mean_abs_error_pps = err / static_cast<double>(t.size());

    const auto smooth = [&] {
        std::vector<double> sm(rate.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < rate.size(); ++i) {
            sum += rate[i];
            if (i >= 5) sum -= rate[i - 5];
            sm[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, 5));
        }
        return sm;
    }();
    const double hp = s.paths[1].square_wave->half_period_s;
    for (double ts = hp; ts < s.duration_s - 1e-9; ts += hp) {
        const double share = cfg.capacity.at(ts + 1e-9) / kPacketBits;
        const bool up = cfg.capacity.at(ts + 1e-9) > cfg.capacity.at(ts - 1e-9);
        double reaction = hp;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] <= ts + 1e-9 || t[i] > ts + hp + 1e-9) continue;
            const bool reached = up ? smooth[i] >= 0.8 * share : smooth[i] <= share / 0.8;
            if (reached) {
                reaction = t[i] - ts;
                break;
            }
        }
        out.step_times.push_back(ts);
        out.reaction_s.push_back(reaction);
    }
    return out;
}

PresetResult run_preset(std::string_view name, const PresetOptions& options) {
    if (options.seeds < 1) throw std::invalid_argument("at least one seed is required");
    Context ctx{options, nullptr, nullptr, {}};
    if (name == "exp1") {
        preset_exp1(ctx);
    } else if (name == "exp2") {
        preset_sweep(ctx, "exp2", del::ParallelismScheme::bsp());
    } else if (name == "exp3") {
        preset_sweep(ctx, "exp3", del::ParallelismScheme::tap());
    } else if (name == "exp4") {
        preset_exp4(ctx);
    } else if (name == "exp5") {
        preset_sweep(ctx, "exp5", del::ParallelismScheme::tap());
    } else if (name == "exp6") {
        preset_exp6(ctx);
    } else if (name == "exp8") {
        preset_exp8(ctx);
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
    }
    return std::move(ctx.result);
}

}  // namespace hmptcp::exp
