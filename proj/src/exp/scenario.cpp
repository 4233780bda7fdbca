#include "hmptcp/exp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace hmptcp::exp {

using json = nlohmann::json;

std::string_view to_string(Controller c) {
    switch (c) {
        case Controller::Lia: return "lia";
        case Controller::Hybrid: return "hybrid";
        case Controller::DrlOnly: return "drl";
        case Controller::Cubic: return "cubic";
    }
    return "?";
}

Controller parse_controller(std::string_view name) {
    if (name == "lia") return Controller::Lia;
    if (name == "hybrid") return Controller::Hybrid;
    if (name == "drl") return Controller::DrlOnly;
    if (name == "cubic") return Controller::Cubic;
    throw std::invalid_argument("unknown controller '" + std::string(name) + "' (expected lia, hybrid, drl or cubic)");
}

bool uses_agent(Controller c) { return c == Controller::Hybrid || c == Controller::DrlOnly; }

sim::PathConfig PathSpec::to_config(double until) const {
    sim::PathConfig cfg;
    if (trace_file) {
        cfg.capacity = sim::load_capacity_trace(*trace_file);
    } else if (square_wave) {
        const auto& w = *square_wave;
        cfg.capacity = w.start_high ? sim::CapacityTrace::square_wave(w.high_bps, w.low_bps, w.half_period_s, until)
                                    : sim::CapacityTrace::square_wave(w.low_bps, w.high_bps, w.half_period_s, until);
    } else {
        cfg.capacity = sim::CapacityTrace(capacity_bps);
    }
    cfg.prop_delay = delay_s;
    cfg.loss_prob = loss;
    cfg.queue_limit = queue_pkts;
    return cfg;
}

namespace {

/// A JSON object being read, with its field path for error messages. Keys
/// that are never read are reported as unknown.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(field(key), "required field missing");
        }
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
        return x;
    }

    std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(field(key), "required field missing");
        }
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        return v.get<std::int64_t>();
    }

    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(field(key), "required field missing");
        }
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
        return v.get<bool>();
    }

    const json& array(const std::string& key, bool required) {
        static const json empty = json::array();
        if (!has(key)) {
            if (required) throw ConfigError(field(key), "required field missing");
            return empty;
        }
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(field(key), "expected an array");
        return v;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) throw ConfigError(field(it.key()), "unknown field");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string indexed(const std::string& field, std::size_t i) { return field + "[" + std::to_string(i) + "]"; }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

PathSpec read_path(Reader& r, const std::filesystem::path& base) {
    PathSpec p;
    p.capacity_bps = r.number("capacity_mbps", 8.0) * 1e6;
    p.delay_s = r.number("delay_ms", 50.0) / 1e3;
    p.loss = r.number("loss", 0.0);
    p.queue_pkts = static_cast<int>(r.integer("queue_pkts", 100));
    if (r.has("square_wave")) {
        Reader w(r.raw("square_wave"), r.field("square_wave"));
        SquareWave sq;
        sq.low_bps = w.number("low_mbps") * 1e6;
        sq.high_bps = w.number("high_mbps") * 1e6;
        sq.half_period_s = w.number("half_period_s");
        sq.start_high = w.boolean("start_high", true);
        w.finish();
        if (!(sq.low_bps > 0.0) || !(sq.high_bps > 0.0)) throw ConfigError(r.field("square_wave"), "capacities must be positive");
        if (!(sq.half_period_s > 0.0)) throw ConfigError(w.field("half_period_s"), "must be positive");
        p.square_wave = sq;
    }
    if (r.has("trace_file")) {
        if (p.square_wave) throw ConfigError(r.field("trace_file"), "cannot be combined with square_wave");
        p.trace_file = resolve(base, r.text("trace_file"));
    }
    r.finish();
    return p;
}

}  // namespace

std::vector<std::string> validate(const Scenario& s) {
    std::vector<std::string> warn;
    if (!(s.duration_s > 0.0)) throw ConfigError("duration_s", "must be positive");
    if (s.paths.empty()) throw ConfigError("paths", "at least one path is required");
    if (s.workers.empty() && s.competitors.empty()) throw ConfigError("workers", "no workers or competitors defined");
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
        const auto& p = s.paths[i];
        const std::string f = indexed("paths", i);
        if (!(p.capacity_bps > 0.0)) throw ConfigError(f + ".capacity_mbps", "must be positive");
        if (!(p.delay_s >= 0.0)) throw ConfigError(f + ".delay_ms", "must be non-negative");
        if (!(p.loss >= 0.0 && p.loss < 1.0)) throw ConfigError(f + ".loss", "must lie in [0, 1)");
        if (p.queue_pkts < 1) throw ConfigError(f + ".queue_pkts", "must be at least 1");
        if (!p.trace_file && !p.square_wave && (p.capacity_bps < 4e6 || p.capacity_bps > 128e6)) {
            warn.push_back(f + ".capacity_mbps: outside the usual 4-128 Mbps range");
        }
        const double rtt = 2.0 * p.delay_s;
        if (rtt < 0.003 || rtt > 0.3) warn.push_back(f + ".delay_ms: round trip outside the usual 3-300 ms range");
        if (p.queue_pkts < 20 || p.queue_pkts > 500) warn.push_back(f + ".queue_pkts: outside the usual 20-500 range");
        if (p.trace_file && !std::filesystem::exists(*p.trace_file)) {
            throw ConfigError(f + ".trace_file", "file not found: " + p.trace_file->string());
        }
    }
    for (std::size_t i = 0; i < s.workers.size(); ++i) {
        const auto& w = s.workers[i];
        const std::string f = indexed("workers", i);
        if (w.paths.empty()) throw ConfigError(f + ".paths", "a worker needs at least one path");
        std::set<int> seen;
        for (std::size_t k = 0; k < w.paths.size(); ++k) {
            const int id = w.paths[k];
            if (id < 0 || static_cast<std::size_t>(id) >= s.paths.size()) {
                throw ConfigError(indexed(f + ".paths", k),
                                  "references path " + std::to_string(id) + " but " + std::to_string(s.paths.size()) +
                                      " paths are defined");
            }
            if (!seen.insert(id).second) throw ConfigError(indexed(f + ".paths", k), "duplicate path");
        }
        if (w.controller == Controller::Cubic && w.paths.size() != 1) {
            throw ConfigError(f + ".paths", "a cubic worker uses exactly one path");
        }
        if (uses_agent(w.controller) && w.paths.size() > 2) {
            throw ConfigError(f + ".paths", "agent-controlled workers support at most two subflows");
        }
        if (w.model_bytes <= 0) throw ConfigError(f + ".model_bytes", "must be positive");
        if (!(w.compute_mean_s >= 0.0)) throw ConfigError(f + ".compute_s", "must be non-negative");
        if (!(w.compute_jitter >= 0.0 && w.compute_jitter <= 1.0)) throw ConfigError(f + ".jitter", "must lie in [0, 1]");
        if (!(w.access_delay_s >= 0.0)) throw ConfigError(f + ".access_delay_ms", "must be non-negative");
        if (!(w.access_loss >= 0.0 && w.access_loss < 1.0)) throw ConfigError(f + ".access_loss", "must lie in [0, 1)");
    }
    for (std::size_t i = 0; i < s.competitors.size(); ++i) {
        const auto& c = s.competitors[i];
        const std::string f = indexed("competitors", i);
        if (c.path < 0 || static_cast<std::size_t>(c.path) >= s.paths.size()) {
            throw ConfigError(f + ".path", "references path " + std::to_string(c.path) + " but " +
                                               std::to_string(s.paths.size()) + " paths are defined");
        }
        if (c.bytes < 0) throw ConfigError(f + ".bytes", "must be non-negative");
        if (!(c.gap_s >= 0.0)) throw ConfigError(f + ".gap_s", "must be non-negative");
    }
    const auto& a = s.agent;
    if (!(a.slot_s > 0.0)) throw ConfigError("agent.slot_ms", "must be positive");
    if (!(a.kappa > 0.0)) throw ConfigError("agent.kappa", "must be positive");
    if (a.batch < 1) throw ConfigError("agent.batch", "must be at least 1");
    if (!(a.rate_trigger >= 0.0)) throw ConfigError("agent.rate_trigger", "must be non-negative");
    if (!(a.schedule_trigger >= 0.0)) throw ConfigError("agent.schedule_trigger", "must be non-negative");
    for (const auto& [field, file] : {std::pair{"agent.hybrid_checkpoint", a.hybrid_checkpoint},
                                      std::pair{"agent.drl_checkpoint", a.drl_checkpoint}}) {
        if (file && !std::filesystem::exists(*file)) throw ConfigError(field, "file not found: " + file->string());
    }
    if (s.duration_s > 120.0) warn.push_back("duration_s: longer than 120 s; expect long run times");
    return warn;
}

LoadedScenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
    }
    Reader r(doc, "");
    Scenario s;
    s.name = r.text("name", "scenario");
    s.duration_s = r.number("duration_s");
    const auto seed = r.integer("seed", 1);
    if (seed < 0) throw ConfigError("seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
    try {
        s.scheme = del::parse_scheme(r.text("scheme", "bsp"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("scheme", e.what());
    }
    s.timeseries = r.boolean("timeseries", true);

    const json& paths = r.array("paths", true);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        Reader pr(paths[i], indexed("paths", i));
        s.paths.push_back(read_path(pr, base_dir));
    }

    const json& workers = r.array("workers", false);
    for (std::size_t i = 0; i < workers.size(); ++i) {
        Reader wr(workers[i], indexed("workers", i));
        WorkerSpec w;
        try {
            w.controller = parse_controller(wr.text("controller", "lia"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(wr.field("controller"), e.what());
        }
        const json& ps = wr.array("paths", true);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            if (!ps[k].is_number_integer()) throw ConfigError(indexed(wr.field("paths"), k), "expected a path index");
            w.paths.push_back(ps[k].get<int>());
        }
        w.model_bytes = wr.integer("model_bytes", w.model_bytes);
        w.compute_mean_s = wr.number("compute_s", w.compute_mean_s);
        w.compute_jitter = wr.number("jitter", w.compute_jitter);
        w.access_delay_s = wr.number("access_delay_ms", 0.0) / 1e3;
        w.access_loss = wr.number("access_loss", 0.0);
        const auto count = wr.integer("count", 1);
        if (count < 1) throw ConfigError(wr.field("count"), "must be at least 1");
        wr.finish();
        for (std::int64_t k = 0; k < count; ++k) s.workers.push_back(w);
    }

    const json& comps = r.array("competitors", false);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        Reader cr(comps[i], indexed("competitors", i));
        CompetitorSpec c;
        c.path = static_cast<int>(cr.integer("path"));
        c.bytes = cr.integer("bytes", 0);
        c.gap_s = cr.number("gap_s", 0.0);
        const auto count = cr.integer("count", 1);
        if (count < 0) throw ConfigError(cr.field("count"), "must be non-negative");
        cr.finish();
        for (std::int64_t k = 0; k < count; ++k) s.competitors.push_back(c);
    }

    if (r.has("agent")) {
        Reader ar(r.raw("agent"), "agent");
        auto& a = s.agent;
        try {
            a.mode = agent::parse_agent_mode(ar.text("mode", "infer"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("agent.mode", e.what());
        }
        if (ar.has("hybrid_checkpoint")) a.hybrid_checkpoint = resolve(base_dir, ar.text("hybrid_checkpoint"));
        if (ar.has("drl_checkpoint")) a.drl_checkpoint = resolve(base_dir, ar.text("drl_checkpoint"));
        a.slot_s = ar.number("slot_ms", 100.0) / 1e3;
        a.kappa = ar.number("kappa", a.kappa);
        const auto batch = ar.integer("batch", 32);
        if (batch < 1) throw ConfigError("agent.batch", "must be at least 1");
        a.batch = static_cast<std::size_t>(batch);
        a.trigger = ar.boolean("trigger", a.trigger);
        a.rate_trigger = ar.number("rate_trigger", a.rate_trigger);
        a.schedule_trigger = ar.number("schedule_trigger", a.schedule_trigger);
        ar.finish();
    }
    r.finish();

    LoadedScenario out{std::move(s), {}};
    out.warnings = validate(out.scenario);
    return out;
}

LoadedScenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("<file>", "cannot open " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), file.parent_path());
}

}  // namespace hmptcp::exp
