#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hmptcp/exp/csv.hpp"
#include "hmptcp/exp/presets.hpp"
#include "hmptcp/exp/runner.hpp"
#include "hmptcp/exp/scenario.hpp"
#include "hmptcp/exp/training.hpp"

using namespace hmptcp;
using namespace hmptcp::exp;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "name": "two-path",
  "duration_s": 10,
  "seed": 4,
  "scheme": "ssp:2",
  "paths": [
    {"capacity_mbps": 10, "delay_ms": 20, "loss": 0.01, "queue_pkts": 100},
    {"capacity_mbps": 20, "delay_ms": 40, "queue_pkts": 50,
     "square_wave": {"low_mbps": 5, "high_mbps": 20, "half_period_s": 2}}
  ],
  "workers": [{"controller": "hybrid", "paths": [0, 1], "count": 2, "model_bytes": 100000}],
  "competitors": [{"path": 0}],
  "agent": {"mode": "null", "slot_ms": 100}
})";

std::string field_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

std::string slurp(const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("hmptcp_unit_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("scenario loader reads every section") {
    const auto l = parse_scenario(kMinimal);
    const Scenario& s = l.scenario;
    CHECK(s.name == "two-path");
    CHECK(s.seed == 4);
    CHECK(s.scheme.kind == del::ParallelismScheme::Kind::Ssp);
    CHECK(s.scheme.staleness == 2);
    REQUIRE(s.paths.size() == 2);
    CHECK(s.paths[0].capacity_bps == 10e6);
    CHECK(s.paths[0].delay_s == doctest::Approx(0.02));
    REQUIRE(s.paths[1].square_wave);
    CHECK(s.paths[1].square_wave->low_bps == 5e6);
    CHECK(s.workers.size() == 2);
    CHECK(s.workers[1].controller == Controller::Hybrid);
    CHECK(s.workers[1].model_bytes == 100000);
    CHECK(s.competitors.size() == 1);
    CHECK(s.agent.mode == agent::AgentMode::Null);
    CHECK(l.warnings.empty());
}

TEST_CASE("scenario errors name the offending field") {
    std::string t = kMinimal;
    CHECK(field_of(R"({"paths": []})") == "duration_s");
    CHECK(field_of(std::string(kMinimal).replace(t.find("\"queue_pkts\": 100"), 17, "\"queue_pkts\": 0")) ==
          "paths[0].queue_pkts");
    CHECK(field_of(std::string(kMinimal).replace(t.find("\"loss\": 0.01"), 12, "\"loss\": 1.5")) == "paths[0].loss");
    CHECK(field_of(std::string(kMinimal).replace(t.find("\"loss\": 0.01"), 12, "\"lost\": 0.01")) == "paths[0].lost");
    CHECK(field_of(std::string(kMinimal).replace(t.find("[0, 1]"), 6, "[0, 7]")) == "workers[0].paths[1]");
    CHECK(field_of(std::string(kMinimal).replace(t.find("\"hybrid\""), 8, "\"bbr\"")) == "workers[0].controller");
    CHECK(field_of(std::string(kMinimal).replace(t.find("\"slot_ms\": 100"), 14, "\"slot_ms\": \"x\"")) ==
          "agent.slot_ms");
    CHECK(field_of("{not json") == "<document>");
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), std::runtime_error);
}

TEST_CASE("shipped example scenario loads and runs") {
    const auto l = load_scenario(fs::path(HMPTCP_SOURCE_DIR) / "tools/scenarios/two_path.json");
    CHECK(l.warnings.empty());
    Scenario s = l.scenario;
    CHECK(s.workers.size() == 6);
    s.duration_s = 5.0;
    const auto r = run_scenario(s);
    CHECK(r.metrics.iterations.size() == 6);
    CHECK(!r.series.empty());
}

TEST_CASE("out-of-range values are accepted with a warning") {
    std::string t = kMinimal;
    t.replace(t.find("\"capacity_mbps\": 10"), 19, "\"capacity_mbps\": 1000");
    t.replace(t.find("\"duration_s\": 10"), 16, "\"duration_s\": 600");
    const auto l = parse_scenario(t);
    REQUIRE(l.warnings.size() == 2);
    CHECK(l.warnings[0].starts_with("paths[0].capacity_mbps"));
    CHECK(l.warnings[1].starts_with("duration_s"));
}

TEST_CASE("csv numbers use the shortest round-trip form") {
    CHECK(num(0.1) == "0.1");
    CHECK(num(1.0) == "1");
    CHECK(num(1e-300) == "1e-300");
    CHECK(num(std::size_t{42}) == "42");
    const double x = 0.1 + 0.2;
    CHECK(std::stod(num(x)) == x);
    const auto d = scratch("csv");
    CsvWriter w(d / "a.csv", {"x", "y"});
    w.row({"1", "2"});
    CHECK_THROWS_AS(w.row({"1"}), std::logic_error);
}

TEST_CASE("null agent leaves the lia packet log unchanged") {
    Scenario lia = exp1_scenario(Controller::Lia, 3, 0.01);
    Scenario hyb = exp1_scenario(Controller::Hybrid, 3, 0.01);
    lia.duration_s = hyb.duration_s = 10.0;
    hyb.agent.mode = agent::AgentMode::Null;
    sim::PacketLog a, b;
    RunOptions oa, ob;
    oa.log = &a;
    ob.log = &b;
    run_scenario(lia, oa);
    run_scenario(hyb, ob);
    CHECK(a.lines() > 100);
    CHECK(a.lines() == b.lines());
    CHECK(a.hash() == b.hash());

    // An acting agent does change the log.
    hyb.agent.mode = agent::AgentMode::Infer;
    hyb.agent.trigger = false;
    sim::PacketLog c;
    RunOptions oc;
    oc.log = &c;
    run_scenario(hyb, oc);
    CHECK(c.hash() != a.hash());
}

TEST_CASE("del run reports one iteration count and rate series per worker") {
    Scenario s = del_scenario(Controller::Lia, 2, 0.001, 40.0, del::ParallelismScheme::tap(), 1);
    s.duration_s = 20.0;
    const auto r = run_scenario(s);
    CHECK(r.metrics.iterations.size() == 6);
    CHECK(r.metrics.worker_rates.size() == 6);
    CHECK(r.metrics.worker_rates[0].size() == 200);
    CHECK(r.end_time == doctest::Approx(20.0));
    for (int it : r.metrics.iterations) CHECK(it >= 1);
    CHECK(r.metrics.mean_iteration_time_s > 0.5);
}

TEST_CASE("preset output is a pure function of the seed") {
    const auto a = scratch("preset_a"), b = scratch("preset_b");
    for (const auto& dir : {a, b}) {
        PresetOptions o;
        o.seed = 5;
        o.out = dir;
        run_preset("exp1", o);
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    }
    CHECK(files == 6);
    CHECK(slurp(a / "exp1_metrics.csv").starts_with("scheme,controller,seed"));
    CHECK_THROWS_AS(run_preset("exp7", PresetOptions{}), std::invalid_argument);
}

TEST_CASE("training is deterministic for a fixed seed") {
    TrainOptions o;
    o.sessions = 1;
    o.samples_per_session = 120;
    o.episode_s = 4.0;
    o.moving_average = 2;
    const auto a = train_agent(o);
    const auto b = train_agent(o);
    REQUIRE(!a.learning_score.empty());
    CHECK(a.learning_score == b.learning_score);
    CHECK(a.sessions[0].samples >= 120);
    CHECK(a.final_score == a.moving_average.back());
    CHECK(a.networks.size() == 1);
}

TEST_CASE("trailing mean examples") {
    CHECK(trailing_mean({1, 2, 3, 4}, 2) == std::vector<double>{1, 1.5, 2.5, 3.5});
    CHECK(trailing_mean({}, 3).empty());
}

TEST_CASE("training scenarios stay inside the emulation ranges") {
    for (std::size_t e = 0; e < 50; ++e) {
        const Scenario s = training_scenario(9, e, 30.0, Controller::Hybrid);
        CHECK(validate(s).empty());
    }
    const Scenario x = training_scenario(9, 3, 30.0, Controller::Hybrid);
    const Scenario y = training_scenario(9, 3, 30.0, Controller::DrlOnly);
    CHECK(x.paths.size() == y.paths.size());
    for (std::size_t p = 0; p < x.paths.size(); ++p) CHECK(x.paths[p].capacity_bps == y.paths[p].capacity_bps);
}
