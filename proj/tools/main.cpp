#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "hmptcp/exp/csv.hpp"
#include "hmptcp/exp/presets.hpp"
#include "hmptcp/exp/runner.hpp"
#include "hmptcp/exp/scenario.hpp"
#include "hmptcp/exp/training.hpp"
#include "hmptcp/nn/kernels.hpp"

namespace fs = std::filesystem;
using namespace hmptcp;

namespace {

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_validate(const fs::path& file) {
    const auto loaded = exp::load_scenario(file);
    print_warnings(loaded.warnings);
    const auto& s = loaded.scenario;
    std::cout << file.string() << ": ok (" << s.paths.size() << " paths, " << s.workers.size() << " workers, "
              << s.competitors.size() << " competitors, " << s.duration_s << " s)\n";
    return 0;
}

int cmd_run(const fs::path& file, const fs::path& out) {
    const auto loaded = exp::load_scenario(file);
    print_warnings(loaded.warnings);
    const auto& s = loaded.scenario;
    exp::RunOptions ro;
    std::shared_ptr<agent::AcrNetworks> hybrid, drl;
    for (const auto& w : s.workers) {
        if (w.controller == exp::Controller::Hybrid && !hybrid) hybrid = exp::make_networks(s, w.controller);
        if (w.controller == exp::Controller::DrlOnly && !drl) drl = exp::make_networks(s, w.controller);
    }
    ro.hybrid_networks = hybrid;
    ro.drl_networks = drl;
    std::size_t steps = 0;
    double reward = 0.0, loss = 0.0;
    std::size_t trained = 0;
    ro.on_tick = [&](const agent::TickResult& t) {
        if (t.stored) {
            ++steps;
            reward += t.reward;
        }
        if (t.train) {
            loss += t.train->critic_loss;
            ++trained;
        }
        return true;
    };
    const auto r = exp::run_scenario(s, ro);
    std::vector<fs::path> files{out / (s.name + "_metrics.csv")};
    exp::write_metrics(files.back(), {r.metrics});
    if (s.timeseries) {
        files.push_back(out / (s.name + "_timeseries.csv"));
        exp::write_series(files.back(), r.series);
    }
    if (s.agent.mode == agent::AgentMode::Train && (hybrid || drl)) {
        files.push_back(out / (s.name + "_training.csv"));
        exp::CsvWriter w(files.back(), exp::kTrainingHeader);
        w.row({"0", exp::num(steps), exp::num(steps ? reward / steps : 0.0), exp::num(trained ? loss / trained : 0.0)});
        if (hybrid) hybrid->save(files.emplace_back(out / (s.name + "_hybrid.ckpt")));
        if (drl) drl->save(files.emplace_back(out / (s.name + "_drl.ckpt")));
    }
    const auto& m = r.metrics;
    std::cout << "controller " << m.controller << ", scheme " << m.scheme << ": mean iteration "
              << m.mean_iteration_time_s << " s, unfairness " << m.unfairness_iters << ", fluctuation "
              << m.mean_fluct_pps << " pkt/s\n";
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    return 0;
}

int cmd_preset(const std::string& name, exp::PresetOptions opt, bool quiet) {
    if (!quiet) opt.progress = [](const std::string& m) { std::cerr << m << "\n"; };
    if (opt.checkpoint_dir && !fs::exists(*opt.checkpoint_dir / "hybrid.ckpt")) {
        std::cerr << "warning: " << (*opt.checkpoint_dir / "hybrid.ckpt").string()
                  << " not found; hybrid agents use untrained networks\n";
    }
    if (!opt.checkpoint_dir) std::cerr << "warning: no --checkpoint-dir; agents use untrained networks\n";
    const auto r = exp::run_preset(name, opt);
    for (const auto& f : r.files) std::cout << "wrote " << f.string() << "\n";
    return 0;
}

int cmd_train(exp::TrainOptions base, const std::string& which, const fs::path& out, bool quiet) {
    if (!quiet) base.progress = [](const std::string& m) { std::cerr << m << "\n"; };
    std::vector<exp::Controller> controllers;
    if (which == "both" || which == "hybrid") controllers.push_back(exp::Controller::Hybrid);
    if (which == "both" || which == "drl") controllers.push_back(exp::Controller::DrlOnly);
    std::vector<std::pair<exp::Controller, double>> scores;
    for (auto c : controllers) {
        auto opt = base;
        opt.controller = c;
        const auto r = exp::train_agent(opt);
        for (const auto& f : exp::write_training_outputs(r, out)) std::cout << "wrote " << f.string() << "\n";
        scores.emplace_back(c, r.final_score);
        std::cout << exp::to_string(c) << " final learning score " << r.final_score << "\n";
    }
    if (scores.size() == 2) {
        std::cout << "hybrid / drl learning score ratio " << scores[0].second / scores[1].second << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Packet-level multipath TCP simulator for distributed edge learning"};
    app.require_subcommand(1);
    std::string simd;
    app.add_option("--simd", simd, "Kernel variant: scalar, avx2 or auto")->check(CLI::IsMember({"scalar", "avx2", "auto"}));

    fs::path scenario_file, out = "out";
    auto* run = app.add_subcommand("run", "Run a scenario file");
    run->add_option("scenario", scenario_file, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory");

    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", scenario_file, "Scenario JSON file")->required()->check(CLI::ExistingFile);

    exp::PresetOptions popt;
    std::string preset_name;
    std::string checkpoint_dir;
    bool quiet = false;
    auto* preset = app.add_subcommand("preset", "Run an experiment preset");
    preset->add_option("name", preset_name, "Preset name")->required()->check(CLI::IsMember(exp::preset_names()));
    preset->add_option("--seed", popt.seed, "First seed");
    preset->add_option("--seeds", popt.seeds, "Seeds for multi-seed presets")->check(CLI::PositiveNumber);
    preset->add_option("--scale", popt.scale, "Fraction of full transfer sizes")->check(CLI::PositiveNumber);
    preset->add_option("--out", popt.out, "Output directory");
    preset->add_option("--checkpoint-dir", checkpoint_dir, "Directory with hybrid.ckpt and drl.ckpt");
    preset->add_flag("--quiet", quiet, "No progress output");

    exp::TrainOptions topt;
    std::string which = "both";
    fs::path train_out = "out";
    auto* train = app.add_subcommand("train", "Train hybrid and DRL-only agents on random scenarios");
    train->add_option("--sessions", topt.sessions, "Independent training sessions")->check(CLI::PositiveNumber);
    train->add_option("--samples", topt.samples_per_session, "Stored samples per session")->check(CLI::PositiveNumber);
    train->add_option("--episode-s", topt.episode_s, "Simulated seconds per episode")->check(CLI::PositiveNumber);
    train->add_option("--seed", topt.seed, "Scenario stream seed");
    train->add_option("--controller", which, "hybrid, drl or both")->check(CLI::IsMember({"hybrid", "drl", "both"}));
    train->add_option("--out", train_out, "Output directory");
    train->add_flag("--quiet", quiet, "No progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!simd.empty()) nn::select_kernels(simd);
        if (*run) return cmd_run(scenario_file, out);
        if (*validate) return cmd_validate(scenario_file);
        if (*preset) {
            if (!checkpoint_dir.empty()) popt.checkpoint_dir = checkpoint_dir;
            return cmd_preset(preset_name, popt, quiet);
        }
        if (*train) return cmd_train(topt, which, train_out, quiet);
    } catch (const exp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
