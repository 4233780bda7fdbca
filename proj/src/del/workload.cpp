#include "hmptcp/del/workload.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "hmptcp/del/metrics.hpp"

namespace hmptcp::del {

std::string to_string(const ParallelismScheme& scheme) {
    switch (scheme.kind) {
        case ParallelismScheme::Kind::Bsp: return "bsp";
        case ParallelismScheme::Kind::Ssp: return "ssp:" + std::to_string(scheme.staleness);
        case ParallelismScheme::Kind::Tap: return "tap";
    }
    return "?";
}

ParallelismScheme parse_scheme(std::string_view text) {
    if (text == "bsp") return ParallelismScheme::bsp();
    if (text == "tap") return ParallelismScheme::tap();
    if (text.starts_with("ssp:")) {
        const std::string num(text.substr(4));
        std::size_t used = 0;
        int s = 0;
        try {
            s = std::stoi(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == num.size() && !num.empty() && s >= 1) return ParallelismScheme::ssp(s);
    }
    throw std::invalid_argument("unknown parallelism scheme '" + std::string(text) + "' (expected bsp, tap or ssp:<s>=1..)");
}

std::vector<std::size_t> barrier_check(const ParallelismScheme& scheme, std::span<const int> iterations,
                                       const std::vector<bool>& waiting) {
    if (iterations.size() != waiting.size()) throw std::invalid_argument("one waiting flag per worker expected");
    std::vector<std::size_t> out;
    switch (scheme.kind) {
        case ParallelismScheme::Kind::Bsp:
            if (std::all_of(waiting.begin(), waiting.end(), [](bool w) { return w; })) {
                for (std::size_t u = 0; u < waiting.size(); ++u) out.push_back(u);
            }
            break;
        case ParallelismScheme::Kind::Ssp: {
            const int lo = iterations.empty() ? 0 : *std::min_element(iterations.begin(), iterations.end());
            for (std::size_t u = 0; u < waiting.size(); ++u) {
                if (waiting[u] && iterations[u] - lo <= scheme.staleness - 1) out.push_back(u);
            }
            break;
        }
        case ParallelismScheme::Kind::Tap:
            for (std::size_t u = 0; u < waiting.size(); ++u) {
                if (waiting[u]) out.push_back(u);
            }
            break;
    }
    return out;
}

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::Downloading: return "downloading";
        case Phase::Computing: return "computing";
        case Phase::Uploading: return "uploading";
        case Phase::Waiting: return "waiting";
    }
    return "?";
}

DelWorkload::DelWorkload(sim::Simulator& sim, ParallelismScheme scheme, std::uint64_t seed)
    : sim_(sim), scheme_(scheme), seed_(seed) {
    if (scheme.kind == ParallelismScheme::Kind::Ssp && scheme.staleness < 1) {
        throw std::invalid_argument("ssp staleness must be at least 1");
    }
}

int DelWorkload::add_worker(transport::MptcpConnection& conn, WorkerConfig config) {
    if (config.model_bytes <= 0) throw std::invalid_argument("model size must be positive");
    if (!(config.compute_mean >= 0.0)) throw std::invalid_argument("compute mean must be non-negative");
    if (!(config.compute_jitter >= 0.0 && config.compute_jitter <= 1.0)) {
        throw std::invalid_argument("compute jitter must lie in [0, 1]");
    }
    const int id = static_cast<int>(workers_.size());
    Worker w;
    w.id = id;
    w.conn = &conn;
    w.config = config;
    w.rng = sim::RandomStream(seed_, "worker/" + std::to_string(id));
    workers_.push_back(std::move(w));
    return id;
}

void DelWorkload::start() {
    for (std::size_t u = 0; u < workers_.size(); ++u) begin_iteration(u);
    notify();
}

std::vector<int> DelWorkload::iterations() const {
    std::vector<int> out;
    out.reserve(workers_.size());
    for (const auto& w : workers_) out.push_back(w.iterations);
    return out;
}

void DelWorkload::begin_iteration(std::size_t u) {
    Worker& w = workers_[u];
    w.phase = Phase::Downloading;
    w.iteration_start = sim_.now();
    w.phase_start = sim_.now();
    w.active_time = 0.0;
    w.conn->start_transfer(w.config.model_bytes, [this, u](double now) { on_download_done(u, now); });
}

void DelWorkload::on_download_done(std::size_t u, double now) {
    Worker& w = workers_[u];
    w.flows.push_back(FlowRecord{w.phase_start, now, w.config.model_bytes, false});
    w.active_time += now - w.phase_start;
    w.phase = Phase::Computing;
    w.phase_start = now;
    const double j = w.config.compute_jitter;
    const double t = w.config.compute_mean * (1.0 + (j > 0.0 ? w.rng.uniform(-j, j) : 0.0));
    sim_.schedule(now + t, [this, u] { on_compute_done(u); });
    notify();
}

void DelWorkload::on_compute_done(std::size_t u) {
    Worker& w = workers_[u];
    const double now = sim_.now();
    w.active_time += now - w.phase_start;
    w.phase = Phase::Uploading;
    w.phase_start = now;
    w.conn->start_transfer(w.config.model_bytes, [this, u](double t) { on_upload_done(u, t); });
    notify();
}

void DelWorkload::on_upload_done(std::size_t u, double now) {
    Worker& w = workers_[u];
    w.flows.push_back(FlowRecord{w.phase_start, now, w.config.model_bytes, true});
    w.active_time += now - w.phase_start;
    ++w.iterations;
    w.phase = Phase::Waiting;

    std::vector<bool> waiting;
    for (const auto& x : workers_) waiting.push_back(x.phase == Phase::Waiting);
    const auto released = barrier_check(scheme_, iterations(), waiting);
    notify();
    for (auto r : released) {
        Worker& x = workers_[r];
        x.completed.push_back(IterationRecord{x.iteration_start, now, x.active_time});
        begin_iteration(r);
    }
    if (!released.empty()) notify();
}

void DelWorkload::notify() {
    if (observer_) observer_(*this);
}

void DelWorkload::sample_unfairness() {
    if (workers_.size() >= 2) unfairness_samples_.push_back(unfairness(iterations()));
}

double DelWorkload::mean_unfairness() const {
    if (workers_.size() < 2) return 0.0;
    if (unfairness_samples_.empty()) return unfairness(iterations());
    double sum = 0.0;
    for (double s : unfairness_samples_) sum += s;
    return sum / static_cast<double>(unfairness_samples_.size());
}

double DelWorkload::mean_iteration_time(double now) const {
    if (workers_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& w : workers_) {
        if (w.completed.empty()) {
            sum += now - w.iteration_start;
            continue;
        }
        double s = 0.0;
        for (const auto& it : w.completed) s += it.released - it.start;
        sum += s / static_cast<double>(w.completed.size());
    }
    return sum / static_cast<double>(workers_.size());
}

double DelWorkload::mean_active_time(double now) const {
    if (workers_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& w : workers_) {
        if (w.completed.empty()) {
            sum += w.active_time + (w.phase == Phase::Waiting ? 0.0 : now - w.phase_start);
            continue;
        }
        double s = 0.0;
        for (const auto& it : w.completed) s += it.active;
        sum += s / static_cast<double>(w.completed.size());
    }
    return sum / static_cast<double>(workers_.size());
}

std::size_t DelWorkload::straggler(double now) const {
    if (workers_.empty()) throw std::logic_error("no workers");
    std::size_t best = 0;
    for (std::size_t u = 1; u < workers_.size(); ++u) {
        const auto& a = workers_[u];
        const auto& b = workers_[best];
        if (a.iterations < b.iterations ||
            (a.iterations == b.iterations && now - a.iteration_start > now - b.iteration_start)) {
            best = u;
        }
    }
    return best;
}

}  // namespace hmptcp::del
