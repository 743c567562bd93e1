#include "spd/detector_sim.hpp"

#include "spd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

namespace spd {

double DetectorModel::trap_occupancy() const {
    double s = 0.0;
    for (const Trap& t : traps)
        s += t.amplitude_cps * t.tau_s;
    return s;
}

void DetectorModel::validate() const {
    if (!(thermal_dcr_cps >= 0.0) || !(dead_time_s >= 0.0) || !(jitter_sigma_s >= 0.0))
        throw input_error("detector model fields must be nonnegative");
    if (efficiency < 0.0 || efficiency > 1.0)
        throw input_error("efficiency must lie in [0, 1]");
    if (traps.size() > 4)
        throw input_error("at most four trap components are supported");
    for (const Trap& t : traps)
        if (!(t.amplitude_cps >= 0.0) || !(t.tau_s > 0.0))
            throw input_error("trap components require amplitude >= 0 and tau > 0");
    if (cascade && !(trap_occupancy() < 1.0))
        throw input_error("supercritical cascade: sum of A_i*tau_i must be < 1");
}

namespace {

struct Candidate {
    double t;
    bool spawns; // thermal and photon events always refill traps

    bool operator>(const Candidate& o) const {
        if (t != o.t)
            return t > o.t;
        return spawns < o.spawns; // deterministic tie order
    }
};

// Event-driven generator: thermal arrivals are drawn lazily in time order,
// afterpulse candidates live in a min-heap, and a non-paralyzable dead-time
// gate decides registration. Discarded candidates neither extend the dead
// time nor fill traps.
class Generator {
  public:
    Generator(const DetectorModel& model, double duration, std::mt19937_64& rng)
        : model_(model), duration_(duration), rng_(rng) {}

    void add_photons(std::vector<double> times) {
        photons_ = std::move(times);
        std::sort(photons_.begin(), photons_.end());
    }

    std::vector<double> run() {
        std::vector<double> registered;
        double next_thermal = duration_ + 1.0;
        if (model_.thermal_dcr_cps > 0.0)
            next_thermal = expo_(rng_) / model_.thermal_dcr_cps;
        std::size_t photon_idx = 0;
        double last = -std::numeric_limits<double>::infinity();

        for (;;) {
            // Pick the earliest pending candidate; thermal wins ties, then
            // photons, then afterpulses, to keep the draw order fixed.
            double tt = next_thermal;
            double tp = photon_idx < photons_.size() ? photons_[photon_idx]
                                                     : duration_ + 1.0;
            double ta = pending_.empty() ? duration_ + 1.0 : pending_.top().t;
            double t;
            int kind;
            if (tt <= tp && tt <= ta) {
                t = tt;
                kind = 0;
            } else if (tp <= ta) {
                t = tp;
                kind = 1;
            } else {
                t = ta;
                kind = 2;
            }
            if (t > duration_)
                break;

            bool spawns = true;
            if (kind == 0) {
                next_thermal = t + expo_(rng_) / model_.thermal_dcr_cps;
            } else if (kind == 1) {
                ++photon_idx;
            } else {
                spawns = pending_.top().spawns;
                pending_.pop();
            }

            if (t - last < model_.dead_time_s)
                continue;
            last = t;
            registered.push_back(t);
            if (spawns)
                fill_traps(t);
        }
        return registered;
    }

  private:
    void fill_traps(double t) {
        for (const Trap& trap : model_.traps) {
            double mean = trap.amplitude_cps * trap.tau_s;
            if (mean <= 0.0)
                continue;
            std::poisson_distribution<int> npois(mean);
            int n = npois(rng_);
            for (int i = 0; i < n; ++i) {
                double release = t + expo_(rng_) * trap.tau_s;
                if (release <= duration_)
                    pending_.push({release, model_.cascade});
            }
        }
    }

    const DetectorModel& model_;
    double duration_;
    std::mt19937_64& rng_;
    std::exponential_distribution<double> expo_{1.0};
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<Candidate>> pending_;
    std::vector<double> photons_;
};

TagStream quantize(const std::vector<double>& times, double tick_seconds) {
    TagStream s;
    s.tick_seconds = tick_seconds;
    s.ticks.reserve(times.size());
    for (double t : times)
        s.ticks.push_back(static_cast<std::uint64_t>(std::llround(std::max(t, 0.0) / tick_seconds)));
    s.sessions.push_back({0, s.ticks.size()});
    return s;
}

} // namespace

TagStream simulate_dark(const DetectorModel& model, double duration_s,
                        std::uint64_t seed, double tick_seconds) {
    model.validate();
    if (!(duration_s > 0.0))
        throw input_error("simulate_dark: duration must be positive");
    std::mt19937_64 rng(seed);
    Generator gen(model, duration_s, rng);
    TagStream s = quantize(gen.run(), tick_seconds);
    s.meta["seed"] = std::to_string(seed);
    return s;
}

TagStream simulate_illuminated(const DetectorModel& model, const PulseTrain& pulses,
                               std::uint64_t seed, double tick_seconds) {
    model.validate();
    if (!(pulses.rate_hz > 0.0) || !(pulses.duration_s > 0.0))
        throw input_error("simulate_illuminated: pulse rate and duration must be positive");
    if (pulses.mean_photons_per_pulse < 0.0)
        throw input_error("simulate_illuminated: mean photons per pulse must be nonnegative");

    std::mt19937_64 rng(seed);
    const double mu_eff = pulses.mean_photons_per_pulse * model.efficiency;
    const double p_det = -std::expm1(-mu_eff);
    const double period = 1.0 / pulses.rate_hz;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);

    std::vector<double> photons;
    const auto npulses = static_cast<std::uint64_t>(std::floor(pulses.duration_s * pulses.rate_hz));
    for (std::uint64_t k = 0; k < npulses; ++k) {
        if (uni(rng) >= p_det)
            continue;
        double t = static_cast<double>(k) * period;
        if (model.jitter_sigma_s > 0.0)
            t += jitter(rng) * model.jitter_sigma_s;
        photons.push_back(std::max(t, 0.0));
    }

    Generator gen(model, pulses.duration_s, rng);
    gen.add_photons(std::move(photons));
    TagStream s = quantize(gen.run(), tick_seconds);
    s.meta["seed"] = std::to_string(seed);
    return s;
}

double expected_afterpulse_probability(const DetectorModel& model) {
    double p = 0.0;
    for (const Trap& t : model.traps)
        p += t.amplitude_cps * t.tau_s * std::exp(-model.dead_time_s / t.tau_s);
    return p;
}

std::vector<std::pair<std::string, DetectorModel>> reference_models() {
    auto make = [](double dark, std::vector<Trap> traps) {
        DetectorModel m;
        m.thermal_dcr_cps = dark;
        m.dead_time_s = 0.5e-6;
        m.traps = std::move(traps);
        m.efficiency = 0.5;
        m.jitter_sigma_s = 361e-12;
        return m;
    };
    return {
        {"0C", make(7603.0, {})},
        {"-20C", make(1212.0, {{60.0, 1.10e-5}})},
        {"-40C", make(155.0, {{108.0, 3.73e-6}, {49.0, 1.72e-5}, {5.0, 1.90e-4}})},
        {"-60C", make(24.0, {{233.0, 5.36e-6}, {18.5, 3.94e-5}, {3.0, 1.84e-4}})},
        {"-80C",
         make(1.9, {{133.0, 1.37e-6}, {61.0, 6.13e-6}, {22.0, 2.44e-5}, {2.5, 2.06e-4}})},
        {"-100C",
         make(0.3, {{3446.0, 3.6e-7}, {123.0, 3.4e-6}, {37.0, 2.75e-5}, {2.3, 4.82e-4}})},
    };
}

} // namespace spd
