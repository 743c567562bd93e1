#include "spd/decay_fit.hpp"

#include "spd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace spd {

FitStart select_fit_start(const RateHistogram& hist) {
    const std::vector<double>& r = hist.rate_cps;
    if (r.empty())
        throw input_error("select_fit_start: empty histogram");
    std::size_t peak = static_cast<std::size_t>(
        std::max_element(r.begin(), r.end()) - r.begin());
    for (std::size_t i = peak; i + 4 < r.size(); ++i) {
        if (r[i] > r[i + 1] && r[i + 1] > r[i + 2] && r[i + 2] > r[i + 3] &&
            r[i + 3] > r[i + 4])
            return {i, true};
    }
    return {peak, false};
}

namespace {

// Gaussian elimination with partial pivoting; a is n x n row-major.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col]))
                piv = r;
        if (std::fabs(a[piv * n + col]) < 1e-300)
            return false;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / a[col * n + col];
            for (std::size_t c = col; c < n; ++c)
                a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c)
            s -= a[r * n + c] * b[c];
        b[r] = s / a[r * n + r];
    }
    return true;
}

struct FitData {
    std::vector<double> x, y, w;
};

double model_value(const std::vector<double>& p, double x) {
    // p = [log D, log A1, log tau1, ...]
    double f = std::exp(p[0]);
    for (std::size_t j = 1; j + 1 < p.size(); j += 2)
        f += std::exp(p[j]) * std::exp(-x / std::exp(p[j + 1]));
    return f;
}

double weighted_rms(const FitData& d, const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        double r = (model_value(p, d.x[i]) - d.y[i]) * d.w[i];
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(d.x.size()));
}

// Weighted linear least squares for D and the amplitudes with the lifetimes
// held fixed; negative solutions are clamped to a small positive floor.
void solve_amplitudes(const FitData& d, const std::vector<double>& taus,
                      double& dark, std::vector<double>& amps) {
    const std::size_t m = taus.size() + 1;
    std::vector<double> ata(m * m, 0.0), atb(m, 0.0), col(m);
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        col[0] = 1.0;
        for (std::size_t j = 0; j < taus.size(); ++j)
            col[j + 1] = std::exp(-d.x[i] / taus[j]);
        double w2 = d.w[i] * d.w[i];
        for (std::size_t a = 0; a < m; ++a) {
            atb[a] += w2 * col[a] * d.y[i];
            for (std::size_t b = 0; b < m; ++b)
                ata[a * m + b] += w2 * col[a] * col[b];
        }
    }
    for (std::size_t a = 0; a < m; ++a)
        ata[a * m + a] *= 1.0 + 1e-10;
    std::vector<double> sol = atb;
    if (!solve_dense(ata, sol, m))
        sol.assign(m, 0.0);
    double ymax = *std::max_element(d.y.begin(), d.y.end());
    double floor = std::max(ymax * 1e-6, 1e-12);
    dark = std::max(sol[0], floor);
    amps.resize(taus.size());
    for (std::size_t j = 0; j < taus.size(); ++j)
        amps[j] = std::max(sol[j + 1], floor);
}

struct LmResult {
    std::vector<double> p;
    double rms = std::numeric_limits<double>::infinity();
    bool converged = false;
};

LmResult levenberg_marquardt(const FitData& d, std::vector<double> p, int max_iter) {
    const std::size_t n = d.x.size();
    const std::size_t m = p.size();
    std::vector<double> resid(n), jac(n * m);

    auto evaluate = [&](const std::vector<double>& q, std::vector<double>& r,
                        std::vector<double>* J) {
        double chi2 = 0.0;
        double dark = std::exp(q[0]);
        for (std::size_t i = 0; i < n; ++i) {
            double f = dark;
            if (J)
                (*J)[i * m] = dark * d.w[i];
            for (std::size_t j = 1; j + 1 < m; j += 2) {
                double amp = std::exp(q[j]);
                double tau = std::exp(q[j + 1]);
                double e = amp * std::exp(-d.x[i] / tau);
                f += e;
                if (J) {
                    (*J)[i * m + j] = e * d.w[i];
                    (*J)[i * m + j + 1] = e * (d.x[i] / tau) * d.w[i];
                }
            }
            r[i] = (f - d.y[i]) * d.w[i];
            chi2 += r[i] * r[i];
        }
        return chi2;
    };

    // Box constraints that remove the unidentifiable corners of the model:
    // a lifetime far below the first bin is an invisible spike whose amplitude
    // can grow without bound, and one far beyond the last bin is just a second
    // constant. Amplitudes are bounded through their value at the first point.
    const double x0 = d.x.front();
    const double ymax = *std::max_element(d.y.begin(), d.y.end());
    const double ltau_lo = std::log(x0 / 2.0);
    const double ltau_hi = std::log(10.0 * d.x.back());
    auto apply_bounds = [&](std::vector<double>& q) {
        for (std::size_t j = 1; j + 1 < q.size(); j += 2) {
            q[j + 1] = std::clamp(q[j + 1], ltau_lo, ltau_hi);
            double lamp_hi = std::log(10.0 * ymax) + x0 / std::exp(q[j + 1]);
            q[j] = std::min(q[j], lamp_hi);
        }
    };
    apply_bounds(p);

    double chi2 = evaluate(p, resid, &jac);
    double lambda = 1e-3;
    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<double> jtj(m * m, 0.0), jtr(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < m; ++a) {
                jtr[a] += jac[i * m + a] * resid[i];
                for (std::size_t b = a; b < m; ++b)
                    jtj[a * m + b] += jac[i * m + a] * jac[i * m + b];
            }
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < a; ++b)
                jtj[a * m + b] = jtj[b * m + a];

        double gnorm = 0.0;
        for (double g : jtr)
            gnorm = std::max(gnorm, std::fabs(g));
        if (gnorm < 1e-12 * (1.0 + chi2)) {
            converged = true;
            break;
        }

        bool stepped = false;
        for (int tries = 0; tries < 40 && !stepped; ++tries) {
            std::vector<double> a = jtj;
            for (std::size_t k = 0; k < m; ++k)
                a[k * m + k] += lambda * std::max(jtj[k * m + k], 1e-12);
            std::vector<double> delta = jtr;
            for (double& v : delta)
                v = -v;
            if (!solve_dense(a, delta, m)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial = p;
            double steps = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                // Log-space steps are dimensionless; clamp for stability.
                delta[k] = std::clamp(delta[k], -4.0, 4.0);
                trial[k] += delta[k];
                steps = std::max(steps, std::fabs(delta[k]));
            }
            apply_bounds(trial);
            std::vector<double> tr(n);
            double tchi2 = evaluate(trial, tr, nullptr);
            if (tchi2 < chi2) {
                p = std::move(trial);
                resid = std::move(tr);
                chi2 = tchi2;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (steps < 1e-10) {
                    converged = true;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) {
            converged = true; // no downhill step exists at any damping
            break;
        }
        if (converged)
            break;
        evaluate(p, resid, &jac);
    }
    LmResult r;
    r.p = std::move(p);
    r.rms = std::sqrt(chi2 / static_cast<double>(n));
    r.converged = converged;
    return r;
}

// Count-weighted mean of the final 20% of the fitted time span: a robust
// first guess for the dark level before any component is known.
double tail_dark(const FitData& d) {
    double cut = d.x.front() + 0.8 * (d.x.back() - d.x.front());
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        if (d.x[i] < cut)
            continue;
        double wc = d.w[i] * d.w[i]; // inverse variance
        sw += wc;
        swy += wc * d.y[i];
    }
    if (sw <= 0.0) {
        sw = swy = 0.0;
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            sw += 1.0;
            swy += d.y[i];
        }
    }
    return std::max(swy / sw, 1e-300);
}

struct PeelGuess {
    std::vector<double> taus;
    std::vector<double> amps;
};

// One round of peeling: fit a single exponential to the slowest part of the
// excess that still clears the threshold, via log-linear regression over its
// final stretch. Returns false when nothing clears the threshold.
bool regress_slowest(const FitData& d, const std::vector<double>& ex,
                     const std::vector<double>& thr, double& amp, double& tau) {
    const std::size_t n = d.x.size();
    std::size_t hi = n;
    for (std::size_t i = n; i-- > 0;) {
        if (ex[i] > thr[i]) {
            hi = i;
            break;
        }
    }
    if (hi == n)
        return false;
    double t_hi = d.x[hi];
    double lo_x = t_hi / 4.0;
    std::vector<std::size_t> window;
    while (true) {
        window.clear();
        for (std::size_t i = 0; i <= hi; ++i)
            if (d.x[i] >= lo_x && ex[i] > thr[i])
                window.push_back(i);
        if (window.size() >= 3 || lo_x < d.x.front())
            break;
        lo_x *= 0.5;
    }
    if (window.size() < 2)
        return false;
    double sn = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i : window) {
        double ly = std::log(ex[i]);
        sn += 1.0;
        sx += d.x[i];
        sy += ly;
        sxx += d.x[i] * d.x[i];
        sxy += d.x[i] * ly;
    }
    double det = sn * sxx - sx * sx;
    double slope = det != 0.0 ? (sn * sxy - sx * sy) / det : 0.0;
    tau = slope < 0.0 ? -1.0 / slope : t_hi / 2.0;
    tau = std::clamp(tau, 0.1 * d.x.front(), 10.0 * d.x.back());
    amp = std::exp((sy + sx / tau) / sn);
    return std::isfinite(amp) && amp > 0.0;
}

// Successive peeling: strip the slowest exponential off the dark-subtracted
// excess by a log-linear regression over its final decade, then repeat.
// Gives well-separated, correctly scaled lifetime and amplitude guesses.
PeelGuess peel_components(const FitData& d, std::size_t k, double dark) {
    const std::size_t n = d.x.size();
    double ymax = *std::max_element(d.y.begin(), d.y.end());
    std::vector<double> ex(n), thr(n);
    for (std::size_t i = 0; i < n; ++i) {
        ex[i] = d.y[i] - dark;
        thr[i] = std::max(3.0 / d.w[i], 1e-9 * ymax); // three sigma
    }
    PeelGuess g;
    for (std::size_t comp = 0; comp < k; ++comp) {
        double amp, tau;
        if (!regress_slowest(d, ex, thr, amp, tau))
            break;
        for (std::size_t i = 0; i < n; ++i) {
            double sub = amp * std::exp(-d.x[i] / tau);
            ex[i] -= sub;
            // The subtraction is only good to a few percent; keep its residue
            // from masquerading as a faster component in later rounds.
            thr[i] = std::max(thr[i], 0.1 * sub);
        }
        g.taus.push_back(tau);
        g.amps.push_back(amp);
    }
    // Pad missing guesses a decade below the fastest one found so far.
    while (g.taus.size() < k) {
        double base =
            g.taus.empty() ? d.x.back() : *std::min_element(g.taus.begin(), g.taus.end());
        g.taus.push_back(std::max(base / 10.0, 0.1 * d.x.front()));
        g.amps.push_back(std::max(0.1 * dark, 1e-12));
    }
    std::vector<std::size_t> order(g.taus.size());
    for (std::size_t j = 0; j < order.size(); ++j)
        order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return g.taus[a] < g.taus[b]; });
    PeelGuess sorted;
    for (std::size_t j : order) {
        sorted.taus.push_back(g.taus[j]);
        sorted.amps.push_back(g.amps[j]);
    }
    // Keep starts distinguishable; coincident lifetimes stall the solver.
    for (std::size_t j = sorted.taus.size(); j-- > 1;)
        if (sorted.taus[j - 1] > sorted.taus[j] / 2.0)
            sorted.taus[j - 1] = sorted.taus[j] / 3.0;
    return sorted;
}

LmResult fit_order(const FitData& d, std::size_t k, int max_iter,
                   const LmResult* prev = nullptr) {
    if (k == 0) {
        double sw = 0.0, swy = 0.0;
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            sw += d.w[i] * d.w[i];
            swy += d.w[i] * d.w[i] * d.y[i];
        }
        double dark = sw > 0.0 ? std::max(swy / sw, 1e-300) : 1e-300;
        LmResult r;
        r.p = {std::log(dark)};
        r.rms = weighted_rms(d, r.p);
        r.converged = true;
        return r;
    }

    const double dark0 = tail_dark(d);
    const PeelGuess peel = peel_components(d, k, dark0);

    struct Start {
        std::vector<double> taus;
        std::vector<double> amps; // empty: refit amplitudes linearly
        double dark = 0.0;
    };
    std::vector<Start> starts;
    starts.push_back({peel.taus, peel.amps, dark0}); // peel parameters verbatim
    starts.push_back({peel.taus, {}, 0.0});          // peel lifetimes, refit amplitudes

    // Incremental start: keep the best lower-order fit and seed one more
    // component from whatever excess it left behind, at a gentle one-sigma
    // threshold so broad weak components are still picked up.
    if (prev && prev->p.size() == 2 * k - 1) {
        std::vector<double> ex(d.x.size()), thr(d.x.size());
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            ex[i] = d.y[i] - model_value(prev->p, d.x[i]);
            thr[i] = 1.0 / d.w[i]; // one sigma
        }
        double amp, tau;
        if (regress_slowest(d, ex, thr, amp, tau)) {
            Start s;
            s.dark = std::exp(prev->p[0]);
            for (std::size_t j = 1; j + 1 < prev->p.size(); j += 2) {
                s.amps.push_back(std::exp(prev->p[j]));
                s.taus.push_back(std::exp(prev->p[j + 1]));
            }
            s.amps.push_back(amp);
            s.taus.push_back(tau);
            std::vector<std::size_t> order(k);
            for (std::size_t j = 0; j < k; ++j)
                order[j] = j;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return s.taus[a] < s.taus[b];
            });
            Start sorted;
            sorted.dark = s.dark;
            for (std::size_t j : order) {
                sorted.taus.push_back(s.taus[j]);
                sorted.amps.push_back(s.amps[j]);
            }
            starts.push_back(std::move(sorted));
        }
    }

    // Log-spaced fallbacks across the region that actually decays.
    double t_hi = std::clamp(peel.taus.back() * 3.0, d.x.front() * 2.0, d.x.back());
    const double lx0 = std::log(d.x.front());
    const double lx1 = std::log(t_hi);
    for (double scale : {1.0, 0.4, 2.5}) {
        std::vector<double> taus(k);
        for (std::size_t j = 0; j < k; ++j) {
            double f = static_cast<double>(j + 1) / static_cast<double>(k + 1);
            taus[j] = scale * std::exp(lx0 + f * (lx1 - lx0));
        }
        starts.push_back({std::move(taus), {}, 0.0});
    }

    LmResult best;
    for (const Start& s : starts) {
        double dark = s.dark;
        std::vector<double> amps = s.amps;
        if (amps.empty())
            solve_amplitudes(d, s.taus, dark, amps);
        std::vector<double> p;
        p.push_back(std::log(std::max(dark, 1e-300)));
        for (std::size_t j = 0; j < k; ++j) {
            p.push_back(std::log(std::max(amps[j], 1e-300)));
            p.push_back(std::log(s.taus[j]));
        }
        LmResult r = levenberg_marquardt(d, std::move(p), max_iter);

        // The high-count tail carries almost no weight, so the descent can
        // stall with the dark level (and amplitudes) slightly off even though
        // the linear subproblem is solvable exactly. Re-solve it at the final
        // lifetimes and keep the refinement when it helps.
        {
            std::vector<double> taus_fit;
            for (std::size_t j = 2; j < r.p.size(); j += 2)
                taus_fit.push_back(std::exp(r.p[j]));
            double dark_r;
            std::vector<double> amps_r;
            solve_amplitudes(d, taus_fit, dark_r, amps_r);
            std::vector<double> p2;
            p2.push_back(std::log(dark_r));
            for (std::size_t j = 0; j < taus_fit.size(); ++j) {
                p2.push_back(std::log(amps_r[j]));
                p2.push_back(std::log(taus_fit[j]));
            }
            double rms2 = weighted_rms(d, p2);
            if (rms2 < r.rms) {
                LmResult polished = levenberg_marquardt(d, std::move(p2), max_iter);
                if (polished.rms < r.rms)
                    r = std::move(polished);
            }
        }

        if (std::getenv("SPD_FIT_DEBUG")) {
            std::fprintf(stderr, "[fit k=%zu] start:", k);
            for (std::size_t j = 0; j < k; ++j)
                std::fprintf(stderr, " (A=%.3g tau=%.3g)", amps[j], s.taus[j]);
            std::fprintf(stderr, " dark=%.3g -> rms=%.4g conv=%d p:", dark, r.rms,
                         (int)r.converged);
            for (double v : r.p)
                std::fprintf(stderr, " %.4g", std::exp(v));
            std::fprintf(stderr, "\n");
        }
        if (r.rms < best.rms * (1.0 - 1e-12))
            best = std::move(r);
    }
    return best;
}

} // namespace

double trap_model(const TrapFit& fit, double t) {
    double f = fit.dark_cps;
    for (const TrapComponent& c : fit.components)
        f += c.amplitude_cps * std::exp(-t / c.tau_s);
    return f;
}

TrapFit fit_trap_decay(const RateHistogram& hist, std::size_t start,
                       const FitOptions& opts) {
    if (opts.max_components < 1 || opts.max_components > 4)
        throw input_error("fit_trap_decay: max_components must be 1..4");
    if (start >= hist.pair_counts.size())
        throw input_error("fit_trap_decay: start bin out of range");

    FitData d;
    for (std::size_t k = start; k < hist.pair_counts.size(); ++k) {
        if (hist.pair_counts[k] == 0)
            continue;
        d.x.push_back(hist.grid.center(k));
        d.y.push_back(hist.rate_cps[k]);
        // 1/sqrt(count) weighting of the count residuals; in rate units the
        // residual multiplier is sqrt(count)/rate, i.e. one over the Poisson
        // sigma of the bin's rate estimate.
        d.w.push_back(std::sqrt(static_cast<double>(hist.pair_counts[k])) /
                      hist.rate_cps[k]);
    }
    if (d.x.empty())
        throw input_error("fit_trap_decay: no populated bins from the start onward");

    auto points_needed = [](std::size_t k) { return 3 * (2 * k + 1); };
    std::size_t max_feasible = 0;
    while (max_feasible < static_cast<std::size_t>(opts.max_components) &&
           d.x.size() >= points_needed(max_feasible + 1))
        ++max_feasible;

    LmResult chosen;
    if (opts.forced_components >= 0) {
        std::size_t k = static_cast<std::size_t>(opts.forced_components);
        if (k > static_cast<std::size_t>(opts.max_components))
            throw input_error("fit_trap_decay: forced order exceeds max_components");
        if (k > 0 && d.x.size() < points_needed(k))
            throw input_error("fit_trap_decay: too few populated bins for the requested order");
        // Walk up through the lower orders so each one can seed the next.
        chosen = fit_order(d, 0, opts.max_iterations);
        for (std::size_t j = 1; j <= k; ++j)
            chosen = fit_order(d, j, opts.max_iterations, &chosen);
    } else {
        // A component earns its keep only if its contribution, aggregated over
        // the fitted range, rises above the counting noise
        // sigma_i = y_i/sqrt(count_i). A broad weak component can sit near one
        // sigma in every bin yet be decisively present overall, so the z
        // scores are combined in quadrature.
        auto all_significant = [&](const LmResult& r) {
            for (std::size_t j = 1; j + 1 < r.p.size(); j += 2) {
                double amp = std::exp(r.p[j]);
                double tau = std::exp(r.p[j + 1]);
                double z2 = 0.0;
                for (std::size_t i = 0; i < d.x.size(); ++i) {
                    double z = amp * std::exp(-d.x[i] / tau) * d.w[i];
                    z2 += z * z;
                }
                if (std::sqrt(z2) < 3.0)
                    return false;
            }
            return true;
        };

        chosen = fit_order(d, 0, opts.max_iterations);
        for (std::size_t k = 1; k <= max_feasible; ++k) {
            LmResult next = fit_order(d, k, opts.max_iterations, &chosen);
            if (next.rms >= 0.95 * chosen.rms)
                break; // adding a component no longer pays for itself
            if (!all_significant(next))
                break; // the refinement is just chasing counting noise
            chosen = std::move(next);
        }
    }

    TrapFit fit;
    fit.fit_start_bin = start;
    fit.dark_cps = std::exp(chosen.p[0]);
    for (std::size_t j = 1; j + 1 < chosen.p.size(); j += 2)
        fit.components.push_back({std::exp(chosen.p[j]), std::exp(chosen.p[j + 1])});
    std::sort(fit.components.begin(), fit.components.end(),
              [](const TrapComponent& a, const TrapComponent& b) { return a.tau_s < b.tau_s; });

    // Merge near-duplicate lifetimes (ratio < 1.5) into a single component.
    for (std::size_t j = 0; j + 1 < fit.components.size();) {
        TrapComponent& a = fit.components[j];
        TrapComponent& b = fit.components[j + 1];
        if (b.tau_s < 1.5 * a.tau_s) {
            double amp = a.amplitude_cps + b.amplitude_cps;
            a.tau_s = (a.amplitude_cps * a.tau_s + b.amplitude_cps * b.tau_s) / amp;
            a.amplitude_cps = amp;
            a.merged = true;
            fit.components.erase(fit.components.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        } else {
            ++j;
        }
    }
    for (TrapComponent& c : fit.components)
        c.below_dead_time = c.tau_s < opts.dead_time_s;

    // Recompute the norm from the final (possibly merged) parameters.
    double s = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        double r = (trap_model(fit, d.x[i]) - d.y[i]) * d.w[i];
        s += r * r;
    }
    fit.residual_norm = std::sqrt(s / static_cast<double>(d.x.size()));
    fit.converged = chosen.converged;
    return fit;
}

FwhmResult fwhm(const std::vector<double>& counts, double bin_width, double first_edge) {
    if (counts.empty() || !(bin_width > 0.0))
        throw input_error("fwhm: empty histogram or bad bin width");
    FwhmResult r;
    auto center = [&](std::size_t i) {
        return first_edge + (static_cast<double>(i) + 0.5) * bin_width;
    };
    std::size_t peak = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    double vmax = counts[peak];
    if (!(vmax > 0.0))
        throw input_error("fwhm: histogram has no positive bins");
    r.peak_center_s = center(peak);
    std::size_t nonzero = 0;
    for (double c : counts)
        if (c > 0.0)
            ++nonzero;
    if (nonzero == 1) {
        r.degenerate = true;
        r.left_s = first_edge + static_cast<double>(peak) * bin_width;
        r.right_s = r.left_s + bin_width;
        r.fwhm_s = bin_width;
        return r;
    }

    const double half = vmax / 2.0;
    std::vector<double> crossings;
    for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
        double a = counts[i] - half;
        double b = counts[i + 1] - half;
        if ((a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0)) {
            double frac = a / (a - b);
            crossings.push_back(center(i) + frac * bin_width);
        }
    }
    double left = std::numeric_limits<double>::quiet_NaN();
    double right = std::numeric_limits<double>::quiet_NaN();
    for (double c : crossings) {
        if (c <= r.peak_center_s && (std::isnan(left) || c < left))
            left = c;
        if (c >= r.peak_center_s && (std::isnan(right) || c > right))
            right = c;
    }
    if (std::isnan(left) || std::isnan(right))
        throw numeric_error("fwhm: half maximum is not crossed on both sides of the peak");
    r.multimodal = crossings.size() > 2;
    r.left_s = left;
    r.right_s = right;
    r.fwhm_s = right - left;
    return r;
}

namespace {

struct OlsFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
};

OlsFit ols(const std::vector<std::pair<double, double>>& pts, std::size_t from) {
    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = from; i < pts.size(); ++i) {
        n += 1.0;
        sx += pts[i].first;
        sy += pts[i].second;
        sxx += pts[i].first * pts[i].first;
        sxy += pts[i].first * pts[i].second;
    }
    double det = n * sxx - sx * sx;
    OlsFit f;
    if (std::fabs(det) < 1e-300)
        throw numeric_error("linear fit: degenerate abscissa");
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy * sxx - sx * sxy) / det;
    double s = 0.0;
    for (std::size_t i = from; i < pts.size(); ++i) {
        double r = pts[i].second - (f.slope * pts[i].first + f.intercept);
        s += r * r;
    }
    f.rms = std::sqrt(s / n);
    return f;
}

} // namespace

LinearExtrapolation linear_extrapolate_zero(
    const std::vector<std::pair<double, double>>& points, RegionPolicy policy) {
    if (points.size() < 3)
        throw input_error("linear_extrapolate_zero: need at least 3 points");

    // Sort by x, remembering the caller's indices.
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return points[a].first < points[b].first;
    });
    std::vector<std::pair<double, double>> sorted;
    for (std::size_t i : order)
        sorted.push_back(points[i]);

    std::size_t from = 0;
    OlsFit fit = ols(sorted, from);
    if (policy == RegionPolicy::Auto) {
        while (sorted.size() - from > 3) {
            OlsFit trimmed = ols(sorted, from + 1);
            if (trimmed.rms < 0.8 * fit.rms) {
                ++from;
                fit = trimmed;
            } else {
                break;
            }
        }
    }

    double yscale = 0.0, xscale = 0.0;
    for (std::size_t i = from; i < sorted.size(); ++i) {
        yscale = std::max(yscale, std::fabs(sorted[i].second));
        xscale = std::max(xscale, std::fabs(sorted[i].first));
    }
    if (std::fabs(fit.slope) < 1e-12 * std::max(yscale / std::max(xscale, 1e-300), 1e-300))
        throw numeric_error("linear_extrapolate_zero: slope is zero, no crossing");

    LinearExtrapolation out;
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.x_at_zero = -fit.intercept / fit.slope;
    out.rms = fit.rms;
    for (std::size_t i = from; i < sorted.size(); ++i) {
        out.included.push_back(order[i]);
        out.residuals.push_back(sorted[i].second -
                                (fit.slope * sorted[i].first + fit.intercept));
    }
    return out;
}

} // namespace spd
