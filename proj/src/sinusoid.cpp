// SPDX-License-Identifier: Apache-2.0

#include "nlml/sinusoid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "nlml/errors.hpp"

namespace nlml {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDefaultFrequency = kPi / 180.0;  // one cycle per 360 degrees

double wrap_phase(double g) {
    g = std::fmod(g + kPi, 2.0 * kPi);
    if (g < 0.0) g += 2.0 * kPi;
    return g - kPi;
}

void check_inputs(std::span<const double> values, std::span<const double> angles) {
    if (values.size() != angles.size())
        throw UsageError("cosine fit: values/angles length mismatch");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError("cosine fit: non-finite value");
    for (double a : angles)
        if (!std::isfinite(a)) throw NumericError("cosine fit: non-finite angle");
}

// Uniform spacing required by the DFT-based init.
double uniform_spacing(std::span<const double> angles) {
    const double step = angles[1] - angles[0];
    for (std::size_t i = 1; i + 1 < angles.size(); ++i) {
        if (std::fabs((angles[i + 1] - angles[i]) - step) > 1e-9 * std::max(1.0, std::fabs(step)))
            throw UsageError("fourier_init: angles are not uniformly spaced");
    }
    if (!(step > 0.0)) throw UsageError("fourier_init: angles must be increasing");
    return step;
}

struct SpectralPeak {
    double cycles_per_sample;
    double sse;        // residual of the 3-parameter fit at this frequency
    double a, b, c;    // v_j ~ a cos(2 pi f j) + b sin(2 pi f j) + c
};

// Periodogram-style scan: for each candidate frequency (dense grid plus the
// exact DFT bins), least-squares fit {cos, sin, 1} and keep the residual.
// The raw DTFT magnitude peak is badly biased here because the factor curves
// often complete less than one cycle across the window; the joint fit stays
// exact on-bin and unbiased off-bin.
SpectralPeak fit_at_frequency(std::span<const double> values, double f) {
    const std::size_t n = values.size();
    double g[3][3] = {};
    double rhs[3] = {};
    for (std::size_t j = 0; j < n; ++j) {
        const double ph = 2.0 * kPi * f * static_cast<double>(j);
        const double base[3] = {std::cos(ph), std::sin(ph), 1.0};
        for (int r = 0; r < 3; ++r) {
            rhs[r] += base[r] * values[j];
            for (int q = r; q < 3; ++q) g[r][q] += base[r] * base[q];
        }
    }
    for (int r = 0; r < 3; ++r)
        for (int q = 0; q < r; ++q) g[r][q] = g[q][r];

    // 3x3 solve with partial pivoting; near-singular (f ~ 0, cos ~ 1)
    // collapses onto the constant column, handled by a tiny ridge
    for (int r = 0; r < 3; ++r) g[r][r] += 1e-12;
    double x[3] = {rhs[0], rhs[1], rhs[2]};
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(g[piv[r]][col]) > std::fabs(g[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        for (int r = col + 1; r < 3; ++r) {
            const double fac = g[piv[r]][col] / g[piv[col]][col];
            for (int q = col; q < 3; ++q) g[piv[r]][q] -= fac * g[piv[col]][q];
            x[piv[r]] -= fac * x[piv[col]];
        }
    }
    double sol[3];
    for (int col = 2; col >= 0; --col) {
        double s = x[piv[col]];
        for (int q = col + 1; q < 3; ++q) s -= g[piv[col]][q] * sol[q];
        sol[col] = s / g[piv[col]][col];
    }

    SpectralPeak peak;
    peak.cycles_per_sample = f;
    peak.a = sol[0];
    peak.b = sol[1];
    peak.c = sol[2];
    peak.sse = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double ph = 2.0 * kPi * f * static_cast<double>(j);
        const double r = values[j] - (sol[0] * std::cos(ph) + sol[1] * std::sin(ph) + sol[2]);
        peak.sse += r * r;
    }
    return peak;
}

// Candidates sorted by residual, best first.
std::vector<SpectralPeak> spectral_peaks(std::span<const double> values) {
    const std::size_t n = values.size();
    constexpr std::size_t kGrid = 512;
    std::vector<double> freqs;
    freqs.reserve(kGrid + n / 2);
    for (std::size_t m = 1; m <= kGrid; ++m)
        freqs.push_back(0.5 * static_cast<double>(m) / static_cast<double>(kGrid));
    for (std::size_t k = 1; k <= n / 2; ++k)
        freqs.push_back(static_cast<double>(k) / static_cast<double>(n));
    std::sort(freqs.begin(), freqs.end());
    freqs.erase(std::unique(freqs.begin(), freqs.end(),
                            [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
                freqs.end());

    std::vector<double> sses(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i)
        sses[i] = fit_at_frequency(values, freqs[i]).sse;

    // local minima of the residual curve
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const bool down = i == 0 || sses[i] <= sses[i - 1];
        const bool up = i + 1 == freqs.size() || sses[i] <= sses[i + 1];
        if (down && up) order.push_back(i);
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sses[a] < sses[b]; });

    std::vector<SpectralPeak> peaks;
    peaks.reserve(order.size());
    for (std::size_t i : order) peaks.push_back(fit_at_frequency(values, freqs[i]));
    return peaks;
}

CosineParams params_from_peak(const SpectralPeak& peak, double step, double angle0) {
    // a cos(th) + b sin(th) + c = amp cos(th - delta) + c
    CosineParams p;
    p.offset = peak.c;
    p.amplitude = std::hypot(peak.a, peak.b);
    p.frequency = 2.0 * kPi * peak.cycles_per_sample / step;  // rad per degree
    const double delta = std::atan2(peak.b, peak.a);
    p.phase = wrap_phase(-delta - p.frequency * angle0);
    return p;
}

struct LmResult {
    CosineParams params;
    double sse = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::vector<double> history;
};

double model(const CosineParams& p, double w) {
    return p.amplitude * std::cos(p.frequency * w + p.phase) + p.offset;
}

double sse_of(const CosineParams& p, std::span<const double> v, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = v[i] - model(p, w[i]);
        s += r * r;
    }
    return s;
}

// Solve the 4x4 system (JtJ + lambda*diag) delta = Jtr in place.
bool solve4(double a[4][4], double b[4], double out[4]) {
    int piv[4] = {0, 1, 2, 3};
    for (int col = 0; col < 4; ++col) {
        int best = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::fabs(a[piv[r]][col]) > std::fabs(a[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double pivot = a[piv[col]][col];
        if (std::fabs(pivot) < 1e-300) return false;
        for (int r = col + 1; r < 4; ++r) {
            const double f = a[piv[r]][col] / pivot;
            for (int c = col; c < 4; ++c) a[piv[r]][c] -= f * a[piv[col]][c];
            b[piv[r]] -= f * b[piv[col]];
        }
    }
    for (int col = 3; col >= 0; --col) {
        double s = b[piv[col]];
        for (int c = col + 1; c < 4; ++c) s -= a[piv[col]][c] * out[c];
        out[col] = s / a[piv[col]][col];
    }
    return true;
}

LmResult levenberg_marquardt(std::span<const double> v, std::span<const double> w,
                             CosineParams p, std::size_t max_iter) {
    LmResult res;
    double sse = sse_of(p, v, w);
    res.history.push_back(sse);

    const double value_scale = std::sqrt(sse_of(CosineParams{}, v, w) + 1e-300);
    double lambda = 1e-3;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // J^T J and J^T r with the analytic Jacobian of the model
        double jtj[4][4] = {};
        double jtr[4] = {};
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double arg = p.frequency * w[i] + p.phase;
            const double c = std::cos(arg), s = std::sin(arg);
            const double j[4] = {c, -p.amplitude * w[i] * s, -p.amplitude * s, 1.0};
            const double r = v[i] - (p.amplitude * c + p.offset);
            for (int a = 0; a < 4; ++a) {
                jtr[a] += j[a] * r;
                for (int b = a; b < 4; ++b) jtj[a][b] += j[a] * j[b];
            }
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

        bool accepted = false;
        for (int tries = 0; tries < 40 && !accepted; ++tries) {
            double lhs[4][4];
            double rhs[4];
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) lhs[a][b] = jtj[a][b];
                lhs[a][a] += lambda * std::max(jtj[a][a], 1e-12);
                rhs[a] = jtr[a];
            }
            double delta[4];
            if (solve4(lhs, rhs, delta)) {
                CosineParams trial = p;
                trial.amplitude += delta[0];
                trial.frequency += delta[1];
                trial.phase += delta[2];
                trial.offset += delta[3];
                const double trial_sse = sse_of(trial, v, w);
                if (std::isfinite(trial_sse) && trial_sse < sse) {
                    const double rel = (sse - trial_sse) / std::max(sse, 1e-300);
                    p = trial;
                    sse = trial_sse;
                    res.history.push_back(sse);
                    lambda = std::max(lambda / 3.0, 1e-14);
                    accepted = true;
                    const double rms = std::sqrt(sse / static_cast<double>(v.size()));
                    if (rel < 1e-10 || rms < 1e-14 * std::max(1.0, value_scale)) {
                        res.params = p;
                        res.sse = sse;
                        res.converged = true;
                        return res;
                    }
                }
            }
            if (!accepted) lambda *= 4.0;
        }
        if (!accepted) break;  // stuck even with heavy damping
    }
    res.params = p;
    res.sse = sse;
    // ran out of iterations (or stalled) without meeting the tolerance
    res.converged = false;
    return res;
}

}  // namespace

double eval_curve(const CosineParams& p, double angle_deg) {
    return p.amplitude * std::cos(p.frequency * angle_deg + p.phase) + p.offset;
}

CosineParams canonicalize(const CosineParams& p) {
    CosineParams q = p;
    if (q.amplitude < 0.0) {
        q.amplitude = -q.amplitude;
        q.phase += kPi;
    }
    if (q.frequency < 0.0) {
        q.frequency = -q.frequency;
        q.phase = -q.phase;
    }
    if (q.amplitude == 0.0 || q.frequency == 0.0) {
        // constant curve: amplitude contribution folds into the offset
        q.offset += q.amplitude * std::cos(q.phase);
        q.amplitude = 0.0;
        q.frequency = kDefaultFrequency;
        q.phase = 0.0;
        q.degenerate = true;
    }
    q.phase = wrap_phase(q.phase);
    return q;
}

CosineParams fourier_init(std::span<const double> values, std::span<const double> angles) {
    check_inputs(values, angles);
    if (values.size() < 4) throw UsageError("fourier_init: need at least 4 samples");
    const double step = uniform_spacing(angles);
    const std::size_t n = values.size();

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> centered(n);
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        centered[i] = values[i] - mean;
        spread = std::max(spread, std::fabs(centered[i]));
    }
    if (spread < 1e-13 * (1.0 + std::fabs(mean))) {
        CosineParams p;
        p.offset = mean;
        p.frequency = kDefaultFrequency;
        p.degenerate = true;
        return p;
    }

    const auto peaks = spectral_peaks(values);
    if (peaks.empty() || peaks.front().cycles_per_sample <= 0.0) {
        CosineParams p;
        p.offset = mean;
        p.frequency = kDefaultFrequency;
        p.degenerate = true;
        return p;
    }
    return params_from_peak(peaks.front(), step, angles[0]);
}

CosineFit fit_cosine(std::span<const double> values, std::span<const double> angles,
                     const CosineParams& init) {
    check_inputs(values, angles);
    if (values.size() < 4) throw UsageError("fit_cosine: need at least 4 samples");
    const std::size_t n = values.size();

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double rms = 0.0;
    for (double v : values) rms += (v - mean) * (v - mean);
    rms = std::sqrt(rms / static_cast<double>(n));

    // constant column: the cosine parameters are unidentifiable
    if (rms < 1e-13 * (1.0 + std::fabs(mean)) || init.degenerate) {
        CosineFit fit;
        fit.params.offset = mean;
        fit.params.frequency = kDefaultFrequency;
        fit.params.degenerate = true;
        fit.residual_rms = rms;
        fit.converged = true;
        fit.sse_history = {rms * rms * static_cast<double>(n)};
        return fit;
    }

    // Candidate starts: the supplied init plus alternative spectral peaks and
    // frequency rescalings; refinement keeps the best local minimum. The
    // target below ends the search early on noise-free data.
    const double target_sse =
        static_cast<double>(n) * std::pow(1e-12 * std::max(1.0, rms), 2.0);

    std::vector<CosineParams> starts{init};
    {
        const double step = angles[1] - angles[0];
        const auto peaks = spectral_peaks(values);
        for (std::size_t i = 1; i < peaks.size() && i < 3; ++i)
            starts.push_back(params_from_peak(peaks[i], step, angles[0]));
        for (double f : {0.5, 2.0, 0.25}) {
            CosineParams alt = init;
            alt.frequency *= f;
            starts.push_back(alt);
        }
    }

    LmResult best;
    for (const auto& start : starts) {
        if (!std::isfinite(start.amplitude) || !std::isfinite(start.frequency) ||
            !std::isfinite(start.phase) || !std::isfinite(start.offset))
            throw NumericError("fit_cosine: non-finite initial parameters");
        LmResult r = levenberg_marquardt(values, angles, start, 5000);
        if (r.sse < best.sse) best = std::move(r);
        if (best.sse <= target_sse) break;
    }

    CosineFit fit;
    fit.params = canonicalize(best.params);
    fit.residual_rms = std::sqrt(best.sse / static_cast<double>(n));
    fit.converged = best.converged;
    fit.sse_history = std::move(best.history);
    return fit;
}

AxisCurves fit_axis(Axis axis, const Matrix& factor, std::span<const double> angles) {
    if (factor.rows() != angles.size())
        throw UsageError("fit_axis: factor rows must match angle count");
    AxisCurves out;
    out.axis = axis;
    out.grid_angles.assign(angles.begin(), angles.end());
    out.dims.reserve(factor.cols());
    std::vector<double> column(factor.rows());
    for (std::size_t j = 0; j < factor.cols(); ++j) {
        for (std::size_t i = 0; i < factor.rows(); ++i) column[i] = factor(i, j);
        const CosineParams init = fourier_init(column, angles);
        out.dims.push_back(fit_cosine(column, angles, init));
    }
    return out;
}

FineFactorTable gen_fine_factors(const AxisCurves& curves, double angle_min, double angle_max,
                                 double step) {
    if (!(step > 0.0)) throw UsageError("gen_fine_factors: step must be positive");
    if (!(angle_max > angle_min)) throw UsageError("gen_fine_factors: empty range");
    if (step > angle_max - angle_min)
        throw UsageError("gen_fine_factors: step larger than the angle range");
    if (curves.dims.empty()) throw UsageError("gen_fine_factors: no fitted curves");
    // no extrapolation beyond the angles the curves were fitted on
    if (!curves.grid_angles.empty() &&
        (angle_min < curves.grid_angles.front() - 1e-9 ||
         angle_max > curves.grid_angles.back() + 1e-9))
        throw UsageError("gen_fine_factors: range extends beyond the fitted angle range");

    // row count = floor((max-min)/step) + 1, with a guard against the
    // division landing just below an integer
    const auto count =
        static_cast<std::size_t>(std::floor((angle_max - angle_min) / step + 1e-9)) + 1;

    FineFactorTable table;
    table.axis = curves.axis;
    table.angle_min = angle_min;
    table.angle_max = angle_max;
    table.step = step;
    table.rows = Matrix(count, curves.dims.size());
    for (std::size_t i = 0; i < count; ++i) {
        const double w = angle_min + static_cast<double>(i) * step;
        for (std::size_t j = 0; j < curves.dims.size(); ++j)
            table.rows(i, j) = eval_curve(curves.dims[j].params, w);
    }
    return table;
}

}  // namespace nlml
