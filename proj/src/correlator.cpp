#include "qdsps/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "qdsps/error.hpp"

namespace qdsps {

namespace {

void check_sorted(std::span<const std::int64_t> v, const char* name)
{
    if (!std::is_sorted(v.begin(), v.end())) {
        throw ValidationError(std::string("correlate: stream ") + name + " is not sorted by time");
    }
}

CorrelationHistogram empty_histogram(std::int64_t bin_width_ps, std::int64_t span_ps)
{
    require(bin_width_ps > 0, "correlate: bin_width must be > 0");
    require(span_ps > 0 && span_ps % bin_width_ps == 0,
            "correlate: span must be a positive multiple of bin_width");
    CorrelationHistogram h;
    h.bin_width_ps = bin_width_ps;
    h.span_ps = span_ps;
    h.counts.assign(static_cast<std::size_t>(2 * span_ps / bin_width_ps), 0);
    return h;
}

// Core loop over a[begin, end). `lo` tracks the first b within reach of the
// current a; it only moves forward because a is sorted.
void accumulate(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                CorrelationHistogram& h)
{
    const std::int64_t span = h.span_ps;
    const std::int64_t bw = h.bin_width_ps;
    std::size_t lo = static_cast<std::size_t>(
        std::lower_bound(b.begin(), b.end(), a.empty() ? 0 : a.front() - span) - b.begin());
    for (const std::int64_t ta : a) {
        while (lo < b.size() && b[lo] - ta < -span) ++lo;
        for (std::size_t j = lo; j < b.size(); ++j) {
            const std::int64_t d = b[j] - ta;
            if (d >= span) break;
            ++h.counts[static_cast<std::size_t>((d + span) / bw)];
            ++h.total_pairs;
        }
    }
}

} // namespace

CorrelationHistogram& CorrelationHistogram::operator+=(const CorrelationHistogram& other)
{
    require(bin_width_ps == other.bin_width_ps && span_ps == other.span_ps,
            "CorrelationHistogram: incompatible binning");
    for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
    total_pairs += other.total_pairs;
    return *this;
}

std::vector<std::int64_t> channel_times(const TimeTagStream& stream, std::uint8_t channel)
{
    std::vector<std::int64_t> out;
    for (const TimeTag& tag : stream) {
        if (tag.channel == channel) out.push_back(tag.t_ps);
    }
    return out;
}

CorrelationHistogram correlate(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                               std::int64_t bin_width_ps, std::int64_t span_ps)
{
    CorrelationHistogram h = empty_histogram(bin_width_ps, span_ps);
    check_sorted(a, "a");
    check_sorted(b, "b");
    accumulate(a, b, h);
    return h;
}

CorrelationHistogram correlate(const TimeTagStream& a, const TimeTagStream& b,
                               std::int64_t bin_width_ps, std::int64_t span_ps)
{
    std::vector<std::int64_t> ta(a.size()), tb(b.size());
    std::transform(a.begin(), a.end(), ta.begin(), [](const TimeTag& t) { return t.t_ps; });
    std::transform(b.begin(), b.end(), tb.begin(), [](const TimeTag& t) { return t.t_ps; });
    return correlate(ta, tb, bin_width_ps, span_ps);
}

CorrelationHistogram correlate_chunked(std::span<const std::int64_t> a,
                                       std::span<const std::int64_t> b,
                                       std::int64_t bin_width_ps, std::int64_t span_ps,
                                       unsigned chunks)
{
    require(chunks >= 1, "correlate_chunked: chunks must be >= 1");
    CorrelationHistogram total = empty_histogram(bin_width_ps, span_ps);
    check_sorted(a, "a");
    check_sorted(b, "b");
    chunks = static_cast<unsigned>(std::min<std::size_t>(chunks, std::max<std::size_t>(1, a.size())));

    std::vector<std::future<CorrelationHistogram>> parts;
    for (unsigned c = 0; c < chunks; ++c) {
        const std::size_t begin = a.size() * c / chunks;
        const std::size_t end = a.size() * (c + 1) / chunks;
        parts.push_back(std::async(std::launch::async, [=] {
            CorrelationHistogram h = empty_histogram(bin_width_ps, span_ps);
            accumulate(a.subspan(begin, end - begin), b, h);
            return h;
        }));
    }
    for (auto& p : parts) total += p.get();
    return total;
}

void PeakWindows::validate() const
{
    require(rep_period_ps > 0, "PeakWindows: rep_period must be > 0");
    require(half_window_ps > 0 && 2 * half_window_ps < rep_period_ps,
            "PeakWindows: window must be positive and below rep_period / 2");
    require(first_side_peak >= 1 && last_side_peak >= first_side_peak,
            "PeakWindows: need 1 <= first_side_peak <= last_side_peak");
}

double PeakAreas::side_mean() const
{
    if (side_areas.empty()) throw EstimationError("PeakAreas: no side peaks");
    double sum = 0.0;
    for (double s : side_areas) sum += s;
    return sum / static_cast<double>(side_areas.size());
}

PeakAreas peak_areas(const CorrelationHistogram& hist, const PeakWindows& windows)
{
    windows.validate();
    const std::int64_t reach =
        static_cast<std::int64_t>(windows.last_side_peak) * windows.rep_period_ps +
        windows.half_window_ps;
    if (hist.span_ps < reach) {
        throw ValidationError("peak_areas: histogram span " + std::to_string(hist.span_ps) +
                              " ps is shorter than the outermost side peak window (" +
                              std::to_string(reach) + " ps)");
    }
    // A bin belongs to a peak when its centre lies inside [c - w, c + w).
    auto area = [&](std::int64_t centre) {
        double sum = 0.0;
        for (std::size_t k = 0; k < hist.size(); ++k) {
            const double x = hist.bin_center_ps(k) - static_cast<double>(centre);
            if (x >= -static_cast<double>(windows.half_window_ps) &&
                x < static_cast<double>(windows.half_window_ps)) {
                sum += static_cast<double>(hist.counts[k]);
            }
        }
        return sum;
    };
    PeakAreas out;
    out.half_window_ps = windows.half_window_ps;
    out.center_area = area(0);
    for (int sign : {-1, 1}) {
        for (int k = windows.first_side_peak; k <= windows.last_side_peak; ++k) {
            out.side_areas.push_back(area(sign * k * windows.rep_period_ps));
        }
    }
    return out;
}

Estimate g2_zero(const PeakAreas& areas)
{
    const double mean = areas.side_mean();
    if (!(mean > 0.0)) throw EstimationError("g2_zero: side peaks are empty");
    double side_total = 0.0;
    for (double s : areas.side_areas) side_total += s;
    Estimate g;
    g.value = areas.center_area / mean;
    // Poisson errors on the centre and the pooled side area. An empty centre
    // still carries the one-count resolution of the measurement.
    const double n = static_cast<double>(areas.side_areas.size());
    if (areas.center_area > 0.0) {
        g.error = g.value * std::sqrt(1.0 / areas.center_area + 1.0 / side_total);
    } else {
        g.error = n / side_total;
    }
    return g;
}

Estimate g2_zero(const CorrelationHistogram& hist, const PeakWindows& windows)
{
    return g2_zero(peak_areas(hist, windows));
}

Estimate hom_visibility(const Estimate& g_par, const Estimate& g_perp)
{
    if (!(g_perp.value > 0.0)) throw EstimationError("hom_visibility: g_perp must be > 0");
    const double ratio = g_par.value / g_perp.value;
    Estimate v;
    v.value = 1.0 - ratio;
    v.error = std::hypot(g_par.error / g_perp.value, ratio * g_perp.error / g_perp.value);
    return v;
}

VisibilityCorrection visibility_correction(const std::string& name)
{
    if (name == "standard") {
        return [](double v_raw, double g2, double r) {
            const double t = 1.0 - r;
            const double a = (r * r + t * t) / (2.0 * r * t);
            return a * v_raw + g2 * (1.0 + a);
        };
    }
    if (name == "none") {
        return [](double v_raw, double, double) { return v_raw; };
    }
    throw ValidationError("visibility_correction: unknown strategy '" + name +
                          "' (expected 'standard' or 'none')");
}

CorrectedVisibility corrected_visibility(double v_raw, double g2, double reflectance,
                                         const VisibilityCorrection& correction)
{
    require(std::isfinite(reflectance) && reflectance > 0.0 && reflectance < 1.0,
            "corrected_visibility: reflectance must lie in (0, 1)");
    require(std::isfinite(v_raw) && v_raw <= 1.0, "corrected_visibility: v_raw must be <= 1");
    require(std::isfinite(g2) && g2 >= 0.0, "corrected_visibility: g2 must be >= 0");
    CorrectedVisibility out;
    out.unclamped = correction(v_raw, g2, reflectance);
    out.clamped = out.unclamped > 1.0;
    out.m = out.clamped ? 1.0 : out.unclamped;
    return out;
}

} // namespace qdsps
