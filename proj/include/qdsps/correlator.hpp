#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qdsps/photon_stream.hpp"

// Start-multistop coincidence histograms and the pulsed-source estimators
// built on them.
namespace qdsps {

/// Histogram of delays t_b - t_a over [-span, span). Bin k covers
/// [-span + k * bin_width, -span + (k + 1) * bin_width).
struct CorrelationHistogram {
    std::int64_t bin_width_ps = 0;
    std::int64_t span_ps = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t total_pairs = 0;

    std::size_t size() const { return counts.size(); }
    double bin_center_ps(std::size_t k) const
    {
        return static_cast<double>(-span_ps) + (static_cast<double>(k) + 0.5) * bin_width_ps;
    }
    CorrelationHistogram& operator+=(const CorrelationHistogram& other);
};

/// Timestamps of one channel, in stream order.
std::vector<std::int64_t> channel_times(const TimeTagStream& stream, std::uint8_t channel);

/// Sliding-window correlation, O(n + m + pairs). Inputs must be sorted;
/// span must be a positive multiple of bin_width.
CorrelationHistogram correlate(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                               std::int64_t bin_width_ps, std::int64_t span_ps);

CorrelationHistogram correlate(const TimeTagStream& a, const TimeTagStream& b,
                               std::int64_t bin_width_ps, std::int64_t span_ps);

/// Same result as `correlate`, with `a` split into `chunks` contiguous pieces
/// processed concurrently and the partial histograms summed.
CorrelationHistogram correlate_chunked(std::span<const std::int64_t> a,
                                       std::span<const std::int64_t> b,
                                       std::int64_t bin_width_ps, std::int64_t span_ps,
                                       unsigned chunks);

struct PeakWindows {
    std::int64_t rep_period_ps = 12480;
    std::int64_t half_window_ps = 3120; ///< rep / 4 by default
    int first_side_peak = 2;            ///< peaks +-1 are skipped
    int last_side_peak = 6;

    static PeakWindows for_period(std::int64_t rep_ps) { return {rep_ps, rep_ps / 4, 2, 6}; }
    void validate() const;
};

struct PeakAreas {
    double center_area = 0.0;
    std::vector<double> side_areas; ///< order: -first..-last, +first..+last
    std::int64_t half_window_ps = 0;

    double side_mean() const;
};

PeakAreas peak_areas(const CorrelationHistogram& hist, const PeakWindows& windows);

struct Estimate {
    double value = 0.0;
    double error = 0.0; ///< 1 sigma, Poisson propagated
};

/// Zero-delay peak area over the mean far side peak.
Estimate g2_zero(const PeakAreas& areas);
Estimate g2_zero(const CorrelationHistogram& hist, const PeakWindows& windows);

/// V_raw = 1 - g_par / g_perp.
Estimate hom_visibility(const Estimate& g_par, const Estimate& g_perp);
inline Estimate hom_visibility(double g_par, double g_perp)
{
    return hom_visibility(Estimate{g_par, 0.0}, Estimate{g_perp, 0.0});
}

/// Maps (v_raw, g2, reflectance) to a two-photon overlap.
using VisibilityCorrection = std::function<double(double v_raw, double g2, double reflectance)>;

/// "standard": M = a v_raw + g2 (1 + a) with a = (R^2 + T^2) / (2RT).
/// "none": M = v_raw. Unknown names raise ValidationError.
VisibilityCorrection visibility_correction(const std::string& name);

struct CorrectedVisibility {
    double m = 0.0;
    double unclamped = 0.0;
    bool clamped = false; ///< set when the correction exceeded 1
};

CorrectedVisibility corrected_visibility(double v_raw, double g2, double reflectance,
                                         const VisibilityCorrection& correction =
                                             visibility_correction("standard"));

} // namespace qdsps
