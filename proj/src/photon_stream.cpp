#include "qdsps/photon_stream.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "qdsps/error.hpp"
#include "qdsps/rng.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

namespace {

constexpr std::uint64_t kBlockPulses = 1 << 15;
constexpr std::uint64_t kEmissionSalt = 0x5eed0001ULL;
constexpr std::uint64_t kRoutingSalt = 0x5eed0002ULL;

enum class Arm : std::uint8_t { short_arm, long_arm };

struct Photon {
    double offset_ps; // relative to the pulse centre
    bool source;
    Arm arm;
};

// Photons created by pulse k. Keyed on the pulse index only, so any pulse can
// be regenerated independently of block boundaries and thread count.
void emit_pulse(const StreamConfig& cfg, std::uint64_t k, std::vector<Photon>& out)
{
    out.clear();
    Rng rng(derive_seed(cfg.seed ^ kEmissionSalt, k));
    const double u = rng.uniform();
    const int n_source = u < cfg.p_emit ? 1 : (u < cfg.p_emit + cfg.p_reexc ? 2 : 0);
    double t = 0.0;
    for (int i = 0; i < n_source; ++i) {
        // A re-excited emitter emits its second photon one lifetime-distributed
        // interval after the first.
        t += rng.exponential(cfg.lifetime_ps);
        out.push_back({t, true, Arm::short_arm});
    }
    const unsigned n_leak = rng.poisson(cfg.leak_mean);
    const double sigma = cfg.pulse_fwhm_ps / units::gaussian_fwhm_per_sigma;
    for (unsigned i = 0; i < n_leak; ++i) out.push_back({sigma * rng.normal(), false, Arm::short_arm});
    for (Photon& p : out) p.arm = rng.bernoulli(0.5) ? Arm::long_arm : Arm::short_arm;
}

class Detector {
public:
    explicit Detector(const StreamConfig& cfg)
        : eff_(cfg.det_eff), jitter_sigma_(cfg.jitter_fwhm_ps / units::gaussian_fwhm_per_sigma)
    {
    }

    void detect(Rng& rng, std::uint8_t channel, double t_ps, std::vector<TimeTag>& out) const
    {
        if (!rng.bernoulli(eff_[channel])) return;
        if (jitter_sigma_ > 0.0) t_ps += jitter_sigma_ * rng.normal();
        out.push_back({channel, std::max<std::int64_t>(0, std::llround(t_ps))});
    }

private:
    std::array<double, 2> eff_;
    double jitter_sigma_;
};

template <typename BlockFn>
TimeTagStream run_blocks(const StreamConfig& cfg, std::uint64_t n_units, BlockFn&& block_fn)
{
    const std::uint64_t n_blocks = (n_units + kBlockPulses - 1) / kBlockPulses;
    std::vector<std::vector<TimeTag>> blocks(n_blocks);
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, n_blocks)));

    auto worker = [&](unsigned w) {
        for (std::uint64_t b = w; b < n_blocks; b += threads) {
            const std::uint64_t lo = b * kBlockPulses;
            const std::uint64_t hi = std::min(n_units, lo + kBlockPulses);
            block_fn(lo, hi, blocks[b]);
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::future<void>> jobs;
        for (unsigned w = 0; w < threads; ++w) jobs.push_back(std::async(std::launch::async, worker, w));
        for (auto& j : jobs) j.get();
    }

    std::size_t total = 0;
    for (const auto& b : blocks) total += b.size();
    TimeTagStream stream;
    stream.reserve(total);
    for (auto& b : blocks) stream.insert(stream.end(), b.begin(), b.end());
    std::sort(stream.begin(), stream.end(), [](const TimeTag& x, const TimeTag& y) {
        return x.t_ps != y.t_ps ? x.t_ps < y.t_ps : x.channel < y.channel;
    });

    // Non-paralysable dead time per channel.
    if (cfg.dead_time_ps > 0.0) {
        std::array<std::int64_t, 2> last{INT64_MIN / 2, INT64_MIN / 2};
        const auto dead = static_cast<std::int64_t>(std::llround(cfg.dead_time_ps));
        std::size_t keep = 0;
        for (const TimeTag& tag : stream) {
            if (tag.t_ps - last[tag.channel] >= dead) {
                last[tag.channel] = tag.t_ps;
                stream[keep++] = tag;
            }
        }
        stream.resize(keep);
    }
    return stream;
}

} // namespace

void StreamConfig::validate() const
{
    auto prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
    require(std::isfinite(rep_period_ns) && rep_period_ns > 0.0,
            "StreamConfig: rep_period_ns must be > 0");
    require(prob(p_emit) && prob(p_reexc), "StreamConfig: probabilities must lie in [0, 1]");
    require(p_emit + p_reexc <= 1.0 + 1e-12, "StreamConfig: p_emit + p_reexc must be <= 1");
    require(std::isfinite(leak_mean) && leak_mean >= 0.0, "StreamConfig: leak_mean must be >= 0");
    require(std::isfinite(lifetime_ps) && lifetime_ps > 0.0, "StreamConfig: lifetime_ps must be > 0");
    require(std::isfinite(pulse_fwhm_ps) && pulse_fwhm_ps >= 0.0,
            "StreamConfig: pulse_fwhm_ps must be >= 0");
    require(std::isfinite(jitter_fwhm_ps) && jitter_fwhm_ps >= 0.0,
            "StreamConfig: jitter_fwhm_ps must be >= 0");
    require(std::isfinite(dead_time_ps) && dead_time_ps >= 0.0,
            "StreamConfig: dead_time_ps must be >= 0");
    require(prob(det_eff[0]) && prob(det_eff[1]), "StreamConfig: det_eff must lie in [0, 1]");
    require(rep_period_ps() > 0, "StreamConfig: rep period below 1 ps");
}

std::int64_t StreamConfig::rep_period_ps() const
{
    return std::llround(rep_period_ns * units::ps_per_ns);
}

void HomConfig::validate() const
{
    require(std::isfinite(bs_reflectance) && bs_reflectance > 0.0 && bs_reflectance < 1.0,
            "HomConfig: bs_reflectance must lie in (0, 1)");
    require(std::isfinite(overlap) && overlap >= 0.0 && overlap <= 1.0,
            "HomConfig: overlap must lie in [0, 1]");
}

TimeTagStream generate_hbt_stream(const StreamConfig& cfg)
{
    cfg.validate();
    const std::int64_t rep = cfg.rep_period_ps();
    const Detector detector(cfg);
    return run_blocks(cfg, cfg.n_pulses, [&](std::uint64_t lo, std::uint64_t hi, std::vector<TimeTag>& out) {
        std::vector<Photon> photons;
        for (std::uint64_t k = lo; k < hi; ++k) {
            emit_pulse(cfg, k, photons);
            if (photons.empty()) continue;
            Rng rng(derive_seed(cfg.seed ^ kRoutingSalt, k));
            const double t0 = static_cast<double>(static_cast<std::int64_t>(k + 1) * rep);
            for (const Photon& p : photons) {
                const auto channel = static_cast<std::uint8_t>(rng.bernoulli(0.5) ? 1 : 0);
                detector.detect(rng, channel, t0 + p.offset_ps, out);
            }
        }
    });
}

TimeTagStream generate_hom_stream(const StreamConfig& cfg, const HomConfig& hom)
{
    cfg.validate();
    hom.validate();
    const std::int64_t rep = cfg.rep_period_ps();
    const double r = hom.bs_reflectance;
    const double t = 1.0 - r;
    const double v = hom.effective_overlap();
    const double p_coinc_pair = r * r + t * t - 2.0 * r * t * v;
    const Detector detector(cfg);
    // Slot j collects the short-arm photons of pulse j and the long-arm
    // photons of pulse j - 1; slot n_pulses holds only the last long-arm ones.
    const std::uint64_t n_slots = cfg.n_pulses == 0 ? 0 : cfg.n_pulses + 1;

    return run_blocks(cfg, n_slots, [&](std::uint64_t lo, std::uint64_t hi, std::vector<TimeTag>& out) {
        std::vector<Photon> prev, cur;
        if (lo > 0) emit_pulse(cfg, lo - 1, prev);
        std::vector<double> in_a, in_b, leak_a, leak_b;
        for (std::uint64_t j = lo; j < hi; ++j) {
            if (j < cfg.n_pulses) {
                emit_pulse(cfg, j, cur);
            } else {
                cur.clear();
            }
            in_a.clear();
            in_b.clear();
            leak_a.clear();
            leak_b.clear();
            for (const Photon& p : cur) {
                if (p.arm != Arm::short_arm) continue;
                (p.source ? in_a : leak_a).push_back(p.offset_ps);
            }
            for (const Photon& p : prev) {
                if (p.arm != Arm::long_arm) continue;
                (p.source ? in_b : leak_b).push_back(p.offset_ps);
            }
            std::swap(prev, cur);
            if (in_a.empty() && in_b.empty() && leak_a.empty() && leak_b.empty()) continue;

            Rng rng(derive_seed(cfg.seed ^ kRoutingSalt, j));
            const double t0 = static_cast<double>(static_cast<std::int64_t>(j + 1) * rep);
            auto route_a = [&](double off) {
                detector.detect(rng, rng.bernoulli(r) ? 0 : 1, t0 + off, out);
            };
            auto route_b = [&](double off) {
                detector.detect(rng, rng.bernoulli(t) ? 0 : 1, t0 + off, out);
            };

            if (in_a.size() == 1 && in_b.size() == 1) {
                std::uint8_t port_a = 0, port_b = 0;
                if (rng.bernoulli(p_coinc_pair)) {
                    // One photon per output port.
                    const bool a_reflected = rng.bernoulli(r * r / (r * r + t * t));
                    port_a = a_reflected ? 0 : 1;
                    port_b = a_reflected ? 1 : 0;
                } else {
                    port_a = port_b = rng.bernoulli(0.5) ? 0 : 1;
                }
                detector.detect(rng, port_a, t0 + in_a[0], out);
                detector.detect(rng, port_b, t0 + in_b[0], out);
            } else {
                for (double off : in_a) route_a(off);
                for (double off : in_b) route_b(off);
            }
            for (double off : leak_a) route_a(off);
            for (double off : leak_b) route_b(off);
        }
    });
}

double analytic_g2_oracle(const StreamConfig& cfg)
{
    cfg.validate();
    const double s = cfg.signal_mean();
    const double l = cfg.leak_mean;
    if (!(s + l > 0.0)) throw EstimationError("analytic_g2_oracle: no photons (s + leak = 0)");
    return (2.0 * cfg.p_reexc + 2.0 * s * l + l * l) / ((s + l) * (s + l));
}

HomPrediction analytic_hom_oracle(const StreamConfig& cfg, const HomConfig& hom)
{
    hom.validate();
    const double g2 = analytic_g2_oracle(cfg);
    const double r = hom.bs_reflectance;
    const double t = 1.0 - r;
    const double s = cfg.signal_mean();
    const double l = cfg.leak_mean;
    const double single = cfg.p_emit + cfg.p_reexc;
    const double interference = 2.0 * r * t * single * single / ((s + l) * (s + l));
    HomPrediction out;
    out.g_perp = r * r + t * t + 2.0 * r * t * g2;
    out.g_par = out.g_perp - interference * hom.overlap;
    out.v_raw = 1.0 - out.g_par / out.g_perp;
    return out;
}

double leak_for_target_g2(double p_emit, double p_reexc, double target_g2)
{
    require(target_g2 >= 0.0 && target_g2 < 1.0, "leak_for_target_g2: target must lie in [0, 1)");
    const double s = p_emit + 2.0 * p_reexc;
    require(s > 0.0, "leak_for_target_g2: no source photons");
    // (1 - g) l^2 + 2 s (1 - g) l + 2 p_reexc - g s^2 = 0
    const double disc = s * s - (2.0 * p_reexc - target_g2 * s * s) / (1.0 - target_g2);
    if (disc < 0.0 || 2.0 * p_reexc > target_g2 * s * s * (1.0 + 1e-12)) {
        throw ValidationError("leak_for_target_g2: target below the re-excitation floor");
    }
    return std::max(0.0, -s + std::sqrt(disc));
}

double reflectance_for_target_visibility(const StreamConfig& cfg, double overlap,
                                         double target_v_raw)
{
    HomConfig hom{0.5, overlap, HomPolarization::parallel};
    auto v_at = [&](double r) {
        hom.bs_reflectance = r;
        return analytic_hom_oracle(cfg, hom).v_raw;
    };
    // V_raw increases monotonically with R on (0, 1/2].
    double lo = 1e-6, hi = 0.5;
    if (!(v_at(lo) <= target_v_raw && target_v_raw <= v_at(hi))) {
        throw ValidationError("reflectance_for_target_visibility: target not reachable");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (v_at(mid) < target_v_raw ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double overlap_from_dephasing(double gamma_rad, double gamma_phi)
{
    require(gamma_rad > 0.0 && gamma_phi >= 0.0, "overlap_from_dephasing: invalid rates");
    return gamma_rad / (gamma_rad + 2.0 * gamma_phi);
}

double dephasing_from_overlap(double gamma_rad, double overlap)
{
    require(gamma_rad > 0.0 && overlap > 0.0 && overlap <= 1.0,
            "dephasing_from_overlap: invalid inputs");
    return 0.5 * gamma_rad * (1.0 / overlap - 1.0);
}

} // namespace qdsps
