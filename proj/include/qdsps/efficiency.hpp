#pragma once

#include <string>
#include <vector>

// Source-efficiency bookkeeping through a declared optical chain.
namespace qdsps {

struct EfficiencyStage {
    std::string name;
    double transmission = 1.0; ///< in (0, 1]
};

struct EfficiencyBudget {
    std::vector<EfficiencyStage> stages;
    /// Detector correction >= 1. It scales the detected rate up before the
    /// chain division, i.e. eta_e = detected * apd_correction / (rep * chain).
    double apd_correction = 1.0;

    void validate() const;
};

struct SourceRates {
    double detected_mhz = 0.0;
    double rep_mhz = 80.1;

    void validate() const;
};

/// Product of stage transmissions (the APD correction is not included).
double chain_transmission(const EfficiencyBudget& budget);

double extraction_efficiency(const SourceRates& rates, const EfficiencyBudget& budget);

/// Inverse of extraction_efficiency for the detected rate.
double detected_rate(double eta_e, double rep_mhz, const EfficiencyBudget& budget);

/// Chain transmission needed to map `detected_mhz` onto `eta_e` (APD correction 1).
double required_chain_transmission(double detected_mhz, double rep_mhz, double eta_e);

} // namespace qdsps
