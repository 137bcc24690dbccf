#include "qdsps/efficiency.hpp"

#include <cmath>

#include "qdsps/error.hpp"

namespace qdsps {

void EfficiencyBudget::validate() const
{
    for (const auto& s : stages) {
        require(std::isfinite(s.transmission) && s.transmission > 0.0 && s.transmission <= 1.0,
                "EfficiencyBudget: stage '" + s.name + "' transmission must lie in (0, 1]");
    }
    require(std::isfinite(apd_correction) && apd_correction >= 1.0,
            "EfficiencyBudget: apd_correction must be >= 1");
}

void SourceRates::validate() const
{
    require(std::isfinite(detected_mhz) && detected_mhz >= 0.0,
            "SourceRates: detected rate must be >= 0");
    require(std::isfinite(rep_mhz) && rep_mhz > 0.0, "SourceRates: rep rate must be > 0");
}

double chain_transmission(const EfficiencyBudget& budget)
{
    budget.validate();
    double product = 1.0;
    for (const auto& s : budget.stages) product *= s.transmission;
    return product;
}

double extraction_efficiency(const SourceRates& rates, const EfficiencyBudget& budget)
{
    rates.validate();
    const double chain = chain_transmission(budget);
    require(chain > 0.0, "extraction_efficiency: chain transmission is zero");
    return rates.detected_mhz * budget.apd_correction / (rates.rep_mhz * chain);
}

double detected_rate(double eta_e, double rep_mhz, const EfficiencyBudget& budget)
{
    require(std::isfinite(eta_e) && eta_e >= 0.0, "detected_rate: eta_e must be >= 0");
    require(std::isfinite(rep_mhz) && rep_mhz > 0.0, "detected_rate: rep rate must be > 0");
    return eta_e * rep_mhz * chain_transmission(budget) / budget.apd_correction;
}

double required_chain_transmission(double detected_mhz, double rep_mhz, double eta_e)
{
    require(detected_mhz > 0.0 && rep_mhz > 0.0 && eta_e > 0.0,
            "required_chain_transmission: inputs must be > 0");
    const double chain = detected_mhz / (rep_mhz * eta_e);
    require(chain <= 1.0, "required_chain_transmission: implied chain exceeds 1");
    return chain;
}

} // namespace qdsps
