#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "advdial/autodiff.hpp"
#include "advdial/parameters.hpp"

namespace advdial {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;
    double rtol = 0.0;

    bool passed() const { return max_rel_err <= rtol; }
};

/// Compares reverse-mode gradients against central finite differences.
///
/// `build` must record a deterministic scalar loss on the given tape
/// (dropout disabled). Elements where both gradients are below 1e-8 in
/// magnitude are skipped; elsewhere the relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|).
inline GradCheckReport check_gradients(const std::function<Tape::NodeId(Tape&)>& build,
                                       ParameterSet& params, double rtol, double step = 1e-5) {
    GradCheckReport report;
    report.rtol = rtol;

    params.zero_gradients();
    {
        Tape t;
        t.backward(build(t));
    }
    std::map<std::string, Tensor> analytic;
    for (auto& [name, e] : params.entries()) analytic.emplace(name, e.grad);
    params.zero_gradients();

    auto loss_at = [&]() {
        Tape t;
        return t.value(build(t))[0];
    };

    for (auto& [name, e] : params.entries()) {
        GradCheckEntry entry;
        entry.name = name;
        const Tensor& ga = analytic.at(name);
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            double saved = e.value[i];
            e.value[i] = saved + step;
            double lp = loss_at();
            e.value[i] = saved - step;
            double lm = loss_at();
            e.value[i] = saved;
            double gn = (lp - lm) / (2.0 * step);
            double scale = std::max(std::fabs(ga[i]), std::fabs(gn));
            if (scale <= 1e-8) continue;
            double rel = std::fabs(ga[i] - gn) / scale;
            if (rel > entry.max_rel_err) {
                entry.max_rel_err = rel;
                entry.worst_index = i;
                entry.analytic = ga[i];
                entry.numeric = gn;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace advdial
