// Stroboscopic sections of the forced Duffing oscillator with an uncertain
// stiffness, expanded to first order.  Prints the first few section points
// of the mean and fluctuation coefficient planes.

#include <cstdio>

#include "pcdyn/analysis.hpp"
#include "pcdyn/models.hpp"

int main() {
    using namespace pcdyn;

    const ModelSpec model = make_model("duffing_forced");
    const GalerkinSystem sys = expand_model(model, 1);
    const std::vector<double> X0 = expanded_initial(model, sys);

    IntegratorConfig cfg;
    cfg.rtol = 1e-8;
    cfg.atol = 1e-10;

    const PoincareSection section = poincare(sys, cfg, X0, /*omega=*/1.0, /*phase=*/0.0,
                                             /*n_points=*/200);

    std::printf("%10s  %12s %12s  %12s %12s\n", "t", "q0", "p0", "q1", "p1");
    for (std::size_t n = 0; n < section.times.size(); n += 20) {
        const auto& X = section.points[n];
        std::printf("%10.2f  %12.6f %12.6f  %12.6f %12.6f\n", section.times[n],
                    X[static_cast<std::size_t>(sys.flat_index(0, 0))],
                    X[static_cast<std::size_t>(sys.flat_index(1, 0))],
                    X[static_cast<std::size_t>(sys.flat_index(0, 1))],
                    X[static_cast<std::size_t>(sys.flat_index(1, 1))]);
    }
    std::printf("%zu section points, %ld rhs evaluations\n", section.times.size(),
                section.n_rhs_evaluations);
    return 0;
}
