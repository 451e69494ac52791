// Moving-plane obstruction for u = (1 - |x|²)^4 with f(t) = 1 + t, d = 1, s = 1/4.
// The necessary condition f(u(x0)) = f(u(0)) fails at every x0 != 0, and the
// measured PV stays under the dictionary bound as the fit is refined.
#include <cstdio>

#include "fraclab/fraclab.hpp"

using namespace fraclab;

int main() {
  const FracParams p(1, 0.25);
  const ScalarField u = fields::poly_bump(1, 4.0);
  const auto f = ReactionFunction::affine(1.0, 1.0);

  std::printf("%6s %12s %12s %12s %12s\n", "x0", "residual", "|pv|", "bound", "eps");
  for (double x0 : {0.25, 0.5, 0.75}) {
    const ObstructionReport r = obstruction_chain(u, f, Point{x0}, 32, p);
    std::printf("%6.2f %12.8f %12.4e %12.4e %12.4e%s\n", x0, r.necessary_residual, std::abs(r.measured_pv),
                r.bound_value, r.fit_error_c2, r.bound_holds() ? "" : "  BOUND VIOLATED");
  }

  ObstructionOptions exact;
  exact.reg = 0.0;
  std::printf("\nrefinement at x0 = 0.5\n%6s %12s %12s\n", "n", "eps", "bound");
  for (int n : {8, 16, 32, 64}) {
    const ObstructionReport r = obstruction_chain(u, f, Point{0.5}, n, p, {}, exact);
    std::printf("%6d %12.4e %12.4e\n", n, r.fit_error_c2, r.bound_value);
  }
}
