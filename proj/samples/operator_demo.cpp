// (-Δ)^s of the Gaussian e^{-π|x|²} in d = 1: principal-value quadrature next to the FFT route.
#include <cstdio>

#include "fraclab/fraclab.hpp"

using namespace fraclab;

int main() {
  for (double s : {0.2, 0.5, 0.8}) {
    const FracParams p = FracParams::operator_only(1, s);
    const ScalarField g = fields::gaussian(1);
    const SpectralResult spec = spectral_eval(g, PeriodicGrid{1, 8192, 400.0}, s);
    std::printf("s = %.1f\n%8s %18s %18s %10s\n", s, "x", "pv", "spectral", "est err");
    for (double x : {0.0, 0.25, 0.5, 1.0, 2.0}) {
      const auto r = pv_eval(g, Point{x}, p);
      std::printf("%8.2f %18.12f %18.12f %10.1e\n", x, r.value, spec.at(Point{x}), r.error_estimate);
    }
  }
}
