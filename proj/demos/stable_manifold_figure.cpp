// Traces the stable branches of the planar saddle of the damped pendulum,
// shoots them against the line x = 1, and writes a phase portrait with the
// branches, the shooting line and the crossing momenta to figure1.svg.

#include <iostream>

#include "ckam/io.hpp"
#include "ckam/minimizer.hpp"
#include "ckam/model.hpp"

int main() {
    using namespace ckam;
    ContactModel pend = make_pendulum();

    SaddleInfo info = saddle_eigen(pend);
    std::cout << "saddle at (" << info.point[0] << ", " << info.point[1]
              << "), eigenvalues " << info.lambda_unstable << " / "
              << info.lambda_stable << "\n";

    auto branches = saddle_stable_manifold(pend);
    const double x0 = 1.0;
    std::vector<double> ps = shoot_p0(branches, vec1(x0));
    std::cout << "stable-manifold momenta over x = " << x0 << ":";
    for (double p : ps) std::cout << " " << p;
    std::cout << "\n";

    SvgPlot plot;
    plot.x_min = -7.0;
    plot.x_max = 7.0;
    plot.y_min = -8.0;
    plot.y_max = 8.0;
    plot.axes("x", "p");
    plot.polyline(branches.first.samples, "red", 2.5);
    plot.polyline(branches.second.samples, "red", 2.5);
    plot.vline(x0, "blue");
    for (double p : ps)
        if (p >= plot.y_min && p <= plot.y_max) plot.marker(x0, p, "blue");
    plot.write("figure1.svg");
    std::cout << "wrote figure1.svg\n";
    return 0;
}
