#include <gtest/gtest.h>

#include "evimacs/cli.hpp"
#include "evimacs/decomposition.hpp"
#include "evimacs/lowthrust.hpp"

using namespace evimacs;

// Desk-scale robust low-thrust runs separate into launch windows: at least
// one of five seeds leaves two or more clusters of departure epochs in the
// archive, with gaps above a tenth of the departure range.
TEST(LowThrustRuns, ArchiveSplitsIntoLaunchWindows) {
    const auto setup = cli::build_setup("lowthrust", nlohmann::json::object());
    const auto bounds = lowthrust::solution_bounds();
    const double gap = 0.1 * bounds[1].width();
    std::size_t best = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = setup.engine;
        c.seed = seed;
        const auto r = macs::Engine(setup.problem, c).run();
        std::vector<double> departures;
        for (const auto& e : r.archive.entries()) departures.push_back(e.decision[1]);
        best = std::max(best, decomposition::cluster_1d(departures, gap).size());
    }
    EXPECT_GE(best, 2u);
}
