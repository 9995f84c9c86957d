#include <doctest.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srload/error.hpp"
#include "srload/experiments.hpp"
#include "srload/constants.hpp"

using namespace srload;

namespace {

SimConfig quick_config()
{
    auto cfg = default_config();
    cfg.mc_samples = 4000;
    cfg.experiments.runs_per_point = 100;
    cfg.experiments.isotope_loads = 200;
    cfg.experiments.shelve_duration = 100;
    return cfg;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("srload_exp_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("format_number round-trips")
{
    for (double v : {0.0, 1.0, -2.5, 1e-300, 6.02214076e23, 0.1 + 0.2}) {
        const auto s = format_number(v);
        double back = 0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
    }
    CHECK(format_number(INFINITY) == "inf");
}

TEST_CASE("expected first-ion time")
{
    const auto cfg = default_config();
    const auto t = expected_time_to_first_ion(cfg.beamline.oven.dissipated_power, 0, cfg);
    REQUIRE(t.has_value());
    CHECK(*t > 5);
    CHECK(*t < 60);
    // 20 GHz off resonance nothing is loaded within the horizon
    CHECK_FALSE(expected_time_to_first_ion(2.0, units::angular(20e9), cfg).has_value());
    // a cold oven never loads
    CHECK_FALSE(expected_time_to_first_ion(0.0, 0, cfg).has_value());
}

TEST_CASE("first-ion time falls with oven power")
{
    const auto cfg = quick_config();
    const std::vector<double> powers{1.6, 2.2, 3.0};
    const auto pts = first_ion_vs_power(cfg, powers);
    REQUIRE(pts.size() == 3);
    for (const auto& p : pts) {
        CHECK(p.n_censored == 0);
        CHECK(p.n_runs == 100);
    }
    CHECK(pts[0].mean_time > pts[1].mean_time);
    CHECK(pts[1].mean_time > pts[2].mean_time);
}

TEST_CASE("censored points report infinity")
{
    auto cfg = quick_config();
    cfg.horizon = 5;
    const std::vector<double> powers{2.0};
    const auto pts = first_ion_vs_power(cfg, powers);
    CHECK(pts[0].n_censored > 0);
    CHECK(std::isinf(pts[0].mean_time));
}

TEST_CASE("line analysis of a synthetic Lorentzian")
{
    std::vector<double> x, t;
    for (int i = -40; i <= 40; ++i) {
        const double d = i * 0.1;
        x.push_back(d);
        t.push_back(10.0 * (1 + 4 * (d - 0.3) * (d - 0.3) / 1.5 / 1.5));
    }
    const auto line = analyze_line(x, t);
    CHECK(line.floor == doctest::Approx(10.0).epsilon(0.01));
    CHECK(line.center == doctest::Approx(0.3));
    CHECK(line.fwhm == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("line analysis with an infinite wing")
{
    const std::vector<double> x{-2, -1, 0, 1, 2};
    const std::vector<double> t{INFINITY, 40, 10, 40, INFINITY};
    const auto line = analyze_line(x, t);
    CHECK(line.floor == 10);
    CHECK(line.fwhm > 1);
    CHECK(line.fwhm < 3);
}

TEST_CASE("run_command writes the expected files")
{
    auto cfg = quick_config();
    cfg.experiments.fig2_powers = {2.0, 3.0};
    const auto dir = scratch("fig2");
    const auto m = run_command("fig2", cfg, dir, {"fig2"});
    CHECK(m.config_hash == config_hash(cfg));
    CHECK(std::filesystem::exists(dir / "fig2.csv"));
    CHECK(std::filesystem::exists(dir / "fig2_summary.json"));
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    std::istringstream csv(slurp(dir / "fig2.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "power_W,mean_time_s,stderr_s,n_runs,n_censored,expected_time_s");
    int rows = 0;
    while (std::getline(csv, line))
        ++rows;
    CHECK(rows == 2);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["seed"] == cfg.master_seed);
    CHECK(manifest["command"] == "fig2");
    std::filesystem::remove_all(dir);
}

TEST_CASE("outputs are reproducible and independent of worker count")
{
    auto cfg = quick_config();
    cfg.experiments.fig3_detunings = {-units::angular(200e6), 0, units::angular(200e6)};
    for (const char* cmd : {"fig3", "rate", "isotopes", "shelve"}) {
        CAPTURE(cmd);
        const std::string name = std::string(cmd) == "fig3" ? "fig3.csv"
                                 : std::string(cmd) == "rate" ? "rate.csv"
                                 : std::string(cmd) == "isotopes" ? "isotopes.csv"
                                                                  : "shelve_trace.csv";
        std::string first;
        for (int workers : {1, 1, 4}) {
            cfg.workers = workers;
            const auto dir = scratch(std::string(cmd) + std::to_string(workers));
            run_command(cmd, cfg, dir);
            const auto text = slurp(dir / name);
            CHECK_FALSE(text.empty());
            if (first.empty())
                first = text;
            else
                CHECK(text == first);
            std::filesystem::remove_all(dir);
        }
    }
}

TEST_CASE("a different seed changes the output")
{
    auto cfg = quick_config();
    const auto a = run_shelve(50, cfg);
    cfg.master_seed += 1;
    const auto b = run_shelve(50, cfg);
    CHECK(a.trace.dark_dwells != b.trace.dark_dwells);
}

TEST_CASE("shelving trace")
{
    auto cfg = quick_config();
    SUBCASE("100 s shows dark periods")
    {
        const auto r = run_shelve(100, cfg);
        CHECK(r.dark.n >= 1);
        bool any_dark = false;
        for (const auto& b : r.trace.bins)
            any_dark = any_dark || !b.bright;
        CHECK(any_dark);
    }
    SUBCASE("no 405 nm light means no dark periods")
    {
        cfg.lasers.beam_405.power = 0;
        const auto r = run_shelve(100, cfg);
        CHECK(r.dark.n == 0);
        for (const auto& b : r.trace.bins)
            CHECK(b.bright);
    }
}

TEST_CASE("isotope command needs enough loads")
{
    auto cfg = quick_config();
    cfg.experiments.isotope_loads = 50;
    CHECK_THROWS_AS(run_command("isotopes", cfg, scratch("few")), ValidationError);
    CHECK_THROWS_AS(run_command("bogus", cfg, scratch("bogus")), ValidationError);
}

TEST_CASE("isotope shares follow abundance and the 461 nm shifts")
{
    const auto cfg = quick_config();
    const auto share = ionization_shares(cfg);
    REQUIRE(share.size() == 3);
    double sum = 0;
    for (double s : share)
        sum += s;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(share[2] > 0.8);
}
