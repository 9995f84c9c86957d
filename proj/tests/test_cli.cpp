#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args)
{
    const std::string cmd = std::string(SIMULATE_EXE) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("srload_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2")
{
    CHECK(run("") == 2);
    CHECK(run("teleport") == 2);
    CHECK(run("rate --samples notanumber") == 2);
}

TEST_CASE("bad configuration exits with 2")
{
    const auto dir = scratch("badcfg");
    {
        std::ofstream f(dir / "bad.json");
        f << R"({"oven": {"power_w": -1}})";
    }
    CHECK(run("rate --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()) == 2);
    CHECK(run("rate --config " + (dir / "missing.json").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("shipped configuration validates")
{
    const auto dir = scratch("print");
    CHECK(run("print-config --config " + std::string(SOURCE_DIR) + "/configs/default.json") == 0);
    fs::remove_all(dir);
}

TEST_CASE("rate writes csv, summary and manifest")
{
    const auto dir = scratch("rate");
    CHECK(run("rate --samples 2000 --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "rate.csv"));
    CHECK(fs::exists(dir / "rate_summary.json"));
    std::ifstream in(dir / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    CHECK(m["command"] == "rate");
    CHECK(m["outputs"].size() == 2);
    fs::remove_all(dir);
}
