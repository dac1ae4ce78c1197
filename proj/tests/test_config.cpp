#include "lplab/cli_runner.hpp"
#include "lplab/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace lplab;

namespace {

std::string pointer_of(const std::string& text) {
    try {
        (void)Config::parse(text);
    } catch (const ConfigError& e) {
        return e.pointer();
    }
    return "<no error>";
}

const char* kHeader = "# lplab-config v1\n";

}  // namespace

TEST(Config, ParsesTypedValues) {
    const Config c = Config::parse(std::string(kHeader) +
                                   "subcommand = rellich-sweep\n"
                                   "# comment\n\n"
                                   "field.kind = trigonometric\n"
                                   "epsilons = 1, 0.5,0.25\n"
                                   "problems = dirichlet, neumann\n"
                                   "seed = 12\n"
                                   "strict = true\n");
    EXPECT_EQ(c.subcommand(), "rellich-sweep");
    EXPECT_EQ(c.get_list("epsilons", {}), (std::vector<double>{1, 0.5, 0.25}));
    EXPECT_EQ(c.get_names("problems", {}), (std::vector<std::string>{"dirichlet", "neumann"}));
    EXPECT_EQ(c.get_uint("seed", 0), 12u);
    EXPECT_TRUE(c.get_bool("strict", false));
    EXPECT_EQ(c.get_number("eps", 0.125), 0.125);
}

TEST(Config, ErrorsCarryPointers) {
    const std::string h = std::string(kHeader) + "subcommand = cell\n";
    EXPECT_EQ(pointer_of(h + "field.kind = plaid\n"), "/field/kind");
    EXPECT_EQ(pointer_of(h + "epsilons = 1, 0.5, -2\n"), "/epsilons/2");
    EXPECT_EQ(pointer_of(h + "problems = dirichlet, robin\n"), "/problems/1");
    EXPECT_EQ(pointer_of(h + "seed = -1\n"), "/seed");
    EXPECT_EQ(pointer_of(h + "eps = zero\n"), "/eps");
    EXPECT_EQ(pointer_of(h + "bogus.key = 1\n"), "/bogus/key");
    EXPECT_EQ(pointer_of(h + "eps = 1\neps = 2\n"), "/eps");
    EXPECT_EQ(pointer_of(h + "strict = yes\n"), "/strict");
    EXPECT_EQ(pointer_of("subcommand = cell\n"), "/");
    EXPECT_EQ(pointer_of(std::string(kHeader) + "eps = 1\n"), "/subcommand");
    EXPECT_EQ(pointer_of(h + "no equals sign\n"), "/");
}

TEST(Config, HashIgnoresOrderAndComments) {
    const Config a = Config::parse(std::string(kHeader) + "subcommand = cell\nfield.kind = layered\n");
    const Config b = Config::parse(std::string(kHeader) + "# x\nfield.kind = layered\n  subcommand = cell  \n");
    EXPECT_EQ(a.canonical(), b.canonical());
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash_hex().size(), 16u);
    Config c = a;
    c.set("seed", "3");
    EXPECT_NE(c.hash(), a.hash());
    EXPECT_THROW(c.set("seed", "x"), ConfigError);
}

TEST(Config, PointerAndSchema) {
    EXPECT_EQ(Config::pointer("tol.a0"), "/tol/a0");
    const auto keys = Config::schema_keys();
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
    EXPECT_NE(std::find(keys.begin(), keys.end(), "subcommand"), keys.end());
}

TEST(Config, FormatDouble) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    const double v = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Runner, CellRunIsDeterministicAndHashed) {
    const auto dir = std::filesystem::temp_directory_path() / "lplab_runner_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const Config cfg = Config::parse(std::string(kHeader) + "subcommand = cell\nfield.kind = layered\n");
    RunOptions o;
    o.out_dir = dir.string();
    o.echo = false;
    auto read = [&](const std::string& name) {
        std::ifstream in(dir / name);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const RunResult r1 = run(cfg, o);
    const std::string first = read("cell.csv");
    const RunResult r2 = run(cfg, o);
    EXPECT_EQ(r1.exit_code, 0);
    EXPECT_EQ(first, read("cell.csv"));
    EXPECT_EQ(r1.summary, r2.summary);
    for (const auto& a : r1.assertions) EXPECT_TRUE(a.passed) << a.name << ": " << a.detail;
    std::istringstream rows(first);
    std::string line;
    std::getline(rows, line);
    EXPECT_EQ(line.rfind("config_hash,", 0), 0u);
    while (std::getline(rows, line)) EXPECT_EQ(line.rfind(cfg.hash_hex() + ",", 0), 0u) << line;
    std::filesystem::remove_all(dir);
}
