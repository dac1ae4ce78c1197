#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(LPLAB_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("lplab_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const std::string configs = LPLAB_CONFIGS;

}  // namespace

TEST(Cli, RunsAndWritesArtifacts) {
    const fs::path d = scratch("artifacts");
    EXPECT_EQ(run("--config " + configs + "/cell_layered.cfg --out-dir " + d.string()), 0);
    EXPECT_TRUE(fs::exists(d / "cell.csv"));
    EXPECT_TRUE(fs::exists(d / "cell.txt"));
}

TEST(Cli, ByteIdenticalReruns) {
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
    const std::string cfg = "--config " + configs + "/const_kernel.cfg --out-dir ";
    ASSERT_EQ(run(cfg + a.string()), 0);
    ASSERT_EQ(run(cfg + b.string()), 0);
    EXPECT_EQ(slurp(a / "const_kernel.csv"), slurp(b / "const_kernel.csv"));
}

TEST(Cli, SeedOverrideChangesHash) {
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    const std::string cfg = "--config " + configs + "/cell_identity.cfg --out-dir ";
    ASSERT_EQ(run(cfg + a.string()), 0);
    ASSERT_EQ(run(cfg + b.string() + " --seed 99"), 0);
    const std::string x = slurp(a / "cell.csv"), y = slurp(b / "cell.csv");
    const auto second_line = [](const std::string& s) { return s.substr(s.find('\n') + 1, 16); };
    EXPECT_NE(second_line(x), second_line(y));
}

TEST(Cli, UsageErrorsExitWithTwo) {
    const fs::path d = scratch("usage");
    const fs::path bad = d / "bad.cfg";
    std::ofstream(bad) << "# lplab-config v1\nsubcommand = cell\nfield.kind = plaid\n";
    EXPECT_EQ(run("--config " + bad.string() + " --out-dir " + d.string()), 2);
    EXPECT_EQ(run("--config " + configs + "/cell_layered.cfg solve --out-dir " + d.string()), 2);
    EXPECT_NE(run("--out-dir " + d.string()), 0);
    EXPECT_NE(run("--config " + (d / "missing.cfg").string()), 0);
}

TEST(Cli, MatchingSubcommandIsAccepted) {
    const fs::path d = scratch("matching");
    EXPECT_EQ(run("cell --config " + configs + "/cell_identity.cfg --out-dir " + d.string()), 0);
}
