// End-to-end acceptance run. Prints one "ACn PASS|FAIL" line per criterion
// and exits nonzero if any criterion fails.
//
//   acceptance --cli <lplab binary> --configs <dir> --golden <dir> --work <dir>
//              [--update-golden] [--only 1,4,11]

#include "lplab/cell_homog.hpp"
#include "lplab/cli_runner.hpp"
#include "lplab/fem_oracle.hpp"

#include <CLI11.hpp>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace lplab;

namespace {

struct Paths {
    std::string cli;
    fs::path configs;
    fs::path golden;
    fs::path work;
    bool update_golden = false;
};

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;
    void fail(const std::string& why) {
        pass = false;
        notes.push_back("FAIL " + why);
    }
    void note(const std::string& s) { notes.push_back(s); }
    void expect(bool ok, const std::string& what) {
        if (ok)
            note("ok   " + what);
        else
            fail(what);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string stem_of(const Config& c) {
    std::string s = c.get_string("output", c.subcommand());
    for (char& ch : s)
        if (ch == '-') ch = '_';
    return s;
}

// Runs a config in-process into work/<name>/ and folds its assertions into `out`.
RunResult run_config(const Paths& p, const std::string& name, Outcome& out) {
    const Config cfg = Config::load((p.configs / (name + ".cfg")).string());
    const fs::path dir = p.work / name;
    fs::create_directories(dir);
    RunOptions o;
    o.out_dir = dir.string();
    o.echo = false;
    RunResult r = run(cfg, o);
    for (const auto& a : r.assertions) out.expect(a.passed, name + ": " + a.name + " (" + a.detail + ")");
    return r;
}

double assertion_value(const RunResult& r, const std::string& name) {
    for (const auto& a : r.assertions)
        if (a.name == name) return std::stod(a.detail.substr(0, a.detail.find(' ')));
    return std::nan("");
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

// Cell-wise comparison: text must match, numbers within 1e-9 relative
// (absolute below one).
bool csv_close(const std::string& a, const std::string& b, std::string& why) {
    const auto ra = parse_csv(a), rb = parse_csv(b);
    if (ra.size() != rb.size()) {
        why = "row count " + std::to_string(ra.size()) + " vs " + std::to_string(rb.size());
        return false;
    }
    for (std::size_t i = 0; i < ra.size(); ++i) {
        if (ra[i].size() != rb[i].size()) {
            why = "column count on row " + std::to_string(i);
            return false;
        }
        for (std::size_t j = 0; j < ra[i].size(); ++j) {
            const std::string &x = ra[i][j], &y = rb[i][j];
            if (x == y) continue;
            char* ex = nullptr;
            char* ey = nullptr;
            const double dx = std::strtod(x.c_str(), &ex), dy = std::strtod(y.c_str(), &ey);
            if (*ex != '\0' || *ey != '\0' || x.empty() || y.empty() ||
                std::abs(dx - dy) > 1e-9 * std::max(1.0, std::abs(dy))) {
                why = "row " + std::to_string(i) + " col " + std::to_string(j) + ": " + x + " vs " + y;
                return false;
            }
        }
    }
    return true;
}

int run_cli(const Paths& p, const std::string& args) {
    const std::string cmd = p.cli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

Outcome ac1(const Paths& p) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    run_config(p, "cell_layered", out);
    run_config(p, "cell_identity", out);
    const double t = seconds_since(t0);

    FieldDescriptor d;
    d.kind = FieldKind::layered;
    auto f = std::make_shared<const CoefficientField>(make_field(d));
    const HomogenizedMatrix h = homogenized_matrix(*f, solve_cell(f));
    const double err = std::max({std::abs(h.a0(0, 0) - std::sqrt(3.0)), std::abs(h.a0(1, 1) - 2.0),
                                 std::abs(h.a0(0, 1)), std::abs(h.a0(1, 0))});
    out.expect(err <= 1e-5, "A0 = diag(sqrt 3, 2), error " + format_double(err));
    out.expect(t < 10.0, "runtime " + format_double(t) + " s < 10 s");
    return out;
}

Outcome ac2(const Paths& p) {
    Outcome out;
    run_config(p, "const_kernel", out);
    return out;
}

Outcome ac3(const Paths& p) {
    Outcome out;
    for (const char* n : {"traces_square_identity", "traces_square_trig", "traces_cube_identity", "traces_cube_trig"})
        run_config(p, n, out);
    return out;
}

Outcome ac4(const Paths& p) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    for (const char* dom : {"square", "cube"})
        for (const char* kind : {"dirichlet", "neumann", "regularity"})
            run_config(p, std::string("solve_") + dom + "_" + kind, out);
    const double t = seconds_since(t0);
    out.expect(t < 120.0, "runtime " + format_double(t) + " s < 120 s");
    return out;
}

Outcome ac5(const Paths& p) {
    Outcome out;
    run_config(p, "solve_corrector", out);
    const fs::path dir = p.work / "ac5";
    fs::create_directories(dir);
    for (const char* kind : {"dirichlet", "neumann", "regularity"}) {
        double prev = INFINITY;
        for (const char* eps : {"0.25", "0.125", "0.0625"}) {
            const Config c = Config::parse(std::string(kConfigHeader) +
                                           "\nsubcommand = solve\nfield.kind = layered\nfield.amplitude = 0.5\n"
                                           "weights = 1, 0.5\nproblem = " + kind + "\neps = " + eps + "\n");
            RunOptions o;
            o.out_dir = dir.string();
            o.echo = false;
            const double e = assertion_value(run(c, o), "interior_error");
            const std::string tag = std::string(kind) + " eps " + eps + ": error " + format_double(e);
            if (prev == INFINITY)
                out.expect(e <= 0.1, tag + " <= 0.1");
            else
                out.expect(e < prev, tag + " < " + format_double(prev));
            prev = e;
        }
    }

    // FEM oracle against w = w_1 + 0.5 w_2 on the unit square
    FieldDescriptor d;
    d.kind = FieldKind::layered;
    d.amplitude = 0.5;
    auto f = std::make_shared<const CoefficientField>(make_field(d));
    auto corr = std::make_shared<const CorrectorField>(solve_cell(f));
    const double eps = 0.25;
    const FieldFunction w = corrector_solution(corr, eps, std::vector<double>{1.0, 0.5});
    FemProblem pb;
    pb.coefficient = [f, eps](const Vec3& x) { return f->eval(x / eps); };
    pb.epsilon = eps;
    pb.dirichlet = [&w](const Vec3& x) { return w.value(x); };
    const FemSolution s = fem_solve(FemGrid::box(2, Vec3(0, 0, 0), Vec3(1, 1, 0), eps / 16), pb);
    double err = 0.0, scale = 0.0;
    for (int i = 1; i < 8; ++i)
        for (int j = 1; j < 8; ++j) {
            const Vec3 x(i / 8.0, j / 8.0, 0.0);
            err = std::max(err, std::abs(s.value(x) - w.value(x)));
            scale = std::max(scale, std::abs(w.value(x)));
        }
    out.expect(err / scale <= 0.02, "FEM vs analytic w, relative " + format_double(err / scale) + " <= 0.02");
    return out;
}

Outcome ac6(const Paths& p) {
    Outcome out;
    run_config(p, "rellich_sweep", out);
    return out;
}

Outcome ac7(const Paths& p) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    run_config(p, "kernel_rates", out);
    const double t = seconds_since(t0);
    out.expect(t < 600.0, "runtime " + format_double(t) + " s < 600 s");
    return out;
}

Outcome ac8(const Paths& p) {
    Outcome out;
    run_config(p, "continuation", out);
    return out;
}

Outcome ac9(const Paths& p) {
    Outcome out;
    run_config(p, "q_identities", out);
    return out;
}

Outcome ac10(const Paths& p) {
    Outcome out;
    run_config(p, "green_disk", out);
    run_config(p, "green_trig", out);
    return out;
}

// Relies on the in-process outputs of the earlier criteria.
Outcome ac11(const Paths& p) {
    Outcome out;
    const std::vector<std::string> per_subcommand{"cell_layered",  "kernel_rates", "solve_square_dirichlet",
                                                  "rellich_sweep", "continuation", "q_identities",
                                                  "green_trig",    "const_kernel", "traces_cube_trig"};
    for (const auto& name : per_subcommand) {
        const fs::path cfg = p.configs / (name + ".cfg");
        const fs::path ref = p.work / name, dir = p.work / ("cli_" + name);
        fs::create_directories(dir);
        const std::string stem = stem_of(Config::load(cfg.string()));
        const int code = run_cli(p, "--config " + cfg.string() + " --out-dir " + dir.string());
        out.expect(code == 0, name + ": cli exit code " + std::to_string(code));
        for (const char* ext : {".csv", ".txt"}) {
            const fs::path a = ref / (stem + ext), b = dir / (stem + ext);
            out.expect(fs::exists(a) && slurp(a) == slurp(b), name + ": " + stem + ext + " byte-identical across runs");
        }
    }

    std::vector<std::string> golden{"cell_layered", "cell_identity", "const_kernel"};
    for (const char* n : {"traces_square_identity", "traces_square_trig", "traces_cube_identity", "traces_cube_trig"})
        golden.emplace_back(n);
    for (const char* dom : {"square", "cube"})
        for (const char* kind : {"dirichlet", "neumann", "regularity"})
            golden.push_back(std::string("solve_") + dom + "_" + kind);
    for (const auto& name : golden) {
        const std::string stem = stem_of(Config::load((p.configs / (name + ".cfg")).string()));
        const std::string produced = slurp(p.work / name / (stem + ".csv"));
        const fs::path g = p.golden / (name + ".csv");
        if (p.update_golden) {
            std::ofstream(g, std::ios::binary) << produced;
            out.note("updated " + g.string());
            continue;
        }
        std::string why;
        const bool ok = fs::exists(g) && csv_close(produced, slurp(g), why);
        out.expect(ok, name + ": golden csv" + (why.empty() ? "" : " (" + why + ")"));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    Paths p;
    std::string only;
    app.add_option("--cli", p.cli, "lplab binary")->required();
    app.add_option("--configs", p.configs, "config directory")->required();
    app.add_option("--golden", p.golden, "golden csv directory")->required();
    app.add_option("--work", p.work, "scratch directory")->required();
    app.add_flag("--update-golden", p.update_golden, "rewrite the golden csv files");
    app.add_option("--only", only, "comma separated criterion numbers");
    CLI11_PARSE(app, argc, argv);

    std::set<int> selected;
    std::stringstream ss(only);
    for (std::string item; std::getline(ss, item, ',');) selected.insert(std::stoi(item));
    fs::remove_all(p.work);
    fs::create_directories(p.work);

    const std::vector<std::function<Outcome(const Paths&)>> criteria{ac1, ac2, ac3, ac4,  ac5, ac6,
                                                                     ac7, ac8, ac9, ac10, ac11};
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(n)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i](p);
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        for (const auto& note : o.notes) std::cout << "  AC" << n << " " << note << "\n";
        std::printf("AC%d %s (%.1f s)\n", n, o.pass ? "PASS" : "FAIL", seconds_since(t0));
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
