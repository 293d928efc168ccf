// Acceptance runner: executes the committed experiment configs behind each
// criterion and prints one PASS/FAIL line per criterion.
#include "ssl/lab.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace lab = ssl::lab;

namespace {

const std::map<int, std::vector<std::string>>& criteria() {
    static const std::map<int, std::vector<std::string>> m{
        {1, {"ground-state"}},
        {2, {"zero-modes"}},
        {3, {"spectrum"}},
        {4, {"gap-check"}},
        {5, {"evolve"}},
        {6, {"modulate"}},
        {7, {"shoot"}},
        {8, {"shoot", "manifold-sample"}},
        {9, {"scatter"}},
        {10, {"resolvent-sweep", "strichartz", "kernel-compare"}},
    };
    return m;
}

std::string describe(const lab::Check& c) {
    std::ostringstream os;
    os << c.name << " = " << c.value << ' ' << c.relation << ' ' << c.threshold;
    if (c.relation == "in") os << ".." << c.upper;
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    std::string config_dir = SSL_CONFIG_DIR;
    std::string out = SSL_ACCEPTANCE_OUT;
    int threads = 0;
    app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
    app.add_option("--configs", config_dir, "directory with <experiment>.json");
    app.add_option("--out", out, "output directory");
    app.add_option("--threads", threads, "worker threads");
    CLI11_PARSE(app, argc, argv);

    std::map<std::string, lab::RunManifest> done;
    bool all = true;
    for (const auto& [k, experiments] : criteria()) {
        if (only && k != only) continue;
        bool pass = true;
        int total = 0;
        std::vector<std::string> failed;
        for (const auto& e : experiments) {
            if (!done.count(e)) {
                try {
                    auto cfg = lab::load_config(config_dir + "/" + e + ".json", e);
                    cfg.output_dir = out;
                    done.emplace(e, lab::run(cfg, lab::resolve_threads(threads)));
                } catch (const std::exception& ex) {
                    lab::RunManifest m;
                    m.failed_stage = "config";
                    m.error = ex.what();
                    done.emplace(e, m);
                }
            }
            const auto& m = done.at(e);
            if (!m.failed_stage.empty()) {
                pass = false;
                failed.push_back(e + " stage '" + m.failed_stage + "': " + m.error);
            }
            for (const auto& c : m.checks) {
                if (c.criterion != k) continue;
                std::fprintf(stderr, "  [%s] %-4s %s%s\n", e.c_str(), c.passed ? "ok" : "FAIL",
                             c.asserted ? "" : "(report) ", describe(c).c_str());
                if (!c.asserted) continue;
                ++total;
                if (!c.passed) {
                    pass = false;
                    failed.push_back(describe(c));
                }
            }
        }
        if (total == 0) pass = false;
        std::string detail;
        for (const auto& f : failed) detail += (detail.empty() ? "" : "; ") + f;
        std::printf("criterion %2d: %s  (%d checks%s%s)\n", k, pass ? "PASS" : "FAIL", total,
                    detail.empty() ? "" : "; failed: ", detail.c_str());
        std::fflush(stdout);
        all = all && pass;
    }
    return all ? 0 : 1;
}
