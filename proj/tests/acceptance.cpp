// Acceptance suite: runs every shipped criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code 0 only if all pass.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "polyma/harness.hpp"

using namespace polyma;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

struct PresetRun {
    ResultDocument doc;
    bool ok = false;
    double seconds = 0;
    std::string detail;
};

PresetRun run(const std::string& name) {
    PresetRun out;
    auto t0 = Clock::now();
    try {
        out.doc = run_preset(name);
        out.ok = out.doc.all_pass();
        if (!out.ok) {
            for (const auto& v : out.doc.verdicts)
                if (!v.pass)
                    out.detail += " " + name + ":" + v.name + "=" + std::to_string(v.value);
        }
    } catch (const std::exception& e) {
        out.ok = false;
        out.detail = std::string(" exception: ") + e.what();
    }
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

void criterion(int number, const std::string& label, bool pass, double seconds,
               const std::string& detail = "") {
    std::printf("%s criterion-%d: %s (%.1f s)%s\n", pass ? "PASS" : "FAIL", number, label.c_str(),
                seconds, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

}  // namespace

int main() {
    // 1. exact-quadratic oracle on the h-ladder, max nodal error <= 5 h^2, < 60 s
    {
        PresetRun r = run("square-exact-quadratic");
        criterion(1, "exact quadratic ladder on the unit square",
                  r.ok && r.seconds < 60.0, r.seconds, r.detail);
    }
    // 2. quarter-plane sandwich: u <= |x|^2/2 + x1 x2 / 2 + 2h, one grid, < 120 s
    {
        PresetRun r = run("quarterplane-liouville");
        criterion(2, "quarter-plane cone solution under the mixed quadratic",
                  r.ok && r.seconds < 120.0, r.seconds, r.detail);
    }
    // 3. pinned conic solve: v(p0) = 0 +- 1e-3 and a dip below the model quadratic
    {
        PresetRun r = run("conic-pinned");
        criterion(3, "pinned conic solution exhibits the non-uniqueness branch", r.ok, r.seconds,
                  r.detail);
    }
    // 4. corner trichotomy at h = 1/128
    {
        PresetRun a = run("corner-trichotomy-eps0");
        PresetRun b = run("corner-trichotomy-epsneg");
        PresetRun c = run("corner-trichotomy-epspos");
        criterion(4, "corner trichotomy (sub-solution / big root / no C2 extension)",
                  a.ok && b.ok && c.ok, a.seconds + b.seconds + c.seconds,
                  a.detail + b.detail + c.detail);
    }
    // 5. eigenvalue table: 4 exact, 6 and 12 within one percent, < 120 s
    {
        PresetRun a = run("arc-quarter");
        PresetRun b = run("quarterspace-eigen");
        PresetRun c = run("octant-eigen");
        double secs = a.seconds + b.seconds + c.seconds;
        criterion(5, "spherical cross-section eigenvalue table",
                  a.ok && b.ok && c.ok && secs < 120.0, secs, a.detail + b.detail + c.detail);
    }
    // 6. geometry predicates, corner angles, and the invariance properties
    {
        PresetRun a = run("geometry-suite");
        PresetRun b = run("normalize-invariance");
        criterion(6, "simple/simplicial predicates, corner angles, invariances",
                  a.ok && b.ok, a.seconds + b.seconds, a.detail + b.detail);
    }
    // 7. construction certificates
    {
        PresetRun a = run("vertex-bump");
        PresetRun b = run("cube-subsolution");
        PresetRun c = run("counterexample-rhs");
        PresetRun d = run("h-profile");
        criterion(7, "construction certificates (bump, cube scaffold, dyadic data, h profile)",
                  a.ok && b.ok && c.ok && d.ok, a.seconds + b.seconds + c.seconds + d.seconds,
                  a.detail + b.detail + c.detail + d.detail);
    }
    // 8. edge-expansion machinery: oracle fit, unperturbed and perturbed wedge solves
    {
        PresetRun a = run("wedge-oracle");
        PresetRun b = run("wedge-unperturbed");
        PresetRun c = run("wedge-perturbed");
        double secs = a.seconds + b.seconds + c.seconds;
        bool node_budget = true;
        for (const PresetRun* p : {&b, &c}) {
            if (p->doc.report.contains("solve")) {
                long nodes = p->doc.report["solve"]["interior_nodes"].get<long>();
                node_budget = node_budget && nodes <= 49L * 49 * 49;
            }
        }
        criterion(8, "edge-expansion coefficient extraction",
                  a.ok && b.ok && c.ok && node_budget && secs < 900.0, secs,
                  a.detail + b.detail + c.detail + (node_budget ? "" : " node budget exceeded"));
    }
    // 9. interpolation inequality on 100 polynomial samples, zero violations
    {
        PresetRun r = run("interpolation-suite");
        criterion(9, "interpolation inequality bounds", r.ok, r.seconds, r.detail);
    }
    // 10. discrete comparison on 50 randomized pairs + bounded-hessian witness
    {
        PresetRun a = run("comparison-suite");
        PresetRun b = run("c11-witness");
        criterion(10, "discrete comparison and bounded-hessian witness", a.ok && b.ok,
                  a.seconds + b.seconds, a.detail + b.detail);
    }

    std::printf("%s: %d/10 criteria pass\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                10 - failures);
    return failures == 0 ? 0 : 1;
}
