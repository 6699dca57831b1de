// Command-line front end: runs experiments from config documents or the named
// presets, and writes result directories (config copy, summary.json, CSV series).
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "polyma/harness.hpp"

using namespace polyma;

namespace {

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("InconsistentInput", "cannot open config file " + path);
    Json j;
    in >> j;
    return j;
}

int finish(const ResultDocument& doc, const std::string& out_dir, bool quiet = false) {
    if (!out_dir.empty()) write_result(doc, out_dir);
    if (!quiet) {
        for (const auto& v : doc.verdicts)
            std::cout << (v.pass ? "PASS " : "FAIL ") << doc.id << ":" << v.name
                      << "  value=" << v.value << "  threshold=" << v.threshold
                      << (v.note.empty() ? "" : "  [" + v.note + "]") << "\n";
        std::cout << doc.id << ": " << (doc.all_pass() ? "all verdicts pass" : "FAILURES")
                  << "  (" << doc.wall_seconds << " s)\n";
    }
    return doc.all_pass() ? 0 : 1;
}

Json config_with_overrides(const CLI::App* cmd, const std::string& kind) {
    Json cfg;
    auto* copt = cmd->get_option("--config");
    if (copt->count()) {
        cfg = load_config(copt->as<std::string>());
    } else {
        auto* popt = cmd->get_option("--preset");
        if (!popt->count())
            fail("InconsistentInput", "provide --config or --preset");
        cfg = preset_config(popt->as<std::string>());
    }
    if (!kind.empty() && cfg.value("kind", "") != kind)
        fail("InconsistentInput",
             "config kind '" + cfg.value("kind", "") + "' does not match the subcommand");
    auto* gopt = cmd->get_option("--grid-h");
    if (gopt->count()) cfg["grid"] = Json{{"h", gopt->as<double>()}};
    return cfg;
}

void add_common(CLI::App* cmd, std::string& out_dir) {
    cmd->add_option("--config", "path to an experiment config document");
    cmd->add_option("--preset", "name of a shipped preset");
    cmd->add_option("--grid-h", "override the grid spacing");
    cmd->add_option("--out", out_dir, "directory for the result document");
    cmd->add_option("--threads", "worker threads (experiments are single-owner; accepted for compatibility)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale laboratory for Dirichlet Monge-Ampere problems on polytopes"};
    app.require_subcommand(1);
    std::string out_dir;

    auto* solve = app.add_subcommand("solve", "solve det D^2 u = f with Dirichlet data");
    add_common(solve, out_dir);
    auto* corner = app.add_subcommand("analyze-corner", "corner dichotomy extraction");
    add_common(corner, out_dir);
    auto* edge = app.add_subcommand("analyze-edge", "edge expansion coefficient fit");
    add_common(edge, out_dir);
    auto* cond = app.add_subcommand("check-conditions", "boundary-data condition report");
    add_common(cond, out_dir);
    auto* eigen = app.add_subcommand("eigen", "spherical cross-section eigenvalues");
    add_common(eigen, out_dir);
    auto* construct = app.add_subcommand("construct", "explicit barrier constructions");
    add_common(construct, out_dir);
    auto* counter = app.add_subcommand("counterexample", "dyadic right-hand-side profiles");
    add_common(counter, out_dir);
    auto* runp = app.add_subcommand("run-preset", "run a named preset");
    add_common(runp, out_dir);
    auto* listp = app.add_subcommand("list-presets", "list shipped presets");

    try {
        app.parse(argc, argv);

        if (listp->parsed()) {
            for (const auto& name : list_presets())
                std::cout << name << "  -  " << preset_description(name) << "\n";
            return 0;
        }
        if (runp->parsed()) {
            auto* popt = runp->get_option("--preset");
            auto* copt = runp->get_option("--config");
            Json cfg = popt->count() ? preset_config(popt->as<std::string>())
                                     : load_config(copt->as<std::string>());
            return finish(run_experiment(cfg), out_dir);
        }
        const std::vector<std::pair<CLI::App*, std::string>> table = {
            {solve, ""},          {corner, "corner"},        {edge, "edge-fit"},
            {cond, "conditions"}, {eigen, "eigen"},          {construct, ""},
            {counter, "counterexample"}};
        for (const auto& [cmd, kind] : table)
            if (cmd->parsed()) return finish(run_experiment(config_with_overrides(cmd, kind)), out_dir);
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
