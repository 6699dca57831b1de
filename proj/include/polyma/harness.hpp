#ifndef POLYMA_HARNESS_HPP
#define POLYMA_HARNESS_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyma/asymptotics.hpp"
#include "polyma/constructions.hpp"
#include "polyma/expression.hpp"
#include "polyma/geometry.hpp"
#include "polyma/normalize.hpp"
#include "polyma/solver.hpp"
#include "polyma/spectral.hpp"
#include "polyma/types.hpp"

namespace polyma {

using Json = nlohmann::json;

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::string to_string() const;
};

/// Everything one experiment produced: config echo, structured report, verdicts
/// against the configured thresholds, and named CSV series for plotting.
struct ResultDocument {
    std::string id;
    Json config_echo;
    Json report;
    std::vector<Verdict> verdicts;
    std::map<std::string, CsvTable> series;
    double wall_seconds = 0.0;

    bool all_pass() const;
    Json to_json() const;
};

/// Executes the experiment described by the config document. Deterministic for a
/// fixed config: iteration orders are fixed and any randomized piece declares its
/// seed in the config.
ResultDocument run_experiment(const Json& config);

/// Extracts a tabular series ("corner-u12-vs-r", "edge-coefficient", "refinement",
/// "eigen-vs-mesh", ...) from a result; SeriesMissing if absent.
CsvTable emit_plot_data(const ResultDocument& result, const std::string& kind);

/// Writes a result directory: config copy, one CSV per series, and summary.json.
void write_result(const ResultDocument& result, const std::string& out_dir);

struct ConditionEntry {
    std::string name;
    bool applicable = false;
    bool pass = false;
    double worst = 0.0;
    Vec worst_point;
    std::string note;
};

struct ConditionReportDoc {
    bool simple = false;
    std::vector<ConditionEntry> entries;
    double eps0_angle = 0.0;
    double eps0_mixed = 0.0;
    bool has_sub = false;
    Json to_json() const;
};

/// Jets sampled on the skeleton for the structured condition verdicts.
struct SkeletonJets {
    std::vector<Vec> points;
    std::vector<Mat> phi_hessians;
    std::vector<double> f_values;
    std::vector<bool> low_skeleton;  ///< point lies on the (n-3)-skeleton part
    bool has_sub = false;
    std::vector<Mat> sub_hessians;
    std::vector<double> sub_det_minus_f;
};

/// Uniform skeleton sampling: vertices always; for n = 3 also edge-interior samples.
SkeletonJets sample_skeleton_jets(const Polytope& P, const std::function<Mat(const Vec&)>& phi_H,
                                  const std::function<double(const Vec&)>& f,
                                  const std::function<Mat(const Vec&)>* sub_H = nullptr,
                                  int per_edge = 33);

/// Structured pass/fail of the boundary-data conditions (compatibility, angle
/// condition, strict angle condition, determinant gap, strict sub-solution angle)
/// with the worst offending point per condition and both margin variants.
ConditionReportDoc condition_report(const Polytope& P, const SkeletonJets& jets,
                                    double tau_strict = 1e-9);

std::vector<std::string> list_presets();
std::string preset_description(const std::string& name);
Json preset_config(const std::string& name);
ResultDocument run_preset(const std::string& name);

}  // namespace polyma

#endif
