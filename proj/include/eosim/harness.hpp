#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eosim/analysis.hpp"
#include "eosim/constrained.hpp"
#include "eosim/dynamics.hpp"

namespace eosim {

enum class RunMode { gd, gd_unclipped, gf, constrained };

enum class InitKind {
    explicit_point,
    init_region,
    eos_init_region,
    rate_free_region,
    constrained_region
};

// Region whose verification suite applies to a run. `automatic` derives it
// from the init kind; `none` disables region-conditional checks.
enum class Profile {
    automatic,
    none,
    init_region,
    eos_init_region,
    rate_free_region,
    constrained_region
};

// A fully resolved run description. Built by parse_config_* from flat
// `key = value` text (# starts a comment, unknown keys are errors). Required
// keys: lambda1, lambda2, eta, steps, mode, init; explicit inits additionally
// require alpha, beta1, beta2, sampler inits require seed.
struct RunConfig {
    ModelConfig model;
    long steps = 0;
    RunMode mode = RunMode::gd;
    InitKind init = InitKind::init_region;
    Params explicit_init;
    std::uint64_t seed = 0;
    ClipVariant clip_variant = ClipVariant::cap;
    Profile profile = Profile::automatic;
    bool allow_out_of_theory = false;
    std::string out_dir = "out";
    std::string name = "run";  // artifact base name
    std::string preset;        // figure id controlling artifact composition
    bool write_csv = true;
    bool write_svg = true;
    bool write_report = true;
    double product_bound = 1.0;
    double collapse_threshold = 0.1;
    double grad_tol = 1e-10;
    long gf_max_steps = 100000000;
    long gf_sample_stride = 100;
    double converge_eps = 1e-4;
    double converge_delta = 0.1;
    int threads = 0;  // sweep concurrency; 0 = hardware default
    std::vector<double> eta_list;
    std::vector<std::uint64_t> seed_list;

    Profile effective_profile() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Shipped presets, embedded so `--preset` works from any directory. The
// files under presets/ carry identical text.
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);

// Exit codes shared by the library entry points and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;

struct RunArtifacts {
    std::vector<std::string> files;  // paths written, in write order
    int exit_code = kExitOk;
    bool out_of_region = false;  // explicit init failed its profile predicate
    bool diverged = false;
    std::string summary;  // one-paragraph stdout summary
};

// Resolves the init, simulates according to mode, writes the requested
// artifacts (CSV trajectory, SVG figure, verification report) under out_dir
// and returns what happened. Figure presets add their composition on top
// (surrogate overlays, flow-envelope panels, restart curves, sweeps).
RunArtifacts run(const RunConfig& cfg);

// Runs the verification suite applicable to the config and writes
// <name>.report.txt. When `replay_csv` is given, the trajectory is read back
// from that file instead of resimulating blindly: primal columns must match a
// fresh simulation bit-exactly and derived columns must recompute within
// 1e-12, so any tampering fails the report.
struct VerifyOutcome {
    VerificationReport report;
    int exit_code = kExitOk;
    std::string report_path;
};

VerifyOutcome verify(const RunConfig& cfg,
                     const std::optional<std::string>& replay_csv = {});

// Cartesian sweep over eta_list x seed_list (falling back to the scalar
// eta/seed when a list is empty). Cells run concurrently; outputs are
// assembled in input order so scheduling cannot change any byte. Writes
// per-cell trajectory CSVs plus summary.csv and returns its path.
struct SweepResult {
    std::string summary_path;
    std::vector<std::string> cell_paths;
    int exit_code = kExitOk;
};

SweepResult sweep(const RunConfig& cfg);

// ---- serialization helpers (stable byte-for-byte formatting) ----

// Fixed trajectory CSV schema, one row per step:
//   t,alpha,beta1,beta2,loss,l1,l2,lhat,sharpness,cos_beta1,clipped
// Floats use 17-significant-digit scientific notation so doubles round-trip
// exactly; identical config and seed therefore produce identical bytes.
extern const char* const kTrajectoryCsvHeader;

std::string format_double(double x);  // %.16e
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          bool out_of_region = false);

struct CsvRow {
    long t = 0;
    double alpha = 0, beta1 = 0, beta2 = 0;
    double loss = 0, l1 = 0, l2 = 0, lhat = 0;
    double sharpness = 0, cos_beta1 = 0;
    int clipped = 0;
};

std::vector<CsvRow> read_trajectory_csv(const std::string& path);

// Minimal self-contained SVG writer: fixed 960x480 viewbox, polyline series,
// optional log y-axis and horizontal rule.
struct SvgSeries {
    std::string label;
    std::string color;
    bool dashed = false;
    bool markers = false;  // draw small circles instead of connecting lines
    std::vector<std::pair<double, double>> pts;
};

struct SvgPanel {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool logy = false;
    std::optional<double> hrule;  // horizontal reference line (e.g. 2/eta)
    std::string hrule_label;
    std::vector<SvgSeries> series;
};

void write_svg(const std::string& path, const std::vector<SvgPanel>& panels);

void write_report(const std::string& path,
                  const std::vector<std::pair<std::string, VerificationReport>>& sections,
                  const std::vector<std::string>& notes);

}  // namespace eosim
