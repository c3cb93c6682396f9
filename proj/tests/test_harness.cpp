#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "eosim/harness.hpp"
#include "eosim/regions.hpp"
#include "oracles.hpp"

using namespace eosim;
namespace fs = std::filesystem;

namespace {

const char* const kMinimalCfg =
    "# minimal run\n"
    "lambda1 = 100\n"
    "lambda2 = 0.01\n"
    "eta = 0.05\n"
    "steps = 100\n"
    "mode = gd\n"
    "init = init_region\n"
    "seed = 7\n";

std::string temp_dir(const std::string& leaf) {
    const fs::path p = fs::temp_directory_path() / ("eosim_test_" + leaf);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

template <typename Fn>
bool config_error_mentions(Fn&& fn, const std::string& needle) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

}  // namespace

TEST_CASE("config parsing: minimal text and defaults") {
    const RunConfig rc = parse_config_text(kMinimalCfg);
    CHECK(rc.model.lambda1 == 100.0);
    CHECK(rc.model.eta == 0.05);
    CHECK(rc.steps == 100);
    CHECK(rc.mode == RunMode::gd);
    CHECK(rc.init == InitKind::init_region);
    CHECK(rc.seed == 7);
    CHECK(rc.out_dir == "out");
    CHECK(rc.name == "run");
    CHECK(rc.clip_variant == ClipVariant::cap);
    CHECK(rc.write_csv);
    CHECK(rc.write_svg);
    CHECK(rc.write_report);
    CHECK(rc.effective_profile() == Profile::init_region);
}

TEST_CASE("config parsing: errors carry context") {
    CHECK(config_error_mentions(
        [] { parse_config_text("lambda1 = 100\nbogus_key = 3\n"); }, "bogus_key"));
    CHECK(config_error_mentions(
        [] { parse_config_text(std::string(kMinimalCfg) + "steps = 5\n"); },
        "duplicate"));
    CHECK(config_error_mentions([] { parse_config_text("lambda1 = 100\n"); },
                                "missing required"));
    CHECK(config_error_mentions(
        [] {
            parse_config_text("lambda1 = 100\nlambda2 = 0.01\neta = 0.05\n"
                              "steps = 10\nmode = warp\ninit = init_region\nseed = 1\n");
        },
        "mode"));

    // explicit init needs all three coordinates
    CHECK(config_error_mentions(
        [] {
            parse_config_text("lambda1 = 100\nlambda2 = 0.01\neta = 0.05\n"
                              "steps = 10\nmode = gd\ninit = explicit\nalpha = 0.5\n");
        },
        "beta1"));

    // sampler init needs a seed
    CHECK(config_error_mentions(
        [] {
            parse_config_text("lambda1 = 100\nlambda2 = 0.01\neta = 0.05\n"
                              "steps = 10\nmode = gd\ninit = init_region\n");
        },
        "seed"));
}

TEST_CASE("config parsing: outputs and lists") {
    const RunConfig rc = parse_config_text(
        std::string(kMinimalCfg) +
        "outputs = csv\n"
        "eta_list = 0.05, 0.1\n"
        "seed_list = 1,2,3\n"
        "threads = 2\n");
    CHECK(rc.write_csv);
    CHECK(!rc.write_svg);
    CHECK(!rc.write_report);
    REQUIRE(rc.eta_list.size() == 2);
    CHECK(rc.eta_list[1] == 0.1);
    REQUIRE(rc.seed_list.size() == 3);
    CHECK(rc.seed_list[2] == 3);
    CHECK(rc.threads == 2);
}

TEST_CASE("config parsing: theory guard") {
    const std::string wild =
        "lambda1 = 50\nlambda2 = 0.01\neta = 0.05\n"
        "steps = 10\nmode = gd\ninit = init_region\nseed = 1\n";
    CHECK_THROWS_AS(parse_config_text(wild), ConfigError);
    CHECK_NOTHROW(parse_config_text("allow_out_of_theory = true\n" + wild));
}

TEST_CASE("every shipped preset parses") {
    for (const std::string& name : preset_names()) {
        const RunConfig rc = parse_config_text(preset_text(name));
        CHECK(rc.name == name);
        CHECK(rc.steps > 0);
    }
}

TEST_CASE("preset files on disk match the embedded texts") {
    for (const std::string& name : preset_names()) {
        const std::string path =
            std::string(EOSIM_SOURCE_DIR) + "/presets/" + name + ".cfg";
        CHECK(oracles::slurp(path) == preset_text(name));
    }
}

TEST_CASE("double formatting round-trips exactly") {
    const double values[] = {0.0,    1.0,   -1.0,  0.1,  1e-300, 1e300,
                             0.05270462766947299, 3.141592653589793, -4.2e-7};
    for (const double v : values) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("trajectory CSV round-trips and is byte-deterministic") {
    const std::string dir = temp_dir("csv");
    const ModelConfig cfg = ModelConfig::make(100.0, 0.01, 0.05);
    const Trajectory traj = simulate(cfg, sample_init_region(cfg, 11), 50);

    const std::string p1 = dir + "/a.csv";
    const std::string p2 = dir + "/b.csv";
    write_trajectory_csv(p1, traj);
    write_trajectory_csv(p2, traj);
    CHECK(oracles::slurp(p1) == oracles::slurp(p2));

    const auto rows = read_trajectory_csv(p1);
    REQUIRE(rows.size() == traj.records.size());
    for (size_t t = 0; t < rows.size(); ++t) {
        const auto& rec = traj.records[t];
        CHECK(rows[t].t == rec.t);
        CHECK(rows[t].alpha == rec.params.alpha);
        CHECK(rows[t].beta1 == rec.params.beta1);
        CHECK(rows[t].beta2 == rec.params.beta2);
        // derived columns recompute from primal within 1e-12
        const TrajectoryRecord rec2 = make_record(
            cfg, rows[t].t, Params{rows[t].alpha, rows[t].beta1, rows[t].beta2},
            rows[t].clipped != 0);
        CHECK(std::abs(rows[t].loss - rec2.parts.total) <= 1e-12);
        CHECK(std::abs(rows[t].sharpness - rec2.sharp.value) <=
              1e-12 * std::max(1.0, rec2.sharp.value));
    }

    CHECK_THROWS_AS(read_trajectory_csv(dir + "/missing.csv"), ConfigError);
}

TEST_CASE("svg writer emits self-contained panels") {
    const std::string dir = temp_dir("svg");
    SvgPanel panel;
    panel.title = "demo";
    panel.xlabel = "x";
    panel.ylabel = "y";
    panel.hrule = 1.5;
    panel.hrule_label = "rule";
    panel.series.push_back(SvgSeries{"a", "#ff0000", false, false,
                                     {{0, 1}, {1, 2}, {2, 1.2}}});
    panel.series.push_back(SvgSeries{"b", "#0000ff", true, false,
                                     {{0, 2}, {1, 1}, {2, 2.5}}});
    const std::string path = dir + "/demo.svg";
    write_svg(path, {panel});
    const std::string body = oracles::slurp(path);
    CHECK(body.rfind("<svg", 0) == 0);
    CHECK(body.find("</svg>") != std::string::npos);
    CHECK(body.find("polyline") != std::string::npos);
    CHECK(body.find("demo") != std::string::npos);
    CHECK(body.find("rule") != std::string::npos);
}

TEST_CASE("report writer states one check per line plus a verdict") {
    const std::string dir = temp_dir("report");
    VerificationReport rep;
    CheckResult ok;
    ok.name = "alpha_band";
    ok.bound = "alpha in [0, 1]";
    ok.worst = 0.25;
    rep.checks.push_back(ok);
    write_report(dir + "/ok.txt", {{"demo", rep}}, {"note line"});
    const std::string good = oracles::slurp(dir + "/ok.txt");
    CHECK(good.find("alpha_band") != std::string::npos);
    CHECK(good.find("RESULT PASS") != std::string::npos);
    CHECK(good.find("note line") != std::string::npos);

    CheckResult bad = ok;
    bad.name = "beta_band";
    bad.pass = false;
    bad.first_violation = 17;
    rep.checks.push_back(bad);
    write_report(dir + "/bad.txt", {{"demo", rep}}, {});
    const std::string failed = oracles::slurp(dir + "/bad.txt");
    CHECK(failed.find("RESULT FAIL") != std::string::npos);
    CHECK(failed.find("17") != std::string::npos);
}

TEST_CASE("run writes the requested artifacts and passes its own checks") {
    const std::string dir = temp_dir("run");
    RunConfig rc = parse_config_text(preset_text("figure1"));
    rc.steps = 300;
    rc.out_dir = dir;
    const RunArtifacts art = run(rc);
    CHECK(art.exit_code == kExitOk);
    CHECK(!art.diverged);
    CHECK(fs::exists(dir + "/figure1.csv"));
    CHECK(fs::exists(dir + "/figure1.svg"));
    CHECK(fs::exists(dir + "/figure1.report.txt"));
    const std::string report = oracles::slurp(dir + "/figure1.report.txt");
    CHECK(report.find("RESULT PASS") != std::string::npos);
}

TEST_CASE("explicit out-of-region runs are tagged, not rejected") {
    const std::string dir = temp_dir("oor");
    RunConfig rc = parse_config_text(
        "lambda1 = 100\nlambda2 = 0.01\neta = 0.05\nsteps = 50\nmode = gd\n"
        "init = explicit\nalpha = 0.3\nbeta1 = 0.001\nbeta2 = 0.5\n"
        "profile = init_region\n");
    rc.out_dir = dir;
    const RunArtifacts art = run(rc);
    CHECK(art.out_of_region);
    CHECK(art.exit_code == kExitOk);  // structural checks skip, none fail
    const std::string csv = oracles::slurp(dir + "/run.csv");
    CHECK(csv.rfind("# out-of-region", 0) == 0);
}

TEST_CASE("verify replays a trajectory and catches tampering") {
    const std::string dir = temp_dir("verify");
    const ModelConfig cfg = ModelConfig::make(100.0, 0.01, 0.05);
    const Params p0 = sample_init_region(cfg, 21);
    const Trajectory traj = simulate(cfg, p0, 200);
    const std::string good_csv = dir + "/good.csv";
    write_trajectory_csv(good_csv, traj);

    RunConfig rc = parse_config_text(kMinimalCfg);
    rc.out_dir = dir;
    rc.name = "replay_good";
    const VerifyOutcome ok = verify(rc, good_csv);
    CHECK(ok.exit_code == kExitOk);
    CHECK(fs::exists(ok.report_path));

    Trajectory tampered = traj;
    tampered.records[50].params.alpha += 1e-9;
    const std::string bad_csv = dir + "/bad.csv";
    write_trajectory_csv(bad_csv, tampered);
    rc.name = "replay_bad";
    const VerifyOutcome bad = verify(rc, bad_csv);
    CHECK(bad.exit_code == kExitVerifyFailed);
}

TEST_CASE("sweep summaries are schedule-independent") {
    const std::string base = temp_dir("sweep");
    RunConfig rc = parse_config_text(
        "lambda1 = 100\nlambda2 = 0.01\neta = 0.05\nsteps = 400\nmode = gd\n"
        "init = init_region\nseed = 1\n"
        "eta_list = 0.05, 0.1\nseed_list = 1, 2\n");
    rc.name = "grid";

    rc.out_dir = base + "/serial";
    rc.threads = 1;
    const SweepResult serial = sweep(rc);
    rc.out_dir = base + "/parallel";
    rc.threads = 4;
    const SweepResult parallel = sweep(rc);

    CHECK(oracles::slurp(serial.summary_path) ==
          oracles::slurp(parallel.summary_path));
    REQUIRE(serial.cell_paths.size() == 4);
    REQUIRE(parallel.cell_paths.size() == 4);
    for (size_t i = 0; i < serial.cell_paths.size(); ++i)
        CHECK(oracles::slurp(serial.cell_paths[i]) ==
              oracles::slurp(parallel.cell_paths[i]));

    const std::string summary = oracles::slurp(serial.summary_path);
    CHECK(summary.rfind("eta,seed,t1,t2,t3,t4,slope,", 0) == 0);
    size_t lines = 0;
    for (const char c : summary)
        if (c == '\n') ++lines;
    CHECK(lines == 5);  // header + one row per cell
}
