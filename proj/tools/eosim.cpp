#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "eosim/harness.hpp"
#include "eosim/regions.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::string name;
    std::string clip_variant;
    double eta = 0.0;
    long steps = 0;
    std::uint64_t seed = 0;
    long threads = 0;
    bool unclipped = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "path to a key = value config file");
    cmd->add_option("--preset", o.preset,
                    "built-in config: figure1|figure2|figure3|figure4|figure5|figure7");
    cmd->add_option("--eta", o.eta, "override the step size");
    cmd->add_option("--steps", o.steps, "override the step count");
    cmd->add_option("--seed", o.seed, "override the sampler seed");
    cmd->add_option("--out", o.out_dir, "override the output directory");
    cmd->add_option("--name", o.name, "override the artifact basename");
    cmd->add_option("--threads", o.threads, "sweep worker count (0 = hardware)");
    cmd->add_option("--clip-variant", o.clip_variant, "cap|printed-max");
    cmd->add_flag("--unclipped", o.unclipped, "run gradient descent without the clip");
}

void apply_overrides(const CLI::App* cmd, const CommonOpts& o, eosim::RunConfig& rc);

eosim::RunConfig load_config(const CLI::App* cmd, const CommonOpts& o) {
    std::string text;
    if (!o.preset.empty() && !o.config_path.empty())
        throw eosim::ConfigError("--config and --preset are mutually exclusive");
    if (!o.preset.empty()) {
        text = eosim::preset_text(o.preset);
        eosim::RunConfig rc = eosim::parse_config_text(text);
        apply_overrides(cmd, o, rc);
        return rc;
    }
    if (o.config_path.empty())
        throw eosim::ConfigError("one of --config or --preset is required");
    eosim::RunConfig rc = eosim::parse_config_file(o.config_path);
    apply_overrides(cmd, o, rc);
    return rc;
}

int print_and_exit(const eosim::RunArtifacts& art) {
    std::cout << art.summary << "\n";
    for (const auto& f : art.files) std::cout << "wrote " << f << "\n";
    return art.exit_code;
}

}  // namespace

namespace {

void apply_overrides(const CLI::App* cmd, const CommonOpts& o, eosim::RunConfig& rc) {
    if (cmd->count("--eta") > 0)
        rc.model = eosim::ModelConfig::make(rc.model.lambda1, rc.model.lambda2, o.eta,
                                            rc.allow_out_of_theory);
    if (cmd->count("--steps") > 0) {
        if (o.steps < 0) throw eosim::ConfigError("--steps must be nonnegative");
        rc.steps = o.steps;
    }
    if (cmd->count("--seed") > 0) rc.seed = o.seed;
    if (cmd->count("--out") > 0) rc.out_dir = o.out_dir;
    if (cmd->count("--name") > 0) rc.name = o.name;
    if (cmd->count("--threads") > 0) rc.threads = o.threads;
    if (o.unclipped) rc.mode = eosim::RunMode::gd_unclipped;
    if (cmd->count("--clip-variant") > 0) {
        if (o.clip_variant == "cap")
            rc.clip_variant = eosim::ClipVariant::cap;
        else if (o.clip_variant == "printed-max")
            rc.clip_variant = eosim::ClipVariant::floor_at;
        else
            throw eosim::ConfigError("--clip-variant must be cap or printed-max");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edge-of-stability toy-model simulator and verifier"};
    app.require_subcommand(1);

    CommonOpts sim_o, gf_o, con_o, ver_o, sw_o;
    CLI::App* sim = app.add_subcommand("simulate", "run gradient descent");
    add_common(sim, sim_o);
    CLI::App* gf = app.add_subcommand("gf", "integrate the gradient flow");
    add_common(gf, gf_o);
    CLI::App* con = app.add_subcommand("constrained", "run the capped dynamics");
    add_common(con, con_o);
    CLI::App* ver = app.add_subcommand("verify", "run and check every guarantee");
    add_common(ver, ver_o);
    std::string replay_path;
    ver->add_option("--replay", replay_path, "verify an existing trajectory CSV");
    CLI::App* sw = app.add_subcommand("sweep", "grid over eta_list x seed_list");
    add_common(sw, sw_o);

    CLI::App* gfs = app.add_subcommand("gfs", "closed-form gradient-flow limit");
    double g_alpha = 0.0, g_beta1 = 0.0, g_beta2 = 0.0;
    double g_l1 = 100.0, g_l2 = 0.01, g_eta = 0.05;
    gfs->add_option("--alpha", g_alpha)->required();
    gfs->add_option("--beta1", g_beta1)->required();
    gfs->add_option("--beta2", g_beta2)->required();
    gfs->add_option("--lambda1", g_l1, "default 100");
    gfs->add_option("--lambda2", g_l2, "default 0.01");
    gfs->add_option("--eta", g_eta, "default 0.05");

    CLI::App* samp = app.add_subcommand("sample-init", "draw from a named region");
    std::string s_region = "init";
    long s_count = 1;
    std::uint64_t s_seed = 0;
    double s_l1 = 100.0, s_l2 = 0.01, s_eta = 0.05, s_bound = 1.0;
    samp->add_option("--region", s_region, "init|eos_init|rate_free|constrained");
    samp->add_option("--count", s_count, "number of draws");
    samp->add_option("--seed", s_seed, "seed of the first draw (then seed+1, ...)");
    samp->add_option("--lambda1", s_l1);
    samp->add_option("--lambda2", s_l2);
    samp->add_option("--eta", s_eta);
    samp->add_option("--product-bound", s_bound, "constrained-region product cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return eosim::kExitConfigError;
    }

    try {
        if (sim->parsed()) {
            return print_and_exit(eosim::run(load_config(sim, sim_o)));
        }
        if (gf->parsed()) {
            eosim::RunConfig rc = load_config(gf, gf_o);
            rc.mode = eosim::RunMode::gf;
            return print_and_exit(eosim::run(rc));
        }
        if (con->parsed()) {
            eosim::RunConfig rc = load_config(con, con_o);
            rc.mode = eosim::RunMode::constrained;
            return print_and_exit(eosim::run(rc));
        }
        if (ver->parsed()) {
            eosim::RunConfig rc = load_config(ver, ver_o);
            std::optional<std::string> replay;
            if (ver->count("--replay") > 0) replay = replay_path;
            const eosim::VerifyOutcome out = eosim::verify(rc, replay);
            std::ifstream in(out.report_path);
            std::cout << in.rdbuf();
            std::cout << "wrote " << out.report_path << "\n";
            return out.exit_code;
        }
        if (sw->parsed()) {
            eosim::RunConfig rc = load_config(sw, sw_o);
            const eosim::SweepResult res = eosim::sweep(rc);
            std::cout << "wrote " << res.summary_path << "\n";
            for (const auto& f : res.cell_paths) std::cout << "wrote " << f << "\n";
            return res.exit_code;
        }
        if (gfs->parsed()) {
            const eosim::ModelConfig cfg = eosim::ModelConfig::make(g_l1, g_l2, g_eta);
            const eosim::Params p{g_alpha, g_beta1, g_beta2};
            const eosim::GfsEstimate est = eosim::gfs_analytic(cfg, p);
            const eosim::GfsBounds b = eosim::gfs_bounds(cfg, p);
            std::cout << "gamma=" << eosim::format_double(est.gamma) << "\n"
                      << "alpha_inf_sq=" << eosim::format_double(est.alpha_inf_sq)
                      << "\n"
                      << "phi=" << eosim::format_double(est.phi) << "\n"
                      << "lower=" << eosim::format_double(b.lower) << "\n"
                      << "upper=" << eosim::format_double(b.upper) << "\n";
            return eosim::kExitOk;
        }
        if (samp->parsed()) {
            if (s_count < 1) throw eosim::ConfigError("--count must be positive");
            const bool rate_free = s_region == "rate_free";
            const eosim::ModelConfig cfg =
                rate_free ? eosim::ModelConfig::make(s_l1, s_l2, 2.0 / s_l1, true)
                          : eosim::ModelConfig::make(s_l1, s_l2, s_eta);
            for (long i = 0; i < s_count; ++i) {
                const std::uint64_t seed = s_seed + static_cast<std::uint64_t>(i);
                eosim::Params p;
                if (s_region == "init")
                    p = eosim::sample_init_region(cfg, seed);
                else if (s_region == "eos_init")
                    p = eosim::sample_eos_init_region(cfg, seed);
                else if (rate_free)
                    p = eosim::sample_rate_free_region(s_l1, s_l2, seed);
                else if (s_region == "constrained")
                    p = eosim::sample_constrained_region(cfg, seed, s_bound);
                else
                    throw eosim::ConfigError("unknown region '" + s_region + "'");
                std::cout << eosim::format_double(p.alpha) << ","
                          << eosim::format_double(p.beta1) << ","
                          << eosim::format_double(p.beta2) << "\n";
            }
            return eosim::kExitOk;
        }
    } catch (const eosim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return eosim::kExitConfigError;
    } catch (const eosim::EmptyRegionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return eosim::kExitConfigError;
    } catch (const eosim::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return eosim::kExitConfigError;
    } catch (const eosim::DivergedStateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return eosim::kExitDiverged;
    }
    return eosim::kExitConfigError;
}
