#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "eosim/harness.hpp"
#include "eosim/regions.hpp"

namespace fs = std::filesystem;

namespace eosim {

namespace {

// ---------------------------------------------------------------- presets

const std::map<std::string, std::string>& preset_map() {
    static const std::map<std::string, std::string> presets = {
        {"figure1",
         "# gradient descent hovering at the stability edge: loss and sharpness traces\n"
         "lambda1 = 100\n"
         "lambda2 = 0.01\n"
         "eta = 0.05\n"
         "steps = 10000\n"
         "mode = gd\n"
         "init = init_region\n"
         "seed = 62\n"
         "name = figure1\n"
         "preset = figure1\n"},
        {"figure2",
         "# surrogate loss against the convergent loss part, with the reference decay slope\n"
         "lambda1 = 100\n"
         "lambda2 = 0.01\n"
         "eta = 0.05\n"
         "steps = 10000\n"
         "mode = gd\n"
         "init = init_region\n"
         "seed = 62\n"
         "name = figure2\n"
         "preset = figure2\n"},
        {"figure3",
         "# flow-limit sharpness envelope along a run at eta = 1/12\n"
         "lambda1 = 100\n"
         "lambda2 = 0.01\n"
         "eta = 0.08333333333333333\n"
         "steps = 10000\n"
         "mode = gd\n"
         "init = init_region\n"
         "seed = 3\n"
         "name = figure3\n"
         "preset = figure3\n"},
        {"figure4",
         "# gradient flows restarted from points along a gradient descent path\n"
         "lambda1 = 100\n"
         "lambda2 = 0.01\n"
         "eta = 0.05\n"
         "steps = 10000\n"
         "mode = gd\n"
         "init = init_region\n"
         "seed = 62\n"
         "name = figure4\n"
         "preset = figure4\n"},
        {"figure5",
         "# descent, flow and capped dynamics from one initialization, parameter plane\n"
         "lambda1 = 100\n"
         "lambda2 = 0.01\n"
         "eta = 0.05\n"
         "steps = 10000\n"
         "mode = gd\n"
         "init = init_region\n"
         "seed = 62\n"
         "name = figure5\n"
         "preset = figure5\n"},
        {"figure7",
         "# step-size independence of the surrogate decay: two etas, one shared init\n"
         "lambda1 = 100\n"
         "lambda2 = 0.01\n"
         "eta = 0.05\n"
         "eta_list = 0.05, 0.08333333333333333\n"
         "steps = 10000\n"
         "mode = gd\n"
         "init = explicit\n"
         "alpha = 0.47958315233127197\n"
         "beta1 = 0.0019431817513898058\n"
         "beta2 = 0.55\n"
         "profile = init_region\n"
         "name = figure7\n"
         "preset = figure7\n"},
    };
    return presets;
}

// ------------------------------------------------------------- utilities

std::string join_path(const std::string& dir, const std::string& file) {
    return (fs::path(dir) / file).string();
}

Params resolve_init(const RunConfig& rc) {
    switch (rc.init) {
        case InitKind::explicit_point: return rc.explicit_init;
        case InitKind::init_region: return sample_init_region(rc.model, rc.seed);
        case InitKind::eos_init_region: return sample_eos_init_region(rc.model, rc.seed);
        case InitKind::rate_free_region:
            return sample_rate_free_region(rc.model.lambda1, rc.model.lambda2, rc.seed);
        case InitKind::constrained_region:
            return sample_constrained_region(rc.model, rc.seed, rc.product_bound);
    }
    throw ConfigError("unreachable init kind");
}

// Nearest usable point of the constrained set: beta1 dropped, alpha clamped
// into its window, the product alpha*beta2 clamped into (0, product_bound].
ConstrainedState project_constrained(const ModelConfig& cfg, const Params& p,
                                     double product_bound) {
    const double a_lo = 1.0 / std::sqrt(cfg.lambda1 * cfg.eta);
    const double alpha = std::clamp(p.alpha, a_lo, cfg.clip_alpha);
    double prod = alpha * p.beta2;
    prod = std::clamp(prod, product_bound * 1e-12, product_bound);
    return ConstrainedState{alpha, prod / alpha};
}

bool region_member(const RunConfig& rc, Profile prof, const Params& p) {
    switch (prof) {
        case Profile::init_region: return in_init_region(rc.model, p).member;
        case Profile::eos_init_region: return in_eos_init_region(rc.model, p).member;
        case Profile::rate_free_region:
            return in_rate_free_region(rc.model.lambda1, rc.model.lambda2, p).member;
        case Profile::constrained_region:
            return in_constrained_region(rc.model, p, rc.product_bound).member;
        default: return true;
    }
}

CheckResult simple_check(std::string name, std::string bound, bool pass,
                         double worst, std::string note = "") {
    CheckResult c;
    c.name = std::move(name);
    c.bound = std::move(bound);
    c.pass = pass;
    c.worst = worst;
    c.note = std::move(note);
    if (!pass) c.first_violation = 0;
    return c;
}

CheckResult skipped_check(std::string name, std::string bound, std::string note) {
    CheckResult c;
    c.name = std::move(name);
    c.bound = std::move(bound);
    c.skipped = true;
    c.note = std::move(note);
    return c;
}

Trajectory trajectory_from_constrained(const ConstrainedRun& run) {
    Trajectory traj;
    traj.config = run.config;
    traj.records.reserve(run.states.size());
    long t = 0;
    for (const auto& s : run.states) {
        traj.records.push_back(make_record(run.config, t++, Params{s.alpha, 0.0, s.beta2},
                                           s.alpha == run.config.clip_alpha));
    }
    return traj;
}

Trajectory trajectory_from_flow(const ModelConfig& cfg, const GfResult& res) {
    Trajectory traj;
    traj.config = cfg;
    traj.records.reserve(res.samples.size());
    for (const auto& s : res.samples)
        traj.records.push_back(make_record(cfg, s.step, s.p, false));
    return traj;
}

// ------------------------------------------------------ verification suites

const char* const kExemptNote = "exempt: guarantees assume the capped clip";

std::vector<std::pair<std::string, VerificationReport>> gd_sections(
    const RunConfig& rc, const Trajectory& traj, const PhaseReport& phases,
    bool exempt, bool member_init, bool member_eos) {
    std::vector<std::pair<std::string, VerificationReport>> sections;

    if (exempt) {
        VerificationReport rep;
        for (const char* name :
             {"sharpness_lower", "sharpness_upper", "eigvec_beta1_alignment",
              "beta2_increasing", "pre_threshold_sharpness_band",
              "post_threshold_sharpness_band", "surrogate_sandwich",
              "surrogate_ratio", "gfs_bracket", "gfs_monotone"})
            rep.checks.push_back(skipped_check(name, "capped-clip guarantee", kExemptNote));
        sections.emplace_back("exempted", rep);
        return sections;
    }
    if (!member_init) {
        VerificationReport rep;
        rep.checks.push_back(skipped_check(
            "initialization_membership", "init in the verification region",
            "out-of-region initialization; structural checks not applicable"));
        sections.emplace_back("structure", rep);
        return sections;
    }

    sections.emplace_back("parameter_structure", verify_param_lemma(traj));
    sections.emplace_back("sharpness_bands", verify_sharpness_bands(traj, phases));
    sections.emplace_back("surrogate_loss", verify_lhat(traj, phases));
    sections.emplace_back("flow_limit_envelope", verify_gfs(traj));

    if (rc.effective_profile() == Profile::eos_init_region && member_eos) {
        VerificationReport rep;
        const double eta = rc.model.eta;
        if (phases.t2 && phases.t3) {
            const auto& rec = traj.records;
            const double s2 = rec[*phases.t2].sharp.value;
            const double s3 = rec[*phases.t3].sharp.value;
            rep.checks.push_back(simple_check(
                "eos_phase_order", "0 < t2 < t3", *phases.t2 > 0 && *phases.t2 < *phases.t3,
                static_cast<double>(*phases.t3 - *phases.t2)));
            rep.checks.push_back(simple_check("eos_peak_sharpness",
                                              "sharpness(t2) > 2.37/eta",
                                              s2 > 2.37 / eta, s2 - 2.37 / eta));
            rep.checks.push_back(simple_check("eos_return_sharpness",
                                              "sharpness(t3) < 2/eta + eta",
                                              s3 < 2.0 / eta + eta,
                                              2.0 / eta + eta - s3));
        } else {
            rep.checks.push_back(skipped_check("eos_phase_order", "0 < t2 < t3",
                                               "rise/fall cycle not completed within the horizon"));
        }
        sections.emplace_back("eos_cycle", rep);
    }
    return sections;
}

std::vector<std::pair<std::string, VerificationReport>> gf_sections(
    const RunConfig& rc, const GfResult& res) {
    VerificationReport rep;
    rep.checks.push_back(simple_check("flow_conserved_quantity",
                                      "max |gamma(t) - gamma(0)| <= 1e-8",
                                      res.max_gamma_drift <= 1e-8,
                                      1e-8 - res.max_gamma_drift));
    rep.checks.push_back(simple_check("flow_converged",
                                      "gradient inf-norm <= grad_tol within max_steps",
                                      res.converged, rc.grad_tol - res.grad_inf));
    if (res.converged) {
        const double prod_err = std::abs(res.terminal.alpha * res.terminal.beta2 - 1.0);
        const double b1_err = std::abs(res.terminal.beta1);
        rep.checks.push_back(simple_check(
            "flow_terminal_minimizer", "|alpha*beta2 - 1| <= 1e-6 and |beta1| <= 1e-6",
            prod_err <= 1e-6 && b1_err <= 1e-6, 1e-6 - std::max(prod_err, b1_err)));
    } else {
        rep.checks.push_back(skipped_check("flow_terminal_minimizer",
                                           "|alpha*beta2 - 1| <= 1e-6 and |beta1| <= 1e-6",
                                           "flow did not converge"));
    }
    std::vector<std::pair<std::string, VerificationReport>> sections;
    sections.emplace_back("gradient_flow", rep);
    return sections;
}

std::vector<std::pair<std::string, VerificationReport>> constrained_sections(
    const RunConfig& rc, const ConstrainedRun& run) {
    std::vector<std::pair<std::string, VerificationReport>> sections;
    VerificationReport region;
    long bad = -1;
    for (size_t t = 0; t < run.states.size(); ++t) {
        const Params p{run.states[t].alpha, 0.0, run.states[t].beta2};
        if (!in_constrained_region(rc.model, p, rc.product_bound).member) {
            bad = static_cast<long>(t);
            break;
        }
    }
    CheckResult stays = simple_check("stays_in_constrained_set",
                                     "every state in the constrained set", bad < 0, 0.0);
    stays.first_violation = bad;
    region.checks.push_back(stays);
    sections.emplace_back("constrained_set", region);

    if (run.t_cap.has_value()) {
        sections.emplace_back("constrained_decay", verify_constrained_decay(run));
    } else {
        VerificationReport rep;
        rep.checks.push_back(skipped_check("post_cap_decay_ratio",
                                           "loss ratio at the cap",
                                           "cap not reached within the horizon"));
        sections.emplace_back("constrained_decay", rep);
    }
    return sections;
}

// ----------------------------------------------------------------- figures

std::vector<SvgPanel> default_gd_panels(const RunConfig& rc, const Trajectory& traj) {
    SvgPanel loss_panel;
    loss_panel.title = "loss";
    loss_panel.xlabel = "step";
    loss_panel.ylabel = "loss (log)";
    loss_panel.logy = true;
    SvgSeries ls{"loss", "#1f77b4", false, false, {}};
    for (const auto& r : traj.records)
        ls.pts.emplace_back(static_cast<double>(r.t), r.parts.total);
    loss_panel.series.push_back(std::move(ls));

    SvgPanel sharp_panel;
    sharp_panel.title = "sharpness";
    sharp_panel.xlabel = "step";
    sharp_panel.ylabel = "largest Hessian eigenvalue";
    sharp_panel.hrule = 2.0 / rc.model.eta;
    sharp_panel.hrule_label = "2/eta";
    SvgSeries ss{"sharpness", "#d62728", false, false, {}};
    for (const auto& r : traj.records)
        ss.pts.emplace_back(static_cast<double>(r.t), r.sharp.value);
    sharp_panel.series.push_back(std::move(ss));

    return {std::move(loss_panel), std::move(sharp_panel)};
}

std::vector<SvgPanel> figure2_panels(const RunConfig& rc, const Trajectory& traj,
                                     const PhaseReport& phases) {
    SvgPanel panel;
    panel.title = "surrogate decay";
    panel.xlabel = "step";
    panel.ylabel = "loss (log)";
    panel.logy = true;
    SvgSeries total{"loss", "#1f77b4", false, false, {}};
    SvgSeries l2{"convergent part", "#2ca02c", false, false, {}};
    SvgSeries lhat{"surrogate", "#d62728", false, false, {}};
    for (const auto& r : traj.records) {
        const double t = static_cast<double>(r.t);
        total.pts.emplace_back(t, r.parts.total);
        l2.pts.emplace_back(t, r.parts.l2);
        lhat.pts.emplace_back(t, r.parts.lhat);
    }
    const double slope =
        2.0 * std::log(1.0 - 2.0 * rc.model.lambda2 / rc.model.lambda1);
    const long t_end = phases.t4.value_or(static_cast<long>(traj.records.size()) - 1);
    SvgSeries ref{"reference slope", "#555555", true, false, {}};
    if (!traj.records.empty() && traj.records[0].parts.lhat > 0.0)
        for (long t = 0; t <= t_end; t += std::max(t_end / 256L, 1L))
            ref.pts.emplace_back(static_cast<double>(t),
                                 traj.records[0].parts.lhat * std::exp(slope * t));
    panel.series = {std::move(total), std::move(l2), std::move(lhat), std::move(ref)};
    return {std::move(panel)};
}

std::vector<SvgPanel> figure3_panels(const RunConfig& rc, const Trajectory& traj) {
    SvgPanel panel;
    panel.title = "flow-limit sharpness envelope";
    panel.xlabel = "step";
    panel.ylabel = "sharpness";
    panel.hrule = 2.0 / rc.model.eta;
    panel.hrule_label = "2/eta";
    SvgSeries phi{"flow limit from theta(t)", "#1f77b4", false, false, {}};
    SvgSeries lo{"lower bound", "#2ca02c", true, false, {}};
    SvgSeries hi{"upper bound", "#d62728", true, false, {}};
    for (const auto& r : traj.records) {
        const double t = static_cast<double>(r.t);
        phi.pts.emplace_back(t, gfs_analytic(rc.model, r.params).phi);
        const GfsBounds b = gfs_bounds(rc.model, r.params);
        lo.pts.emplace_back(t, b.lower);
        hi.pts.emplace_back(t, b.upper);
    }
    panel.series = {std::move(phi), std::move(lo), std::move(hi)};
    return {std::move(panel)};
}

SvgSeries plane_series(const Trajectory& traj, std::string label,
                       std::string color, bool dashed) {
    SvgSeries s{std::move(label), std::move(color), dashed, false, {}};
    for (const auto& r : traj.records)
        s.pts.emplace_back(r.params.beta2, r.params.alpha);
    return s;
}

std::vector<SvgPanel> figure4_panels(const RunConfig& rc, const Trajectory& traj,
                                     std::vector<std::string>& notes) {
    SvgPanel panel;
    panel.title = "flows restarted from the descent path";
    panel.xlabel = "beta2";
    panel.ylabel = "alpha";
    panel.hrule = rc.model.clip_alpha;
    panel.hrule_label = "alpha cap";
    panel.series.push_back(plane_series(traj, "gradient descent", "#1f77b4", false));

    const char* colors[] = {"#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    const long n = static_cast<long>(traj.records.size());
    SvgSeries limits{"flow limits", "#000000", false, true, {}};
    for (int k = 0; k < 5 && n > 0; ++k) {
        const long idx = k * (n - 1) / 8;
        const Params p0 = traj.records[idx].params;
        const GfResult res = gf_integrate(rc.model, p0, rc.grad_tol,
                                          rc.gf_max_steps, 200);
        Trajectory flow = trajectory_from_flow(rc.model, res);
        panel.series.push_back(
            plane_series(flow, "flow from t=" + std::to_string(idx), colors[k], true));
        limits.pts.emplace_back(res.terminal.beta2, res.terminal.alpha);
        notes.push_back("flow from t=" + std::to_string(idx) + ": limit sharpness " +
                        format_double(gfs_analytic(rc.model, p0).phi) +
                        ", gamma drift " + format_double(res.max_gamma_drift));
    }
    panel.series.push_back(std::move(limits));
    return {std::move(panel)};
}

std::vector<SvgPanel> figure5_panels(const RunConfig& rc, const Trajectory& gd,
                                     const Trajectory& flow,
                                     const Trajectory& capped) {
    SvgPanel panel;
    panel.title = "descent vs flow vs capped dynamics";
    panel.xlabel = "beta2";
    panel.ylabel = "alpha";
    panel.hrule = rc.model.clip_alpha;
    panel.hrule_label = "alpha cap";
    panel.series.push_back(plane_series(gd, "gradient descent", "#1f77b4", false));
    panel.series.push_back(plane_series(flow, "gradient flow", "#2ca02c", true));
    panel.series.push_back(plane_series(capped, "capped dynamics", "#d62728", false));
    return {std::move(panel)};
}

// ------------------------------------------------------------ entry points

struct CellResult {
    double eta = 0.0;
    std::uint64_t seed = 0;
    PhaseReport phases;
    double final_loss = 0.0;
    double max_sharpness = 0.0;
    double slope = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
    std::string csv_path;
    Trajectory traj;
};

CellResult run_cell(const RunConfig& base, double eta, std::uint64_t seed,
                    const std::string& cell_name) {
    RunConfig rc = base;
    rc.model = ModelConfig::make(base.model.lambda1, base.model.lambda2, eta,
                                 base.allow_out_of_theory);
    rc.seed = seed;

    CellResult cell;
    cell.eta = eta;
    cell.seed = seed;
    const Params p0 = resolve_init(rc);
    cell.traj = simulate(rc.model, p0, rc.steps,
                         rc.mode == RunMode::gd_unclipped ? StepRule::unclipped
                                                          : StepRule::clipped,
                         rc.clip_variant);
    cell.diverged = cell.traj.diverged;
    cell.phases = detect_phases(cell.traj);
    if (!cell.traj.records.empty()) {
        cell.final_loss = cell.traj.records.back().parts.total;
        for (const auto& r : cell.traj.records)
            cell.max_sharpness = std::max(cell.max_sharpness, r.sharp.value);
        const long hi = cell.phases.t4.value_or(
            static_cast<long>(cell.traj.records.size()) - 1);
        try {
            cell.slope = fit_decay_slope(cell.traj, 0, std::max(hi, 1L));
        } catch (const PreconditionError&) {
        }
    }
    cell.csv_path = join_path(rc.out_dir, cell_name + ".csv");
    write_trajectory_csv(cell.csv_path, cell.traj);
    return cell;
}

RunArtifacts run_sweep_preset(const RunConfig& rc);

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : preset_map()) names.push_back(k);
    return names;
}

std::string preset_text(const std::string& name) {
    const auto it = preset_map().find(name);
    if (it == preset_map().end())
        throw ConfigError("unknown preset '" + name + "'");
    return it->second;
}

RunArtifacts run(const RunConfig& rc) {
    fs::create_directories(rc.out_dir);
    if (rc.preset == "figure7") return run_sweep_preset(rc);

    RunArtifacts art;
    std::vector<std::string> notes;
    const Profile prof = rc.effective_profile();

    notes.push_back("lambda1=" + format_double(rc.model.lambda1) +
                    " lambda2=" + format_double(rc.model.lambda2) +
                    " eta=" + format_double(rc.model.eta) +
                    " steps=" + std::to_string(rc.steps));

    std::vector<std::pair<std::string, VerificationReport>> sections;
    Trajectory traj;

    if (rc.mode == RunMode::constrained) {
        ConstrainedState s0;
        if (rc.init == InitKind::explicit_point) {
            if (rc.explicit_init.beta1 != 0.0)
                throw ConfigError("constrained runs require beta1 = 0");
            s0 = ConstrainedState{rc.explicit_init.alpha, rc.explicit_init.beta2};
            const Params p{s0.alpha, 0.0, s0.beta2};
            art.out_of_region =
                !in_constrained_region(rc.model, p, rc.product_bound).member;
        } else if (rc.init == InitKind::constrained_region) {
            const Params p = resolve_init(rc);
            s0 = ConstrainedState{p.alpha, p.beta2};
        } else {
            s0 = project_constrained(rc.model, resolve_init(rc), rc.product_bound);
            notes.push_back("init projected onto the constrained set");
        }
        const ConstrainedRun crun =
            simulate_constrained(rc.model, s0, rc.steps, rc.product_bound);
        traj = trajectory_from_constrained(crun);
        sections = constrained_sections(rc, crun);
        if (crun.t_cap)
            notes.push_back("alpha reached the cap at t = " + std::to_string(*crun.t_cap));
        else
            notes.push_back("alpha never reached the cap");
        if (rc.write_svg) {
            SvgPanel ap;
            ap.title = "capped alpha";
            ap.xlabel = "step";
            ap.ylabel = "alpha";
            ap.hrule = rc.model.clip_alpha;
            ap.hrule_label = "alpha cap";
            SvgSeries as{"alpha", "#1f77b4", false, false, {}};
            for (const auto& r : traj.records)
                as.pts.emplace_back(static_cast<double>(r.t), r.params.alpha);
            ap.series.push_back(std::move(as));
            SvgPanel lp;
            lp.title = "constrained loss";
            lp.xlabel = "step";
            lp.ylabel = "loss (log)";
            lp.logy = true;
            SvgSeries lser{"loss", "#d62728", false, false, {}};
            for (const auto& r : traj.records)
                lser.pts.emplace_back(static_cast<double>(r.t), r.parts.l2);
            lp.series.push_back(std::move(lser));
            const std::string svg = join_path(rc.out_dir, rc.name + ".svg");
            write_svg(svg, {std::move(ap), std::move(lp)});
            art.files.push_back(svg);
        }
    } else if (rc.mode == RunMode::gf) {
        const Params p0 = resolve_init(rc);
        if (rc.init == InitKind::explicit_point && prof != Profile::none)
            art.out_of_region = !region_member(rc, prof, p0);
        const GfResult res =
            gf_integrate(rc.model, p0, rc.grad_tol, rc.gf_max_steps,
                         rc.gf_sample_stride > 0 ? rc.gf_sample_stride : 100);
        traj = trajectory_from_flow(rc.model, res);
        sections = gf_sections(rc, res);
        const GfsEstimate est = gfs_analytic(rc.model, p0);
        notes.push_back("closed-form flow limit: gamma=" + format_double(est.gamma) +
                        " alpha_inf_sq=" + format_double(est.alpha_inf_sq) +
                        " phi=" + format_double(est.phi));
        notes.push_back(std::string("flow ") +
                        (res.converged ? "converged" : "did not converge") + " after " +
                        std::to_string(res.steps) + " steps, terminal grad inf-norm " +
                        format_double(res.grad_inf));
        if (rc.write_svg) {
            SvgPanel panel;
            panel.title = "gradient flow";
            panel.xlabel = "beta2";
            panel.ylabel = "alpha";
            panel.series.push_back(plane_series(traj, "flow", "#2ca02c", false));
            const std::string svg = join_path(rc.out_dir, rc.name + ".svg");
            write_svg(svg, {std::move(panel)});
            art.files.push_back(svg);
        }
    } else {
        const Params p0 = resolve_init(rc);
        if (rc.init == InitKind::explicit_point && prof != Profile::none)
            art.out_of_region = !region_member(rc, prof, p0);
        const StepRule rule = rc.mode == RunMode::gd_unclipped ? StepRule::unclipped
                                                               : StepRule::clipped;
        traj = simulate(rc.model, p0, rc.steps, rule, rc.clip_variant);
        const PhaseReport phases = detect_phases(traj);
        const bool exempt = rc.mode == RunMode::gd_unclipped ||
                            rc.clip_variant == ClipVariant::floor_at;
        const bool member_init =
            !art.out_of_region && in_init_region(rc.model, p0).member;
        const bool member_eos = in_eos_init_region(rc.model, p0).member;
        if (!traj.diverged)
            sections = gd_sections(rc, traj, phases, exempt, member_init, member_eos);

        {
            std::ostringstream ph;
            ph << "phases:";
            ph << " t1=" << (phases.t1 ? std::to_string(*phases.t1) : "-");
            ph << " t2=" << (phases.t2 ? std::to_string(*phases.t2) : "-");
            ph << " t3=" << (phases.t3 ? std::to_string(*phases.t3) : "-");
            ph << " t4=" << (phases.t4 ? std::to_string(*phases.t4) : "-");
            ph << " spikes=" << phases.spikes.size();
            notes.push_back(ph.str());
        }
        const auto settle = convergence_time(traj, rc.converge_eps, rc.converge_delta);
        notes.push_back("settling_time(eps=" + format_double(rc.converge_eps) +
                        ", delta=" + format_double(rc.converge_delta) +
                        "): " + (settle ? std::to_string(*settle) : "not reached"));
        const auto events = detect_abnormal(traj, rc.collapse_threshold);
        if (!events.empty()) {
            std::ostringstream ev;
            ev << "abnormal events:";
            for (const auto& e : events)
                ev << (e.kind == AbnormalEvent::Kind::sign_flip ? " sign_flip@"
                                                                : " collapse@")
                   << e.step;
            notes.push_back(ev.str());
        }

        if (rc.write_svg && !traj.records.empty()) {
            std::vector<SvgPanel> panels;
            if (rc.preset == "figure2")
                panels = figure2_panels(rc, traj, phases);
            else if (rc.preset == "figure3")
                panels = figure3_panels(rc, traj);
            else if (rc.preset == "figure4")
                panels = figure4_panels(rc, traj, notes);
            else if (rc.preset == "figure5") {
                const GfResult flow = gf_integrate(rc.model, p0, rc.grad_tol,
                                                   rc.gf_max_steps, 200);
                const ConstrainedRun capped = simulate_constrained(
                    rc.model, project_constrained(rc.model, p0, rc.product_bound),
                    rc.steps, rc.product_bound);
                panels = figure5_panels(rc, traj, trajectory_from_flow(rc.model, flow),
                                        trajectory_from_constrained(capped));
            } else {
                panels = default_gd_panels(rc, traj);
            }
            const std::string svg = join_path(rc.out_dir, rc.name + ".svg");
            write_svg(svg, panels);
            art.files.push_back(svg);
        }
    }

    if (traj.diverged)
        notes.push_back("diverged at step " + std::to_string(traj.diverged_step));
    if (art.out_of_region) notes.insert(notes.begin(), "out-of-region");

    if (rc.write_csv) {
        const std::string csv = join_path(rc.out_dir, rc.name + ".csv");
        write_trajectory_csv(csv, traj, art.out_of_region);
        art.files.push_back(csv);
    }
    bool checks_pass = true;
    for (const auto& [title, rep] : sections) checks_pass = checks_pass && rep.pass();
    if (rc.write_report) {
        const std::string report = join_path(rc.out_dir, rc.name + ".report.txt");
        write_report(report, sections, notes);
        art.files.push_back(report);
    }

    art.diverged = traj.diverged;
    art.exit_code = traj.diverged ? kExitDiverged
                                  : (checks_pass ? kExitOk : kExitVerifyFailed);
    std::ostringstream sum;
    sum << rc.name << ": " << traj.records.size() << " records";
    for (const auto& n : notes) sum << "\n  " << n;
    art.summary = sum.str();
    return art;
}

namespace {

RunArtifacts run_sweep_preset(const RunConfig& rc) {
    RunArtifacts art;
    const SweepResult sw = sweep(rc);
    art.files = sw.cell_paths;
    art.files.push_back(sw.summary_path);
    art.exit_code = sw.exit_code;

    // overlay of the surrogate decay across cells, plus the reference slope
    const std::vector<double> etas =
        rc.eta_list.empty() ? std::vector<double>{rc.model.eta} : rc.eta_list;
    const std::vector<std::uint64_t> seeds =
        rc.seed_list.empty() ? std::vector<std::uint64_t>{rc.seed} : rc.seed_list;
    SvgPanel panel;
    panel.title = "surrogate decay across step sizes";
    panel.xlabel = "step";
    panel.ylabel = "surrogate loss (log)";
    panel.logy = true;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    size_t ci = 0;
    double anchor = 0.0;
    long t_end = 0;
    for (size_t i = 0; i < etas.size(); ++i) {
        for (size_t j = 0; j < seeds.size(); ++j) {
            const std::string cell_csv = join_path(
                rc.out_dir,
                rc.name + "_cell" + std::to_string(i) + "_" + std::to_string(j) + ".csv");
            const auto rows = read_trajectory_csv(cell_csv);
            SvgSeries s{"eta=" + format_double(etas[i]),
                        colors[ci++ % 4], false, false, {}};
            for (const auto& r : rows)
                s.pts.emplace_back(static_cast<double>(r.t), r.lhat);
            if (!rows.empty() && anchor == 0.0) {
                anchor = rows[0].lhat;
                t_end = rows.back().t;
            }
            panel.series.push_back(std::move(s));
        }
    }
    if (anchor > 0.0) {
        const double slope =
            2.0 * std::log(1.0 - 2.0 * rc.model.lambda2 / rc.model.lambda1);
        SvgSeries ref{"reference slope", "#555555", true, false, {}};
        for (long t = 0; t <= t_end; t += std::max(t_end / 256L, 1L))
            ref.pts.emplace_back(static_cast<double>(t), anchor * std::exp(slope * t));
        panel.series.push_back(std::move(ref));
    }
    const std::string svg = join_path(rc.out_dir, rc.name + ".svg");
    write_svg(svg, {std::move(panel)});
    art.files.push_back(svg);
    art.summary = rc.name + ": sweep over " + std::to_string(etas.size()) + " etas x " +
                  std::to_string(seeds.size()) + " seeds";
    return art;
}

}  // namespace

VerifyOutcome verify(const RunConfig& rc,
                     const std::optional<std::string>& replay_csv) {
    fs::create_directories(rc.out_dir);
    VerifyOutcome out;
    std::vector<std::string> notes;
    std::vector<std::pair<std::string, VerificationReport>> sections;

    if (replay_csv.has_value()) {
        if (rc.mode != RunMode::gd && rc.mode != RunMode::gd_unclipped)
            throw ConfigError("verify --replay supports gd and gd-unclipped runs");
        const auto rows = read_trajectory_csv(*replay_csv);
        if (rows.empty()) throw ConfigError("verify --replay: empty trajectory");
        notes.push_back("replayed from " + *replay_csv);

        const StepRule rule = rc.mode == RunMode::gd_unclipped ? StepRule::unclipped
                                                               : StepRule::clipped;
        const Params p0{rows[0].alpha, rows[0].beta1, rows[0].beta2};
        const Trajectory fresh = simulate(rc.model, p0,
                                          static_cast<long>(rows.size()) - 1, rule,
                                          rc.clip_variant);

        CheckResult primal = simple_check(
            "replay_primal_match", "stored alpha/beta1/beta2 match a fresh run bit-exactly",
            true, 0.0);
        CheckResult derived = simple_check(
            "replay_derived_match", "stored derived columns recompute within 1e-12",
            true, 0.0);
        derived.worst = std::numeric_limits<double>::infinity();
        if (fresh.records.size() != rows.size()) {
            primal.pass = false;
            primal.first_violation = static_cast<long>(fresh.records.size());
            primal.note = "fresh run diverged or is shorter";
        }
        for (size_t t = 0; t < rows.size(); ++t) {
            const auto& row = rows[t];
            if (primal.pass && t < fresh.records.size()) {
                const auto& p = fresh.records[t].params;
                if (row.t != static_cast<long>(t) || row.alpha != p.alpha ||
                    row.beta1 != p.beta1 || row.beta2 != p.beta2) {
                    primal.pass = false;
                    primal.first_violation = static_cast<long>(t);
                }
            }
            const TrajectoryRecord rec = make_record(
                rc.model, row.t, Params{row.alpha, row.beta1, row.beta2},
                row.clipped != 0);
            const double pairs[][2] = {{row.loss, rec.parts.total},
                                       {row.l1, rec.parts.l1},
                                       {row.l2, rec.parts.l2},
                                       {row.lhat, rec.parts.lhat},
                                       {row.sharpness, rec.sharp.value},
                                       {row.cos_beta1, rec.sharp.cos_beta1}};
            for (const auto& pr : pairs) {
                const double tol = 1e-12 * std::max(1.0, std::abs(pr[1]));
                const double margin = tol - std::abs(pr[0] - pr[1]);
                if (margin < derived.worst) derived.worst = margin;
                if (margin < 0.0 && derived.first_violation < 0) {
                    derived.pass = false;
                    derived.first_violation = static_cast<long>(t);
                }
            }
        }
        VerificationReport replay_rep;
        replay_rep.checks = {primal, derived};
        sections.emplace_back("replay", replay_rep);

        Trajectory traj;
        traj.config = rc.model;
        for (const auto& row : rows)
            traj.records.push_back(make_record(
                rc.model, row.t, Params{row.alpha, row.beta1, row.beta2},
                row.clipped != 0));
        const PhaseReport phases = detect_phases(traj);
        const bool exempt = rc.mode == RunMode::gd_unclipped ||
                            rc.clip_variant == ClipVariant::floor_at;
        const bool member_init = in_init_region(rc.model, p0).member;
        const bool member_eos = in_eos_init_region(rc.model, p0).member;
        auto more = gd_sections(rc, traj, phases, exempt, member_init, member_eos);
        sections.insert(sections.end(), more.begin(), more.end());
    } else {
        RunConfig quiet = rc;
        quiet.write_csv = quiet.write_svg = false;
        quiet.write_report = true;
        const RunArtifacts art = run(quiet);
        out.exit_code = art.exit_code;
        out.report_path = join_path(rc.out_dir, rc.name + ".report.txt");
        return out;
    }

    bool pass = true;
    for (const auto& [title, rep] : sections)
        for (const auto& c : rep.checks) pass = pass && c.pass;
    out.report_path = join_path(rc.out_dir, rc.name + ".report.txt");
    write_report(out.report_path, sections, notes);
    for (const auto& [title, rep] : sections)
        for (const auto& c : rep.checks) out.report.checks.push_back(c);
    out.exit_code = pass ? kExitOk : kExitVerifyFailed;
    return out;
}

SweepResult sweep(const RunConfig& rc) {
    fs::create_directories(rc.out_dir);
    const std::vector<double> etas =
        rc.eta_list.empty() ? std::vector<double>{rc.model.eta} : rc.eta_list;
    const std::vector<std::uint64_t> seeds =
        rc.seed_list.empty() ? std::vector<std::uint64_t>{rc.seed} : rc.seed_list;

    struct Job {
        size_t i, j;
        double eta;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (size_t i = 0; i < etas.size(); ++i)
        for (size_t j = 0; j < seeds.size(); ++j)
            jobs.push_back({i, j, etas[i], seeds[j]});

    std::vector<CellResult> cells(jobs.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t pool =
        rc.threads > 0 ? static_cast<size_t>(rc.threads) : static_cast<size_t>(hw);

    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(std::min(pool, jobs.size()));
    for (size_t w = 0; w < std::min(pool, jobs.size()); ++w) {
        workers.emplace_back([&, w] {
            try {
                for (size_t k = next.fetch_add(1); k < jobs.size();
                     k = next.fetch_add(1)) {
                    const Job& job = jobs[k];
                    const std::string cell_name = rc.name + "_cell" +
                                                  std::to_string(job.i) + "_" +
                                                  std::to_string(job.j);
                    cells[k] = run_cell(rc, job.eta, job.seed, cell_name);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    SweepResult result;
    result.summary_path = join_path(rc.out_dir, rc.name + "_summary.csv");
    std::ofstream out(result.summary_path, std::ios::binary);
    if (!out) throw ConfigError("sweep: cannot open '" + result.summary_path + "'");
    out << "eta,seed,t1,t2,t3,t4,slope,final_loss,max_sharpness,spikes,diverged\n";
    const auto opt = [](const std::optional<long>& v) {
        return v ? std::to_string(*v) : "-1";
    };
    for (const auto& cell : cells) {
        out << format_double(cell.eta) << "," << cell.seed << ","
            << opt(cell.phases.t1) << "," << opt(cell.phases.t2) << ","
            << opt(cell.phases.t3) << "," << opt(cell.phases.t4) << ","
            << format_double(cell.slope) << "," << format_double(cell.final_loss)
            << "," << format_double(cell.max_sharpness) << ","
            << cell.phases.spikes.size() << "," << (cell.diverged ? 1 : 0) << "\n";
        result.cell_paths.push_back(cell.csv_path);
        if (cell.diverged) result.exit_code = kExitDiverged;
    }
    return result;
}

}  // namespace eosim
