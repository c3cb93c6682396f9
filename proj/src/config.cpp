#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "eosim/harness.hpp"

namespace eosim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& val) {
    const char* c = val.c_str();
    char* end = nullptr;
    const double x = std::strtod(c, &end);
    if (end == c || *end != '\0')
        throw ConfigError("config: key '" + key + "' expects a number, got '" + val + "'");
    return x;
}

long parse_long(const std::string& key, const std::string& val) {
    const double x = parse_double(key, val);
    const long l = static_cast<long>(x);
    if (static_cast<double>(l) != x)
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + val + "'");
    return l;
}

bool parse_bool(const std::string& key, const std::string& val) {
    if (val == "true" || val == "1") return true;
    if (val == "false" || val == "0") return false;
    throw ConfigError("config: key '" + key + "' expects true/false, got '" + val + "'");
}

std::vector<std::string> split_list(const std::string& val) {
    std::vector<std::string> out;
    std::stringstream ss(val);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

const std::set<std::string> kKnownKeys = {
    "lambda1", "lambda2", "eta", "steps", "mode", "init", "alpha", "beta1",
    "beta2", "seed", "clip_variant", "profile", "allow_out_of_theory",
    "out_dir", "name", "preset", "outputs", "product_bound",
    "collapse_threshold", "grad_tol", "gf_max_steps", "gf_sample_stride",
    "converge_eps", "converge_delta", "threads", "eta_list", "seed_list"};

}  // namespace

Profile RunConfig::effective_profile() const {
    if (profile != Profile::automatic) return profile;
    switch (init) {
        case InitKind::init_region: return Profile::init_region;
        case InitKind::eos_init_region: return Profile::eos_init_region;
        case InitKind::rate_free_region: return Profile::rate_free_region;
        case InitKind::constrained_region: return Profile::constrained_region;
        case InitKind::explicit_point: return Profile::none;
    }
    return Profile::none;
}

RunConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    long lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!kKnownKeys.count(key))
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
        if (kv.count(key))
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": duplicate key '" + key + "'");
        kv[key] = val;
    }

    std::vector<std::string> missing;
    for (const char* req : {"lambda1", "lambda2", "eta", "steps", "mode", "init"})
        if (!kv.count(req)) missing.push_back(req);
    if (!missing.empty()) {
        std::string msg = "config: missing required keys:";
        for (const auto& m : missing) msg += " " + m;
        throw ConfigError(msg);
    }

    RunConfig rc;
    if (kv.count("allow_out_of_theory"))
        rc.allow_out_of_theory = parse_bool("allow_out_of_theory", kv["allow_out_of_theory"]);
    rc.model = ModelConfig::make(parse_double("lambda1", kv["lambda1"]),
                                 parse_double("lambda2", kv["lambda2"]),
                                 parse_double("eta", kv["eta"]),
                                 rc.allow_out_of_theory);
    rc.steps = parse_long("steps", kv["steps"]);
    if (rc.steps < 0) throw ConfigError("config: steps must be >= 0");

    const std::string mode = kv["mode"];
    if (mode == "gd") rc.mode = RunMode::gd;
    else if (mode == "gd-unclipped") rc.mode = RunMode::gd_unclipped;
    else if (mode == "gf") rc.mode = RunMode::gf;
    else if (mode == "constrained") rc.mode = RunMode::constrained;
    else throw ConfigError("config: mode must be one of gd, gd-unclipped, gf, constrained");

    const std::string init = kv["init"];
    if (init == "explicit") rc.init = InitKind::explicit_point;
    else if (init == "init_region") rc.init = InitKind::init_region;
    else if (init == "eos_init_region") rc.init = InitKind::eos_init_region;
    else if (init == "rate_free_region") rc.init = InitKind::rate_free_region;
    else if (init == "constrained_region") rc.init = InitKind::constrained_region;
    else
        throw ConfigError(
            "config: init must be one of explicit, init_region, eos_init_region, "
            "rate_free_region, constrained_region");

    if (rc.init == InitKind::explicit_point) {
        std::vector<std::string> need;
        for (const char* k : {"alpha", "beta1", "beta2"})
            if (!kv.count(k)) need.push_back(k);
        if (!need.empty()) {
            std::string msg = "config: explicit init requires keys:";
            for (const auto& m : need) msg += " " + m;
            throw ConfigError(msg);
        }
        rc.explicit_init = Params{parse_double("alpha", kv["alpha"]),
                                  parse_double("beta1", kv["beta1"]),
                                  parse_double("beta2", kv["beta2"])};
    } else {
        if (!kv.count("seed"))
            throw ConfigError("config: sampled init requires the key: seed");
    }
    if (kv.count("seed"))
        rc.seed = static_cast<std::uint64_t>(parse_long("seed", kv["seed"]));

    if (kv.count("clip_variant")) {
        const std::string v = kv["clip_variant"];
        if (v == "cap") rc.clip_variant = ClipVariant::cap;
        else if (v == "printed-max") rc.clip_variant = ClipVariant::floor_at;
        else throw ConfigError("config: clip_variant must be cap or printed-max");
    }

    if (kv.count("profile")) {
        const std::string v = kv["profile"];
        if (v == "auto") rc.profile = Profile::automatic;
        else if (v == "none") rc.profile = Profile::none;
        else if (v == "init_region") rc.profile = Profile::init_region;
        else if (v == "eos_init_region") rc.profile = Profile::eos_init_region;
        else if (v == "rate_free_region") rc.profile = Profile::rate_free_region;
        else if (v == "constrained_region") rc.profile = Profile::constrained_region;
        else
            throw ConfigError(
                "config: profile must be one of auto, none, init_region, "
                "eos_init_region, rate_free_region, constrained_region");
    }

    if (kv.count("out_dir")) rc.out_dir = kv["out_dir"];
    if (kv.count("name")) rc.name = kv["name"];
    if (kv.count("preset")) rc.preset = kv["preset"];
    if (kv.count("outputs")) {
        rc.write_csv = rc.write_svg = rc.write_report = false;
        for (const auto& o : split_list(kv["outputs"])) {
            if (o == "csv") rc.write_csv = true;
            else if (o == "svg") rc.write_svg = true;
            else if (o == "report") rc.write_report = true;
            else throw ConfigError("config: outputs entries must be csv, svg or report");
        }
    }
    if (kv.count("product_bound")) {
        rc.product_bound = parse_double("product_bound", kv["product_bound"]);
        if (!(rc.product_bound > 0.0))
            throw ConfigError("config: product_bound must be positive");
    }
    if (kv.count("collapse_threshold"))
        rc.collapse_threshold = parse_double("collapse_threshold", kv["collapse_threshold"]);
    if (kv.count("grad_tol")) {
        rc.grad_tol = parse_double("grad_tol", kv["grad_tol"]);
        if (!(rc.grad_tol > 0.0)) throw ConfigError("config: grad_tol must be positive");
    }
    if (kv.count("gf_max_steps")) rc.gf_max_steps = parse_long("gf_max_steps", kv["gf_max_steps"]);
    if (kv.count("gf_sample_stride"))
        rc.gf_sample_stride = parse_long("gf_sample_stride", kv["gf_sample_stride"]);
    if (kv.count("converge_eps")) rc.converge_eps = parse_double("converge_eps", kv["converge_eps"]);
    if (kv.count("converge_delta"))
        rc.converge_delta = parse_double("converge_delta", kv["converge_delta"]);
    if (kv.count("threads"))
        rc.threads = static_cast<int>(parse_long("threads", kv["threads"]));
    if (kv.count("eta_list"))
        for (const auto& e : split_list(kv["eta_list"]))
            rc.eta_list.push_back(parse_double("eta_list", e));
    if (kv.count("seed_list"))
        for (const auto& s : split_list(kv["seed_list"]))
            rc.seed_list.push_back(static_cast<std::uint64_t>(parse_long("seed_list", s)));

    return rc;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace eosim
