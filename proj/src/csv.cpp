#include <cstdio>
#include <fstream>
#include <sstream>

#include "eosim/harness.hpp"

namespace eosim {

const char* const kTrajectoryCsvHeader =
    "t,alpha,beta1,beta2,loss,l1,l2,lhat,sharpness,cos_beta1,clipped";

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.16e", x);
    return buf;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          bool out_of_region) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("csv: cannot open '" + path + "' for writing");
    if (out_of_region) out << "# out-of-region\n";
    if (traj.diverged)
        out << "# diverged at step " << traj.diverged_step << "\n";
    out << kTrajectoryCsvHeader << "\n";
    char buf[512];
    for (const auto& r : traj.records) {
        std::snprintf(buf, sizeof(buf),
                      "%ld,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%d\n",
                      r.t, r.params.alpha, r.params.beta1, r.params.beta2,
                      r.parts.total, r.parts.l1, r.parts.l2, r.parts.lhat,
                      r.sharp.value, r.sharp.cos_beta1, r.beta1_clipped ? 1 : 0);
        out << buf;
    }
}

std::vector<CsvRow> read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("csv: cannot open '" + path + "'");
    std::vector<CsvRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kTrajectoryCsvHeader)
                throw ConfigError("csv: unexpected header in '" + path + "'");
            header_seen = true;
            continue;
        }
        CsvRow row;
        double clipped = 0.0;
        double t = 0.0;
        double* fields[] = {&t,        &row.alpha, &row.beta1,     &row.beta2,
                            &row.loss, &row.l1,    &row.l2,        &row.lhat,
                            &row.sharpness,        &row.cos_beta1, &clipped};
        std::stringstream ss(line);
        std::string cell;
        size_t i = 0;
        while (std::getline(ss, cell, ',')) {
            if (i >= 11) throw ConfigError("csv: too many columns in '" + path + "'");
            char* end = nullptr;
            *fields[i] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw ConfigError("csv: bad value '" + cell + "' in '" + path + "'");
            ++i;
        }
        if (i != 11) throw ConfigError("csv: expected 11 columns in '" + path + "'");
        row.t = static_cast<long>(t);
        row.clipped = clipped != 0.0 ? 1 : 0;
        rows.push_back(row);
    }
    if (!header_seen) throw ConfigError("csv: no header in '" + path + "'");
    return rows;
}

}  // namespace eosim
