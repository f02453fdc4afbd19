#include "qmf/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "qmf/core.hpp"

namespace qmf {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

struct CsvHead {
    std::string hash, columns;
    bool ok = false;
};

CsvHead read_head(const fs::path& p) {
    CsvHead h;
    std::ifstream f(p);
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("# config_hash: ", 0) == 0) h.hash = line.substr(15);
        if (!line.empty() && line[0] != '#') {
            h.columns = line;
            h.ok = true;
            break;
        }
    }
    return h;
}

}  // namespace

std::string plot_script_for(const std::string& csv_name, const std::string& header_line) {
    auto cols = split(header_line, ',');
    std::string stem = fs::path(csv_name).stem().string();
    std::string s = "# " + csv_name + "\n";
    s += "set output '" + stem + ".png'\n";
    s += "set xlabel '" + (cols.empty() ? std::string("x") : cols[0]) + "'\n";
    if (cols.size() < 2) return s + "\n";
    s += "plot";
    for (size_t k = 1; k < cols.size(); ++k) {
        s += k > 1 ? ", \\\n    " : " ";
        s += "'" + csv_name + "' using 1:" + std::to_string(k + 1) + " with linespoints title '" + cols[k] + "'";
    }
    return s + "\n\n";
}

json emit_report(const std::string& run_dir) {
    fs::path dir(run_dir);
    if (!fs::is_directory(dir)) throw Error(ErrorKind::missing_input, "run directory not found: " + run_dir);
    std::vector<fs::path> summaries;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        const std::string suffix = ".summary.json";
        if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            summaries.push_back(e.path());
    }
    if (summaries.empty()) throw Error(ErrorKind::missing_input, "no completed runs in " + run_dir);
    std::sort(summaries.begin(), summaries.end());

    std::vector<std::string> problems;
    bool missing = false;
    json runs = json::array();
    std::string plot = "set terminal pngcairo size 800,600\nset datafile separator ','\nset key outside\n\n";
    for (const auto& p : summaries) {
        json s;
        try {
            std::ifstream f(p);
            s = json::parse(f);
            for (const char* k : {"experiment", "run_id", "config_hash", "files", "results"})
                if (!s.contains(k)) throw std::runtime_error(std::string("missing field ") + k);
        } catch (const std::exception& e) {
            problems.push_back(p.filename().string() + ": corrupt summary (" + e.what() + ")");
            continue;
        }
        const std::string hash = s.at("config_hash");
        for (const auto& fj : s.at("files")) {
            const std::string name = fj.get<std::string>();
            fs::path csv = dir / name;
            if (!fs::exists(csv)) {
                problems.push_back(p.filename().string() + ": missing file " + name);
                missing = true;
                continue;
            }
            CsvHead h = read_head(csv);
            if (!h.ok || h.hash != hash) {
                problems.push_back(name + ": corrupt (header absent or config hash differs from the summary)");
                continue;
            }
            plot += plot_script_for(name, h.columns);
        }
        runs.push_back({{"summary", p.filename().string()},
                        {"experiment", s.at("experiment")},
                        {"run_id", s.at("run_id")},
                        {"config_hash", hash},
                        {"files", s.at("files")},
                        {"results", s.at("results")}});
    }
    if (!problems.empty()) {
        std::string msg = "report incomplete:";
        for (const auto& pr : problems) msg += "\n  " + pr;
        throw Error(missing ? ErrorKind::missing_input : ErrorKind::contract, msg);
    }
    json report{{"runs", runs}, {"run_count", runs.size()}};
    std::ofstream(dir / "report.json", std::ios::binary) << report.dump(2) << "\n";
    std::ofstream(dir / "report.gp", std::ios::binary) << plot;
    return report;
}

}  // namespace qmf
