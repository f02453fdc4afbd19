#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmf/numerics.hpp"

namespace qmf {

using json = nlohmann::json;

// ---------------------------------------------------------------- fits

// log y = log prefactor + exponent log x, ordinary least squares
struct FitResult {
    double exponent = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;  // Euclidean norm of the log-space residuals
    std::vector<double> x, y;
};

// needs >= 3 points with y above `floor`; otherwise contract error
// "degenerate data" (or "too few points")
FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double floor = 1e-12);

json to_json(const FitResult& f);

// ---------------------------------------------------------------- sweeps

struct SweepRow {
    int N = 0;
    double eps = 1.0;
    double distance = 0.0;
    double reference_norm = 0.0;  // ||gamma_mf|| used for normalisation
    bool feasible = true;
    std::string note;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // sorted by N
    bool fitted = false;
    FitResult fit;
    std::string fit_error;
    bool monotone_decreasing() const;
};

struct ConvergeHartreeConfig {
    Grid grid;
    PotentialSpec V;
    Vec v_ext;
    CVec phi0;  // grid normalised
    std::vector<int> Ns;
    double t = 0.5;
    double dt = 1e-3;
    int threads = 1;
    long max_dim = 2000000;  // largest bosonic sector propagated
};

// (1/N) Tr |gamma^(1)_{N,t} - N |phi_t><phi_t||, exact propagation from phi^{(x)N}
SweepRow hartree_distance(const ConvergeHartreeConfig& cfg, int N);
SweepResult converge_hartree(const ConvergeHartreeConfig& cfg);

struct ConvergeHFConfig {
    Grid grid;  // 1D, M <= 14
    PotentialSpec V;
    Vec v_ext;
    std::vector<int> Ns;
    double t = 0.5;
    double dt = 1e-3;
    double eps_power = -1.0 / 3.0;  // eps = N^eps_power
    bool trapped = true;            // trapped orbitals, else free plane waves
    int threads = 1;
};

// ||gamma^(1)_{N,t} - omega_t||_HS / ||omega_t||_HS for Slater initial data
SweepRow hf_distance(const ConvergeHFConfig& cfg, int N);
SweepResult converge_hf(const ConvergeHFConfig& cfg);

json to_json(const SweepResult& r);

// ---------------------------------------------------------------- configs

// the published configuration schema (schema/config.schema.json)
const json& config_schema();
const std::vector<std::string>& experiment_kinds();
// defaults filled in, unknown keys and out-of-range values rejected
// (contract error listing every violation)
json resolve_config(const std::string& kind, const json& raw);

std::string config_hash(const json& resolved);
std::string run_id(const std::string& kind, const std::string& hash, std::uint64_t seed);

Grid grid_from(const json& j);
PotentialSpec potential_from(const json& j);
Vec v_ext_from(const Grid& g, const json& j);
// Gaussian wave packet exp(-|x-x0|^2/(4 w^2) + i p.x), grid normalised
CVec phi0_from(const Grid& g, const json& j);

// ---------------------------------------------------------------- runs

struct CsvColumn {
    std::string name, unit;
};

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& kind, const std::string& run_id,
              const std::string& hash, const std::vector<CsvColumn>& cols);
    ~CsvWriter();  // writes the file
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;
    void row(const std::vector<double>& v);
    void row_text(const std::vector<std::string>& v);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::string buf_;
    size_t ncols_;
};

struct RunOptions {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 1;
};

// runs one experiment and writes <kind>*.csv, <kind>.summary.json and
// <kind>.config.json into out_dir; returns the summary
json run_experiment(const std::string& kind, const json& raw_config, const RunOptions& opt);

std::string format_double(double v);

}  // namespace qmf
