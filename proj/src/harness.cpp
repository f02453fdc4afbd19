#include "qmf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "qmf/bbgky.hpp"
#include "qmf/effective.hpp"
#include "qmf/fluctuations.hpp"
#include "qmf/manybody.hpp"
#include "qmf/scattering.hpp"
#include "qmf/semiclassics.hpp"

namespace qmf {

namespace {

#include "qmf_schema.inc"

template <class F>
void parallel_for(int n, int threads, F f) {
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i; (i = next++) < n;) f(i);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::min(threads, n); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

double num(const json& j, const char* key) { return j.at(key).get<double>(); }
int inum(const json& j, const char* key) { return static_cast<int>(std::llround(j.at(key).get<double>())); }

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- fits

FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double floor) {
    if (x.size() != y.size()) throw Error(ErrorKind::shape, "x and y differ in length");
    if (x.size() < 3) throw Error(ErrorKind::contract, "too few points: a fit needs at least 3");
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !std::isfinite(y[i])) throw Error(ErrorKind::contract, "degenerate data");
        if (!(std::abs(y[i]) > floor)) throw Error(ErrorKind::contract, "degenerate data");
    }
    const size_t n = x.size();
    Mat A(static_cast<long>(n), 2);
    Vec b(static_cast<long>(n));
    for (size_t i = 0; i < n; ++i) {
        A(static_cast<long>(i), 0) = 1.0;
        A(static_cast<long>(i), 1) = std::log(x[i]);
        b[static_cast<long>(i)] = std::log(std::abs(y[i]));
    }
    Vec c = A.colPivHouseholderQr().solve(b);
    FitResult f;
    f.exponent = c[1];
    f.prefactor = std::exp(c[0]);
    f.residual = (A * c - b).norm();
    f.x = x;
    f.y = y;
    if (!std::isfinite(f.exponent)) throw Error(ErrorKind::numerical, "fit exponent is not finite");
    return f;
}

json to_json(const FitResult& f) {
    return json{{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"residual", f.residual}, {"x", f.x},
                {"y", f.y}};
}

// ---------------------------------------------------------------- sweeps

bool SweepResult::monotone_decreasing() const {
    double prev = INFINITY;
    for (const auto& r : rows) {
        if (!r.feasible) continue;
        if (!(r.distance < prev)) return false;
        prev = r.distance;
    }
    return true;
}

namespace {

SweepResult finish_sweep(std::vector<SweepRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.N < b.N; });
    SweepResult res;
    res.rows = std::move(rows);
    std::vector<double> x, y;
    for (const auto& r : res.rows)
        if (r.feasible) {
            x.push_back(r.N);
            y.push_back(r.distance);
        }
    try {
        res.fit = fit_power_law(x, y);
        res.fitted = true;
    } catch (const Error& e) {
        res.fit_error = e.what();
    }
    return res;
}

template <class F>
SweepResult sweep(const std::vector<int>& Ns, int threads, F point) {
    std::vector<SweepRow> rows(Ns.size());
    parallel_for(static_cast<int>(Ns.size()), threads, [&](int i) {
        const int N = Ns[static_cast<size_t>(i)];
        try {
            rows[static_cast<size_t>(i)] = point(N);
        } catch (const Error& e) {
            SweepRow r;
            r.N = N;
            r.feasible = false;
            r.note = std::string(to_string(e.kind())) + ": " + e.what();
            rows[static_cast<size_t>(i)] = r;
        }
    });
    return finish_sweep(std::move(rows));
}

long binomial(long n, long k) {
    double v = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    return v > 9e18 ? std::numeric_limits<long>::max() : std::llround(v);
}

}  // namespace

SweepRow hartree_distance(const ConvergeHartreeConfig& cfg, int N) {
    const Grid& g = cfg.grid;
    const int M = static_cast<int>(g.size());
    if (binomial(N + M - 1, N) > cfg.max_dim) throw Error(ErrorKind::refused, "bosonic sector too large");
    MeanFieldModel m = grid_model(g, cfg.V, cfg.v_ext);
    CVec c0 = cfg.phi0 * std::sqrt(g.cell());
    c0 /= c0.norm();
    auto b = FockBasis::boson_sector(M, N);
    FockVector psi = product_state(b, c0, N);
    SpMat H = fock_hamiltonian(*b, m.fock_model(N));
    if (cfg.t > 0) psi = propagate(psi, H, cfg.t, cfg.dt);
    CVec ct = cfg.t > 0 ? mode_hartree(m, c0, cfg.t, cfg.dt, 1 << 30).c.back() : c0;
    CMat gamma = reduced_density_k(psi, 1);
    CMat ref = static_cast<double>(N) * ct * ct.adjoint();
    SweepRow r;
    r.N = N;
    r.distance = trace_norm(gamma - ref) / N;
    r.reference_norm = trace_norm(ref);
    return r;
}

SweepResult converge_hartree(const ConvergeHartreeConfig& cfg) {
    return sweep(cfg.Ns, cfg.threads, [&](int N) { return hartree_distance(cfg, N); });
}

SweepRow hf_distance(const ConvergeHFConfig& cfg, int N) {
    const Grid& g = cfg.grid;
    if (g.d() != 1 || g.M() > 14) throw Error(ErrorKind::refused, "exact fermionic propagation needs 1D and M <= 14");
    if (N > g.M()) throw Error(ErrorKind::contract, "N exceeds the number of modes");
    const double eps = std::pow(static_cast<double>(N), cfg.eps_power);
    FermiState fs = cfg.trapped ? trapped_orbitals(g, cfg.v_ext, eps, N) : free_fermi_ground_state(g, N);
    ModeModel mm;
    mm.T = kinetic_matrix(g, eps);
    if (cfg.v_ext.size() > 0) mm.T.diagonal() += cfg.v_ext.cast<cplx>();
    Mat Vp = pair_matrix(g, cfg.V);
    mm.W = Vp / N;
    auto b = FockBasis::fermion_sector(g.M(), N);
    FockVector psi = slater_state(b, fs.orbitals);
    if (cfg.t > 0) psi = propagate(psi, fock_hamiltonian(*b, mm), cfg.t, cfg.dt, eps);
    HFConfig hc;
    hc.grid = g;
    hc.v_ext = cfg.v_ext;
    hc.V = cfg.V;
    hc.eps = eps;
    hc.N = N;
    hc.dt = cfg.dt;
    hc.sample_every = 1 << 30;
    CMat omega = cfg.t > 0 ? hf_solve(fs.omega, hc, cfg.t).omega.back() : fs.omega;
    CMat gamma = reduced_density_1(psi);
    SweepRow r;
    r.N = N;
    r.eps = eps;
    r.reference_norm = hs_norm(omega);
    r.distance = hs_norm(gamma - omega) / r.reference_norm;
    return r;
}

SweepResult converge_hf(const ConvergeHFConfig& cfg) {
    return sweep(cfg.Ns, cfg.threads, [&](int N) { return hf_distance(cfg, N); });
}

json to_json(const SweepResult& r) {
    json rows = json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"N", x.N},
                        {"eps", x.eps},
                        {"distance", x.distance},
                        {"reference_norm", x.reference_norm},
                        {"feasible", x.feasible},
                        {"note", x.note}});
    json j{{"rows", rows}, {"monotone_decreasing", r.monotone_decreasing()}};
    if (r.fitted)
        j["fit"] = to_json(r.fit);
    else
        j["fit_error"] = r.fit_error;
    return j;
}

// ---------------------------------------------------------------- configs

const json& config_schema() {
    static const json s = json::parse(kSchemaText);
    return s;
}

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (auto it = config_schema().at("experiments").begin(); it != config_schema().at("experiments").end(); ++it)
            out.push_back(it.key());
        return out;
    }();
    return k;
}

namespace {

json deref(const json& schema) {
    if (!schema.contains("$ref")) return schema;
    std::string ref = schema.at("$ref");
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) throw Error(ErrorKind::contract, "unsupported schema reference " + ref);
    json base = config_schema().at("definitions").at(ref.substr(prefix.size()));
    for (auto it = schema.begin(); it != schema.end(); ++it)
        if (it.key() != "$ref") base[it.key()] = it.value();
    return base;
}

bool type_ok(const std::string& type, const json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "number") return v.is_number();
    if (type == "integer") {
        if (v.is_number_integer()) return true;
        if (!v.is_number_float()) return false;
        double d = v.get<double>();
        return std::isfinite(d) && d == std::floor(d);
    }
    return false;
}

json validate(const json& schema_in, const json& v, const std::string& path, std::vector<std::string>& errors) {
    json schema = deref(schema_in);
    if (schema.contains("type") && !type_ok(schema.at("type"), v)) {
        errors.push_back(path + ": expected " + schema.at("type").get<std::string>());
        return v;
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema.at("enum"))
            if (e == v || (e.is_number() && v.is_number() && e.get<double>() == v.get<double>())) found = true;
        if (!found) errors.push_back(path + ": value " + v.dump() + " not in " + schema.at("enum").dump());
    }
    if (v.is_number()) {
        double d = v.get<double>();
        if (schema.contains("minimum") && d < schema.at("minimum").get<double>())
            errors.push_back(path + ": below minimum " + schema.at("minimum").dump());
        if (schema.contains("maximum") && d > schema.at("maximum").get<double>())
            errors.push_back(path + ": above maximum " + schema.at("maximum").dump());
        if (schema.contains("exclusiveMinimum") && !(d > schema.at("exclusiveMinimum").get<double>()))
            errors.push_back(path + ": must exceed " + schema.at("exclusiveMinimum").dump());
        if (!std::isfinite(d)) errors.push_back(path + ": not finite");
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema.at("minItems").get<size_t>())
            errors.push_back(path + ": fewer than " + schema.at("minItems").dump() + " items");
        if (schema.contains("maxItems") && v.size() > schema.at("maxItems").get<size_t>())
            errors.push_back(path + ": more than " + schema.at("maxItems").dump() + " items");
        json out = json::array();
        for (size_t i = 0; i < v.size(); ++i)
            out.push_back(schema.contains("items")
                              ? validate(schema.at("items"), v[i], path + "[" + std::to_string(i) + "]", errors)
                              : v[i]);
        return out;
    }
    if (v.is_object()) {
        json out = json::object();
        const json props = schema.value("properties", json::object());
        bool closed = schema.contains("additionalProperties") && schema.at("additionalProperties") == false;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (props.contains(it.key()))
                out[it.key()] = validate(props.at(it.key()), it.value(), path + "." + it.key(), errors);
            else if (closed)
                errors.push_back(path + ": unknown key '" + it.key() + "'");
            else
                out[it.key()] = it.value();
        }
        for (auto it = props.begin(); it != props.end(); ++it) {
            if (out.contains(it.key())) continue;
            json ps = deref(it.value());
            if (ps.contains("default")) out[it.key()] = validate(ps, ps.at("default"), path + "." + it.key(), errors);
        }
        for (const auto& r : schema.value("required", json::array()))
            if (!out.contains(r.get<std::string>())) errors.push_back(path + ": missing key '" + r.get<std::string>() + "'");
        return out;
    }
    return v;
}

}  // namespace

json resolve_config(const std::string& kind, const json& raw) {
    const json& ex = config_schema().at("experiments");
    if (!ex.contains(kind)) throw Error(ErrorKind::contract, "unknown experiment '" + kind + "'");
    if (!raw.is_object()) throw Error(ErrorKind::contract, "configuration must be a JSON object");
    if (raw.contains("experiment") && raw.at("experiment") != kind)
        throw Error(ErrorKind::contract, "config is for experiment " + raw.at("experiment").dump() + ", not '" + kind + "'");
    std::vector<std::string> errors;
    json out = validate(ex.at(kind), raw, "$", errors);
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw Error(ErrorKind::contract, msg);
    }
    out["experiment"] = kind;
    return out;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v, int digits) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf + 16 - digits);
}

}  // namespace

std::string config_hash(const json& resolved) { return hex(fnv1a(resolved.dump()), 16); }

std::string run_id(const std::string& kind, const std::string& hash, std::uint64_t seed) {
    return kind + "-" + hex(fnv1a(kind + ":" + hash + ":" + std::to_string(seed)), 8);
}

Grid grid_from(const json& j) { return Grid(inum(j, "d"), num(j, "L"), inum(j, "M")); }

PotentialSpec potential_from(const json& j) {
    const std::string kind = j.at("kind");
    const double A = num(j, "amplitude"), R = num(j, "range");
    switch (PotentialSpec::kind_from_string(kind)) {
        case PotentialSpec::Kind::zero: return PotentialSpec::zero();
        case PotentialSpec::Kind::gaussian: return PotentialSpec::gaussian(A, R);
        case PotentialSpec::Kind::square_well: return PotentialSpec::square_well(A, R);
        case PotentialSpec::Kind::hard_sphere: return PotentialSpec::hard_sphere(R);
        case PotentialSpec::Kind::soft_coulomb: return PotentialSpec::soft_coulomb(A, R);
        case PotentialSpec::Kind::tabulated:
            return PotentialSpec::tabulated(j.at("table_r").get<std::vector<double>>(),
                                            j.at("table_v").get<std::vector<double>>());
    }
    throw Error(ErrorKind::contract, "unknown potential kind " + kind);
}

Vec v_ext_from(const Grid& g, const json& j) {
    if (j.at("kind") == "none") return Vec();
    const double k = num(j, "strength");
    return sample(g, [k](const std::array<double, 3>& p) { return k * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); });
}

CVec phi0_from(const Grid& g, const json& j) {
    auto c = j.at("center").get<std::vector<double>>();
    auto p = j.at("momentum").get<std::vector<double>>();
    c.resize(3, 0.0);
    p.resize(3, 0.0);
    const double w = num(j, "width");
    CVec phi(g.size());
    for (long i = 0; i < g.size(); ++i) {
        auto x = g.point(i);
        double r2 = 0, ph = 0;
        for (int a = 0; a < g.d(); ++a) {
            double dx = g.wrap(x[a] - c[static_cast<size_t>(a)]);
            r2 += dx * dx;
            ph += p[static_cast<size_t>(a)] * x[a];
        }
        phi[i] = std::exp(-r2 / (4 * w * w)) * std::polar(1.0, ph);
    }
    return phi / l2_norm(g, phi);
}

// ---------------------------------------------------------------- CSV

CsvWriter::CsvWriter(const std::string& path, const std::string& kind, const std::string& run_id,
                     const std::string& hash, const std::vector<CsvColumn>& cols)
    : path_(path), ncols_(cols.size()) {
    buf_ += "# experiment: " + kind + "\n";
    buf_ += "# run_id: " + run_id + "\n";
    buf_ += "# config_hash: " + hash + "\n";
    buf_ += "# units:";
    for (const auto& c : cols) buf_ += " " + c.name + "[" + c.unit + "]";
    buf_ += "\n";
    for (size_t i = 0; i < cols.size(); ++i) buf_ += (i ? "," : "") + cols[i].name;
    buf_ += "\n";
}

void CsvWriter::row(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(format_double(x));
    row_text(s);
}

void CsvWriter::row_text(const std::vector<std::string>& v) {
    if (v.size() != ncols_) throw Error(ErrorKind::shape, "row width differs from the header in " + path_);
    for (size_t i = 0; i < v.size(); ++i) buf_ += (i ? "," : "") + v[i];
    buf_ += "\n";
}

CsvWriter::~CsvWriter() {
    std::ofstream f(path_, std::ios::binary);
    f << buf_;
}

// ---------------------------------------------------------------- runs

namespace {

struct RunContext {
    std::string kind, id, hash;
    std::filesystem::path dir;
    std::uint64_t seed = 0;
    int threads = 1;
    json files = json::array();

    std::unique_ptr<CsvWriter> csv(const std::string& name, const std::vector<CsvColumn>& cols) {
        files.push_back(name);
        return std::make_unique<CsvWriter>((dir / name).string(), kind, id, hash, cols);
    }
};

std::vector<CsvColumn> coord_columns(const Grid& g) {
    static const char* names[] = {"x", "y", "z"};
    std::vector<CsvColumn> c;
    for (int a = 0; a < g.d(); ++a) c.push_back({names[a], "length"});
    return c;
}

void coords(const Grid& g, long i, std::vector<double>& row) {
    auto p = g.point(i);
    for (int a = 0; a < g.d(); ++a) row.push_back(p[static_cast<size_t>(a)]);
}

json trajectory_outputs(RunContext& ctx, const Grid& g, const Trajectory& tr) {
    {
        auto cols = std::vector<CsvColumn>{{"t", "time"}};
        for (auto c : coord_columns(g)) cols.push_back(c);
        cols.push_back({"re_phi", "length^-d/2"});
        cols.push_back({"im_phi", "length^-d/2"});
        auto w = ctx.csv(ctx.kind + ".csv", cols);
        for (size_t s = 0; s < tr.t.size(); ++s)
            for (long i = 0; i < g.size(); ++i) {
                std::vector<double> row{tr.t[s]};
                coords(g, i, row);
                row.push_back(tr.phi[s][i].real());
                row.push_back(tr.phi[s][i].imag());
                w->row(row);
            }
    }
    auto w = ctx.csv(ctx.kind + "_observables.csv", {{"t", "time"}, {"mass", "1"}, {"energy", "energy"}});
    double dm = 0, de = 0;
    for (size_t s = 0; s < tr.t.size(); ++s) {
        w->row({tr.t[s], tr.mass[s], tr.energy[s]});
        dm = std::max(dm, std::abs(tr.mass[s] - tr.mass[0]));
        de = std::max(de, std::abs(tr.energy[s] - tr.energy[0]) / std::max(1.0, std::abs(tr.energy[0])));
    }
    return json{{"mass_drift", dm}, {"energy_drift", de}, {"final_energy", tr.energy.back()}, {"samples", tr.t.size()}};
}

EffectiveConfig effective_config(const json& c, const Grid& g, const Vec& vext) {
    EffectiveConfig ec;
    ec.grid = g;
    ec.v_ext = vext;
    ec.dt = num(c, "dt");
    ec.order = inum(c, "order");
    ec.sample_every = inum(c, "sample_every");
    return ec;
}

json run_scatter(RunContext& ctx, const json& c) {
    PotentialSpec V = potential_from(c.at("potential"));
    const double Rmax = num(c, "R_max");
    const int mesh = inum(c, "mesh");
    ScatteringSolution sol = solve_zero_energy(V, Rmax, mesh);
    {
        auto w = ctx.csv("scatter.csv", {{"r", "length"}, {"f", "1"}, {"u", "length"}, {"V", "energy"}});
        for (size_t i = 0; i < sol.r.size(); ++i) w->row({sol.r[i], sol.f[i], sol.u[i], V(sol.r[i])});
    }
    json res{{"a0", sol.a0}, {"fit_residual", sol.fit_residual}, {"R_V", sol.R_V}};
    res["a0_integral"] = scattering_length_integral(sol, V);
    try {
        res["rho"] = smallness_parameter(V);
    } catch (const Error& e) {
        res["rho"] = nullptr;
        res["rho_note"] = e.what();
    }
    FpropReport fp = verify_fprop_bounds(sol);
    res["fprop"] = {{"c_lower", fp.c_lower}, {"c_grad", fp.c_grad}, {"f_max", fp.f_max}, {"monotone", fp.monotone},
                    {"pass", fp.pass}};
    auto w = ctx.csv("scatter_rescaling.csv", {{"N", "1"}, {"a0_N", "length"}, {"N_a0_N", "length"}});
    json resc = json::array();
    for (int N : c.at("N_list").get<std::vector<int>>()) {
        double aN = solve_zero_energy(V.scaled(double(N) * N, N), Rmax / N, mesh).a0;
        w->row({double(N), aN, N * aN});
        resc.push_back({{"N", N}, {"a0_N", aN}, {"relative_error", std::abs(N * aN - sol.a0) / sol.a0}});
    }
    res["rescaling"] = resc;
    return res;
}

json run_hartree(RunContext& ctx, const json& c) {
    Grid g = grid_from(c.at("grid"));
    Vec vext = v_ext_from(g, c.at("v_ext"));
    Trajectory tr = hartree_solve(phi0_from(g, c.at("phi0")), potential_from(c.at("potential")),
                                  effective_config(c, g, vext), num(c, "T"));
    return trajectory_outputs(ctx, g, tr);
}

json run_gp(RunContext& ctx, const json& c) {
    Grid g = grid_from(c.at("grid"));
    Vec vext = v_ext_from(g, c.at("v_ext"));
    EffectiveConfig ec = effective_config(c, g, vext);
    CVec phi = phi0_from(g, c.at("phi0"));
    if (c.at("modified").get<bool>()) {
        ScatteringSolution sol = solve_zero_energy(potential_from(c.at("potential")), num(c, "R_max"));
        json r = trajectory_outputs(ctx, g, gp_modified_solve(phi, sol, num(c, "N"), ec, num(c, "T")));
        r["a0"] = sol.a0;
        return r;
    }
    return trajectory_outputs(ctx, g, gp_solve(phi, num(c, "a0"), ec, num(c, "T")));
}

FermiState initial_orbitals(const json& c, const Grid& g, const Vec& vext, double eps, int N) {
    return c.at("initial") == "free" ? free_fermi_ground_state(g, N) : trapped_orbitals(g, vext, eps, N);
}

json run_hf(RunContext& ctx, const json& c) {
    HFConfig hc;
    hc.grid = grid_from(c.at("grid"));
    hc.v_ext = v_ext_from(hc.grid, c.at("v_ext"));
    hc.V = potential_from(c.at("potential"));
    hc.eps = num(c, "eps");
    hc.N = inum(c, "N");
    hc.exchange = c.at("exchange");
    hc.dt = num(c, "dt");
    hc.sample_every = inum(c, "sample_every");
    FermiState fs = initial_orbitals(c, hc.grid, hc.v_ext, hc.eps, inum(c, "N"));
    HFTrajectory tr = hf_solve(fs.omega, hc, num(c, "T"));
    auto w = ctx.csv("hf.csv", {{"t", "time"}, {"trace", "1"}, {"min_eig", "1"}, {"max_eig", "1"}, {"energy", "energy"}});
    Vec ev0 = hermitian_eigenvalues(tr.omega[0]);
    double spec = 0, idem = 0, de = 0;
    for (size_t s = 0; s < tr.t.size(); ++s) {
        Vec ev = hermitian_eigenvalues(tr.omega[s]);
        w->row({tr.t[s], tr.trace[s], ev.minCoeff(), ev.maxCoeff(), tr.energy[s]});
        spec = std::max(spec, (ev - ev0).cwiseAbs().maxCoeff());
        idem = std::max(idem, (tr.omega[s] * tr.omega[s] - tr.omega[s]).cwiseAbs().maxCoeff());
        de = std::max(de, std::abs(tr.energy[s] - tr.energy[0]) / std::max(1.0, std::abs(tr.energy[0])));
    }
    return json{{"spectrum_drift", spec}, {"idempotence_defect", idem}, {"energy_drift", de}};
}

json run_exact(RunContext& ctx, const json& c) {
    Grid g = grid_from(c.at("grid"));
    Vec vext = v_ext_from(g, c.at("v_ext"));
    const int N = inum(c, "N");
    const double eps = num(c, "eps");
    ModeModel mm;
    mm.T = kinetic_matrix(g, eps);
    if (vext.size() > 0) mm.T.diagonal() += vext.cast<cplx>();
    mm.W = pair_matrix(g, potential_from(c.at("potential"))) / N;
    const int M = static_cast<int>(g.size());
    FockVector psi;
    if (c.at("statistics") == "boson") {
        auto b = FockBasis::boson_sector(M, N);
        CVec c0 = phi0_from(g, c.at("phi0")) * std::sqrt(g.cell());
        psi = product_state(b, c0 / c0.norm(), N);
    } else {
        psi = slater_state(FockBasis::fermion_sector(M, N), trapped_orbitals(g, vext, eps, N).orbitals);
    }
    SpMat H = fock_hamiltonian(*psi.basis, mm);
    const int K = inum(c, "checkpoints");
    const double T = num(c, "T"), dt = num(c, "dt");
    auto energy = [&](const FockVector& v) { return v.amp.dot(H * v.amp).real(); };
    const double E0 = energy(psi);
    double nd = 0, ed = 0;
    {
        auto w = ctx.csv("exact.csv", {{"t", "time"}, {"norm", "1"}, {"energy", "energy"}});
        w->row({0.0, psi.norm(), E0});
        for (int k = 1; k <= K; ++k) {
            psi = propagate(psi, H, T / K, dt, eps);
            double E = energy(psi);
            w->row({k * T / K, psi.norm(), E});
            nd = std::max(nd, std::abs(psi.norm() - 1));
            ed = std::max(ed, std::abs(E - E0) / std::max(1.0, std::abs(E0)));
        }
    }
    ctx.files.push_back("exact_state.csv");
    std::ofstream f(ctx.dir / "exact_state.csv", std::ios::binary);
    f << "# experiment: exact\n# run_id: " << ctx.id << "\n# config_hash: " << ctx.hash
      << "\n# units: index[1] occupation[1] re[1] im[1]\n"
      << fock_vector_csv(psi);
    return json{{"dimension", psi.basis->size()}, {"norm_drift", nd}, {"energy_drift", ed}};
}

json sweep_outputs(RunContext& ctx, const SweepResult& r, const char* name) {
    auto w = ctx.csv(name, {{"N", "1"}, {"eps", "1"}, {"distance", "1"}, {"feasible", "bool"}});
    for (const auto& x : r.rows) w->row({double(x.N), x.eps, x.distance, x.feasible ? 1.0 : 0.0});
    return to_json(r);
}

json run_converge_hartree(RunContext& ctx, const json& c) {
    ConvergeHartreeConfig cfg;
    cfg.grid = grid_from(c.at("grid"));
    cfg.V = potential_from(c.at("potential"));
    cfg.v_ext = v_ext_from(cfg.grid, c.at("v_ext"));
    cfg.phi0 = phi0_from(cfg.grid, c.at("phi0"));
    cfg.Ns = c.at("N_list").get<std::vector<int>>();
    cfg.t = num(c, "t");
    cfg.dt = num(c, "dt");
    cfg.threads = ctx.threads;
    return sweep_outputs(ctx, converge_hartree(cfg), "converge_hartree.csv");
}

json run_converge_hf(RunContext& ctx, const json& c) {
    ConvergeHFConfig cfg;
    cfg.grid = grid_from(c.at("grid"));
    cfg.V = potential_from(c.at("potential"));
    cfg.v_ext = v_ext_from(cfg.grid, c.at("v_ext"));
    cfg.Ns = c.at("N_list").get<std::vector<int>>();
    cfg.t = num(c, "t");
    cfg.dt = num(c, "dt");
    cfg.eps_power = num(c, "eps_power");
    cfg.trapped = c.at("initial") == "trapped";
    cfg.threads = ctx.threads;
    return sweep_outputs(ctx, converge_hf(cfg), "converge_hf.csv");
}

CMat matrix_from(const json& j) {
    const size_t n = j.size();
    CMat m(static_cast<long>(n), static_cast<long>(n));
    for (size_t a = 0; a < n; ++a) {
        if (j[a].size() != n) throw Error(ErrorKind::shape, "model matrices must be square");
        for (size_t b = 0; b < n; ++b) m(static_cast<long>(a), static_cast<long>(b)) = j[a][b].get<double>();
    }
    return m;
}

json run_fluct(RunContext& ctx, const json& c) {
    const std::string kind = c.at("kind");
    const double T = num(c, "T"), dt = num(c, "dt"), N = num(c, "N");
    const int samples = inum(c, "samples");
    if (kind == "dressed") {
        Grid g = grid_from(c.at("grid"));
        ScatteringSolution sol = solve_zero_energy(potential_from(c.at("potential")), num(c, "R_max"));
        // uniform condensate: the plane-wave mode set contains it
        CVec phi = CVec::Constant(g.size(), 1.0 / std::sqrt(std::pow(g.L(), g.d())));
        Vec vext = v_ext_from(g, c.at("v_ext"));
        CMat modes = plane_wave_modes(g, inum(c, "n2_max"));
        auto w = ctx.csv("fluct_dressed.csv", {{"N", "1"},
                                               {"E_plain", "energy"},
                                               {"E_dressed", "energy"},
                                               {"E_dressed_formula", "energy"},
                                               {"gap", "energy"},
                                               {"truncation_error", "energy"}});
        json rows = json::array();
        for (int n : c.at("N_list").get<std::vector<int>>()) {
            DressedSetup s = dressed_setup(g, phi, vext, sol, n, modes);
            auto with = gp_dressed_energy(s, inum(c, "n_max"), true);
            auto without = gp_dressed_energy(s, inum(c, "n_max"), false);
            double gap = without.direct.total - with.direct.total;
            w->row({double(n), without.direct.total, with.direct.total, with.formula.total, gap,
                    with.truncation_error});
            rows.push_back({{"N", n},
                            {"E_plain", without.direct.total},
                            {"E_dressed", with.direct.total},
                            {"E_dressed_formula", with.formula.total},
                            {"gap", gap},
                            {"truncation_error", with.truncation_error}});
        }
        return json{{"rows", rows}, {"a0", sol.a0}};
    }

    MeanFieldModel m;
    CVec c0;
    if (c.at("use_grid").get<bool>()) {
        Grid g = grid_from(c.at("grid"));
        m = grid_model(g, potential_from(c.at("potential")), v_ext_from(g, c.at("v_ext")));
        c0 = phi0_from(g, c.at("phi0")) * std::sqrt(g.cell());
    } else {
        m.T = matrix_from(c.at("model").at("T"));
        m.V = matrix_from(c.at("model").at("V")).real();
        auto v = c.at("model").at("c0").get<std::vector<double>>();
        c0 = Eigen::Map<Vec>(v.data(), static_cast<long>(v.size())).cast<cplx>();
        if (c0.size() != m.modes()) throw Error(ErrorKind::shape, "c0 does not match the model size");
    }
    c0 /= c0.norm();
    const int steps = std::max(1, static_cast<int>(std::llround(T / dt)));
    const int every = std::max(1, steps / samples);

    if (kind == "cancellation") {
        ModeTrajectory tr = mode_hartree(m, c0, T, dt, every);
        auto w = ctx.csv("fluct_cancellation.csv", {{"t", "time"}, {"linear_norm", "1"}});
        double mx = 0;
        for (size_t s = 0; s < tr.t.size(); ++s) {
            double l = generator_LN(m, tr.c[s], mode_hartree_rhs(m, tr.c[s]), N).linear_norm;
            w->row({tr.t[s], l});
            mx = std::max(mx, l);
        }
        return json{{"max_linear_norm", mx}};
    }
    if (kind == "theta" || kind == "clt") {
        ThetaRun run = theta_propagate(m, c0, 0.0, T, dt, every);
        if (kind == "theta") {
            ThetaRun a = theta_propagate(m, c0, 0.0, T / 2, dt);
            ThetaRun b = theta_propagate(m, a.c_t, T / 2, T, dt);
            BogoliubovMap comp = b.theta * a.theta;
            double err = std::max((comp.U - run.theta.U).cwiseAbs().maxCoeff(),
                                  (comp.V - run.theta.V).cwiseAbs().maxCoeff());
            auto w = ctx.csv("fluct_theta.csv", {{"t", "time"}, {"constraint_residual", "1"}});
            for (size_t s = 0; s < run.t.size(); ++s) w->row({run.t[s], run.samples[s].constraint_residual()});
            return json{{"max_residual", run.max_residual}, {"composition_error", err}};
        }
        CMat J = CMat::Zero(m.modes(), m.modes());
        for (int j = 0; j < m.modes(); ++j) J(j, j) = j;
        auto w = ctx.csv("fluct_clt.csv", {{"t", "time"}, {"variance", "1"}});
        for (size_t s = 0; s < run.t.size(); ++s) w->row({run.t[s], clt_variance(run.samples[s], c0, run.c[s], J)});
        cplx m1 = c0.dot(J * c0), m2 = c0.dot(J * J * c0);
        return json{{"initial_variance", clt_variance(BogoliubovMap::identity(m.modes()), c0, c0, J)},
                    {"initial_variance_reference", (m2 - m1 * m1).real()}};
    }
    if (kind == "growth") {
        auto b = FockBasis::bosons(m.modes(), default_fock_cap(N));
        GrowthResult g = fluctuation_growth_experiment(m, c0, N, FockVector::vacuum(b), T, samples, dt);
        auto w = ctx.csv("fluct_growth.csv", {{"t", "time"}, {"number", "1"}});
        for (size_t s = 0; s < g.t.size(); ++s) w->row({g.t[s], g.number[s]});
        return json{{"D", g.fit.D}, {"K", g.fit.K}, {"envelope_holds", g.fit.holds}, {"max_boundary", g.max_boundary}};
    }
    if (kind == "norm") {
        std::vector<double> times;
        for (int k = 1; k <= samples; ++k) times.push_back(T * k / samples);
        auto w = ctx.csv("fluct_norm.csv", {{"N", "1"}, {"t", "time"}, {"residual", "1"}});
        std::vector<double> xs, ys;
        for (int n : c.at("N_list").get<std::vector<int>>()) {
            NormResult r = norm_approximation_experiment(m, c0, n, times, 0, dt);
            for (size_t s = 0; s < r.t.size(); ++s) w->row({double(n), r.t[s], r.residual[s]});
            xs.push_back(n);
            ys.push_back(r.residual.back());
        }
        json res;
        try {
            res["fit"] = to_json(fit_power_law(xs, ys));
        } catch (const Error& e) {
            res["fit_error"] = e.what();
        }
        return res;
    }
    throw Error(ErrorKind::contract, "unknown fluct kind " + kind);
}

json run_tf(RunContext& ctx, const json& c) {
    TFConfig cfg;
    cfg.grid = grid_from(c.at("grid"));
    cfg.v_ext = v_ext_from(cfg.grid, c.at("v_ext"));
    cfg.V = potential_from(c.at("potential"));
    cfg.c_tf = num(c, "c_tf");
    cfg.tol = num(c, "tol");
    cfg.max_iter = inum(c, "max_iter");
    TFState s = tf_minimize(cfg);
    Vec phi = tf_potential(cfg, s.rho);
    auto cols = coord_columns(cfg.grid);
    cols.push_back({"rho", "length^-d"});
    cols.push_back({"phi", "energy"});
    auto w = ctx.csv("tf.csv", cols);
    for (long i = 0; i < cfg.grid.size(); ++i) {
        std::vector<double> row;
        coords(cfg.grid, i, row);
        row.push_back(s.rho[i]);
        row.push_back(phi[i]);
        w->row(row);
    }
    return json{{"mu", s.mu},
                {"energy", s.energy},
                {"residual", s.residual},
                {"iterations", s.iterations},
                {"mass", integrate(cfg.grid, s.rho)}};
}

HFConfig hf_config_from(const json& c, const Grid& g, const Vec& vext, double eps, int N) {
    HFConfig hc;
    hc.grid = g;
    hc.v_ext = vext;
    hc.V = potential_from(c.at("potential"));
    hc.eps = eps;
    hc.N = N;
    hc.dt = num(c, "dt");
    return hc;
}

json run_semiclass(RunContext& ctx, const json& c) {
    const std::string kind = c.at("kind");
    Grid g = grid_from(c.at("grid"));
    Vec vext = v_ext_from(g, c.at("v_ext"));
    const double eps = num(c, "eps");
    const int N = inum(c, "N");
    if (kind == "roundtrip") {
        const double sx = num(c, "x_width"), sv = num(c, "v_width");
        PhaseSpaceDensity p = sample_phase_space(
            g, eps, [&](double x, double v) { return std::exp(-x * x / (2 * sx * sx) - v * v / (2 * sv * sv)); });
        PhaseSpaceDensity back = wigner_transform(weyl_quantize(p), g, eps);
        Vec X = p.X(), v = p.v();
        auto w = ctx.csv("semiclass_roundtrip.csv", {{"x", "length"}, {"v", "velocity"}, {"occ", "1"}, {"back", "1"}});
        for (long a = 0; a < X.size(); ++a)
            for (long r = 0; r < v.size(); ++r) w->row({X[a], v[r], p.occ(a, r), back.occ(a, r)});
        return json{{"max_error", (back.occ - p.occ).cwiseAbs().maxCoeff() / p.occ.cwiseAbs().maxCoeff()}};
    }
    if (kind == "commutators") {
        CommutatorReport r = commutator_diagnostics(trapped_orbitals(g, vext, eps, N).omega, g, eps);
        auto w = ctx.csv("semiclass_commutators.csv",
                         {{"operator", "name"}, {"x_tr", "1"}, {"x_hs", "1"}, {"grad_tr", "1"}, {"grad_hs", "1"}});
        auto put = [&](const char* name, const CommutatorNorms& n) {
            w->row_text({name, format_double(n.x_tr[0]), format_double(n.x_hs[0]), format_double(n.grad_tr[0]),
                         format_double(n.grad_hs[0])});
            return json{{"x_tr", n.x_tr[0]}, {"x_hs", n.x_hs[0]}, {"grad_tr", n.grad_tr[0]}, {"grad_hs", n.grad_hs[0]}};
        };
        json res;
        res["omega"] = put("omega", r.omega);
        res["sqrt_omega"] = put("sqrt_omega", r.sqrt_omega);
        res["sqrt_one_minus"] = put("sqrt_one_minus", r.sqrt_one_minus);
        return res;
    }
    if (kind == "propagation") {
        CommutatorPropagation p = commutator_propagation_experiment(
            trapped_orbitals(g, vext, eps, N).omega, hf_config_from(c, g, vext, eps, N), num(c, "T"), inum(c, "samples"));
        auto w = ctx.csv("semiclass_propagation.csv",
                         {{"t", "time"}, {"x_tr", "1"}, {"grad_tr", "1"}, {"energy", "energy"}});
        for (size_t s = 0; s < p.t.size(); ++s) w->row({p.t[s], p.x_tr[s], p.grad_tr[s], p.energy[s]});
        auto fj = [](const GrowthFit& f) {
            return json{{"a", f.a}, {"b", f.b}, {"q", f.q}, {"residual", f.residual},
                        {"super_exponential", f.super_exponential}, {"accepted", f.accepted}};
        };
        return json{{"fit_x", fj(p.fit_x)}, {"fit_grad", fj(p.fit_grad)}};
    }
    if (kind == "exchange" || kind == "lieb_thirring") {
        const bool ex = kind == "exchange";
        auto w = ctx.csv("semiclass_" + kind + ".csv", {{"eps", "1"}, {"N", "1"}, {ex ? "tr_commutator_over_eps" : "ratio", "1"}});
        std::vector<double> vals;
        for (double e : c.at("eps_list").get<std::vector<double>>()) {
            int n = std::max(1, static_cast<int>(std::llround(num(c, "n_per_inverse_eps") / e)));
            CMat omega = trapped_orbitals(g, vext, e, n).omega;
            double val = ex ? exchange_commutator(omega, g, potential_from(c.at("potential")), n) / e
                            : lieb_thirring_ratio(omega, g);
            w->row({e, double(n), val});
            vals.push_back(val);
        }
        double lo = *std::min_element(vals.begin(), vals.end()), hi = *std::max_element(vals.begin(), vals.end());
        return json{{"values", vals}, {"max_over_min", hi / lo}};
    }
    if (kind == "fermi_dirac") {
        TFConfig tc;
        tc.grid = g;
        tc.v_ext = vext;
        tc.V = potential_from(c.at("potential"));
        TFState tf = tf_minimize(tc);
        const double n_fd = num(c, "n_per_inverse_eps") / eps;
        FermiDiracState fd = fermi_dirac_state(g, eps, tf.rho, num(c, "temperature"), 0.0, n_fd);
        Vec ev = hermitian_eigenvalues(fd.omega);
        auto w = ctx.csv("semiclass_fermi_dirac.csv", {{"x", "length"}, {"density", "length^-1"}, {"rho_tf", "length^-1"}});
        for (int i = 0; i < g.M(); ++i) w->row({g.x(i), fd.omega(i, i).real() / g.h(), tf.rho[i]});
        return json{{"c", fd.c}, {"trace", fd.omega.trace().real()}, {"min_eig", ev.minCoeff()}, {"max_eig", ev.maxCoeff()}};
    }
    throw Error(ErrorKind::contract, "unknown semiclass kind " + kind);
}

json run_bbgky(RunContext& ctx, const json& c) {
    Grid g = grid_from(c.at("grid"));
    Vec vext = v_ext_from(g, c.at("v_ext"));
    PotentialSpec V = potential_from(c.at("potential"));
    const int N = inum(c, "N"), k = inum(c, "k");
    const int M = static_cast<int>(g.size());
    MeanFieldModel m = grid_model(g, V, vext);
    CVec c0 = phi0_from(g, c.at("phi0")) * std::sqrt(g.cell());
    c0 /= c0.norm();
    auto b = FockBasis::boson_sector(M, N);
    SpMat H = fock_hamiltonian(*b, m.fock_model(N));
    SpMat Hneg = -H;
    const double t0 = num(c, "t0");
    FockVector mid = product_state(b, c0, N);
    if (t0 > 0) mid = propagate(mid, H, t0, 1e-3);
    auto w = ctx.csv("bbgky.csv", {{"dt", "time"}, {"residual", "1"}, {"derivative_norm", "1"}});
    json rows = json::array();
    std::vector<double> res;
    for (double dt : c.at("dt_list").get<std::vector<double>>()) {
        FockVector after = propagate(mid, H, dt, std::min(dt, 1e-3));
        FockVector before = propagate(mid, Hneg, dt, std::min(dt, 1e-3));
        ConsistencyReport r = exact_consistency_check(before, mid, after, dt, k, m.T, m.V);
        w->row({dt, r.residual, r.derivative_norm});
        rows.push_back({{"dt", dt}, {"residual", r.residual}, {"derivative_norm", r.derivative_norm}});
        res.push_back(r.residual);
    }
    json out{{"consistency", rows}};
    json ratios = json::array();
    for (size_t i = 1; i < res.size(); ++i) ratios.push_back(res[i - 1] / res[i]);
    out["richardson_ratios"] = ratios;

    ModeTrajectory tr = mode_hartree(m, c0, t0, 1e-3, 1 << 30);
    CVec ct = tr.c.back();
    out["infinite_hierarchy_residual"] = infinite_hierarchy_residual(ct, mode_hartree_rhs(m, ct), k, m.T, m.V);

    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> nd;
    double worst = 0;
    const long P = M;
    for (int s = 0; s < inum(c, "bound_samples"); ++s) {
        CMat A(P * P, 1 + static_cast<long>(rng() % static_cast<std::uint64_t>(P)));
        for (long i = 0; i < A.size(); ++i) A.data()[i] = cplx(nd(rng), nd(rng));
        CMat gamma = A * A.adjoint();
        gamma /= gamma.trace().real();
        worst = std::max(worst, collision_trace_bound_check(gamma, m.V, 1));
    }
    out["max_bound_ratio"] = worst;
    return out;
}

}  // namespace

json run_experiment(const std::string& kind, const json& raw, const RunOptions& opt) {
    if (kind == "report") throw Error(ErrorKind::contract, "reports are produced by emit_report");
    json cfg = resolve_config(kind, raw);
    RunContext ctx;
    ctx.kind = kind;
    ctx.hash = config_hash(cfg);
    ctx.id = run_id(kind, ctx.hash, opt.seed);
    ctx.dir = opt.out_dir;
    ctx.seed = opt.seed;
    ctx.threads = std::max(1, opt.threads);
    std::filesystem::create_directories(ctx.dir);
    std::string stem = kind;
    std::replace(stem.begin(), stem.end(), '-', '_');
    if (cfg.contains("kind")) stem += "_" + cfg.at("kind").get<std::string>();
    ctx.kind = stem;

    json results;
    if (kind == "scatter") results = run_scatter(ctx, cfg);
    else if (kind == "hartree") results = run_hartree(ctx, cfg);
    else if (kind == "gp") results = run_gp(ctx, cfg);
    else if (kind == "hf") results = run_hf(ctx, cfg);
    else if (kind == "exact") results = run_exact(ctx, cfg);
    else if (kind == "converge-hartree") results = run_converge_hartree(ctx, cfg);
    else if (kind == "converge-hf") results = run_converge_hf(ctx, cfg);
    else if (kind == "fluct") results = run_fluct(ctx, cfg);
    else if (kind == "tf") results = run_tf(ctx, cfg);
    else if (kind == "semiclass") results = run_semiclass(ctx, cfg);
    else if (kind == "bbgky") results = run_bbgky(ctx, cfg);
    else throw Error(ErrorKind::contract, "unknown experiment '" + kind + "'");

    json summary{{"experiment", kind},
                 {"run_id", ctx.id},
                 {"config_hash", ctx.hash},
                 {"seed", opt.seed},
                 {"files", ctx.files},
                 {"results", results}};
    std::ofstream(ctx.dir / (stem + ".config.json"), std::ios::binary) << cfg.dump(2) << "\n";
    std::ofstream(ctx.dir / (stem + ".summary.json"), std::ios::binary) << summary.dump(2) << "\n";
    return summary;
}

}  // namespace qmf
