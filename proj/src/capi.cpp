#include "qmf/qmf.h"

#include <fstream>
#include <sstream>
#include <string>

#include "qmf/harness.hpp"
#include "qmf/report.hpp"
#include "qmf/scattering.hpp"

struct qmf_config {
    std::string experiment;
    qmf::json resolved;
    std::string text, hash;
};

struct qmf_result {
    std::string text;
};

namespace {

thread_local std::string last_error;

qmf_status status_of(qmf::ErrorKind k) {
    using qmf::ErrorKind;
    switch (k) {
        case ErrorKind::shape: return QMF_ERR_SHAPE;
        case ErrorKind::contract: return QMF_ERR_CONTRACT;
        case ErrorKind::domain: return QMF_ERR_DOMAIN;
        case ErrorKind::unsupported: return QMF_ERR_UNSUPPORTED;
        case ErrorKind::refused: return QMF_ERR_REFUSED;
        case ErrorKind::truncation: return QMF_ERR_TRUNCATION;
        case ErrorKind::numerical: return QMF_ERR_NUMERICAL;
        case ErrorKind::missing_input: return QMF_ERR_MISSING_INPUT;
    }
    return QMF_ERR_INTERNAL;
}

template <class F>
qmf_status guarded(F f) {
    try {
        last_error.clear();
        f();
        return QMF_OK;
    } catch (const qmf::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const qmf::json::exception& e) {
        last_error = std::string("json: ") + e.what();
        return QMF_ERR_CONTRACT;
    } catch (const std::exception& e) {
        last_error = e.what();
        return QMF_ERR_INTERNAL;
    }
}

qmf_config* make_config(const std::string& experiment, const qmf::json& raw) {
    auto* c = new qmf_config;
    c->experiment = experiment;
    try {
        c->resolved = qmf::resolve_config(experiment, raw);
        c->text = c->resolved.dump(2);
        c->hash = qmf::config_hash(c->resolved);
    } catch (...) {
        delete c;
        throw;
    }
    return c;
}

}  // namespace

extern "C" {

const char* qmf_version(void) { return "1.0.0"; }
const char* qmf_last_error(void) { return last_error.c_str(); }

const char* qmf_status_name(qmf_status s) {
    switch (s) {
        case QMF_OK: return "ok";
        case QMF_ERR_SHAPE: return "shape";
        case QMF_ERR_CONTRACT: return "contract";
        case QMF_ERR_DOMAIN: return "domain";
        case QMF_ERR_UNSUPPORTED: return "unsupported";
        case QMF_ERR_REFUSED: return "refused";
        case QMF_ERR_TRUNCATION: return "truncation";
        case QMF_ERR_NUMERICAL: return "numerical";
        case QMF_ERR_MISSING_INPUT: return "missing-input";
        case QMF_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

int qmf_exit_code(qmf_status s) {
    switch (s) {
        case QMF_OK: return 0;
        case QMF_ERR_MISSING_INPUT: return 2;
        case QMF_ERR_TRUNCATION:
        case QMF_ERR_NUMERICAL: return 3;
        default: return 1;
    }
}

size_t qmf_experiment_count(void) { return qmf::experiment_kinds().size(); }

const char* qmf_experiment_name(size_t i) {
    const auto& k = qmf::experiment_kinds();
    return i < k.size() ? k[i].c_str() : nullptr;
}

qmf_status qmf_config_parse(const char* experiment, const char* json_text, qmf_config** out) {
    if (!experiment || !json_text || !out) return QMF_ERR_CONTRACT;
    return guarded([&] { *out = make_config(experiment, qmf::json::parse(json_text)); });
}

qmf_status qmf_config_load(const char* experiment, const char* path, qmf_config** out) {
    if (!experiment || !path || !out) return QMF_ERR_CONTRACT;
    return guarded([&] {
        std::ifstream f(path);
        if (!f) throw qmf::Error(qmf::ErrorKind::missing_input, std::string("cannot open config ") + path);
        std::stringstream ss;
        ss << f.rdbuf();
        *out = make_config(experiment, qmf::json::parse(ss.str()));
    });
}

qmf_status qmf_config_default(const char* experiment, qmf_config** out) {
    if (!experiment || !out) return QMF_ERR_CONTRACT;
    return guarded([&] { *out = make_config(experiment, qmf::json::object()); });
}

const char* qmf_config_json(const qmf_config* cfg) { return cfg ? cfg->text.c_str() : nullptr; }
const char* qmf_config_hash(const qmf_config* cfg) { return cfg ? cfg->hash.c_str() : nullptr; }
void qmf_config_free(qmf_config* cfg) { delete cfg; }

qmf_status qmf_run(const qmf_config* cfg, const char* out_dir, uint64_t seed, int threads, qmf_result** out) {
    if (!cfg || !out_dir || !out) return QMF_ERR_CONTRACT;
    return guarded([&] {
        if (cfg->experiment == "report") {
            std::string dir = cfg->resolved.at("run_dir");
            *out = new qmf_result{qmf::emit_report(dir.empty() ? out_dir : dir).dump(2)};
            return;
        }
        qmf::RunOptions opt;
        opt.out_dir = out_dir;
        opt.seed = seed;
        opt.threads = threads;
        *out = new qmf_result{qmf::run_experiment(cfg->experiment, cfg->resolved, opt).dump(2)};
    });
}

qmf_status qmf_report(const char* run_dir, qmf_result** out) {
    if (!run_dir || !out) return QMF_ERR_CONTRACT;
    return guarded([&] { *out = new qmf_result{qmf::emit_report(run_dir).dump(2)}; });
}

const char* qmf_result_json(const qmf_result* r) { return r ? r->text.c_str() : nullptr; }
void qmf_result_free(qmf_result* r) { delete r; }

qmf_status qmf_scattering_length(const char* kind, double amplitude, double range, double r_max, double* a0) {
    if (!kind || !a0) return QMF_ERR_CONTRACT;
    return guarded([&] {
        qmf::json j{{"kind", kind}, {"amplitude", amplitude}, {"range", range}, {"table_r", qmf::json::array()},
                    {"table_v", qmf::json::array()}};
        *a0 = qmf::solve_zero_energy(qmf::potential_from(j), r_max).a0;
    });
}

}  // extern "C"
