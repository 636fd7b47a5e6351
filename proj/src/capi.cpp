#include "crl/crl.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>

#include "crl/io.hpp"

struct crl_config {
    crl::io::RunConfig rc;
};

namespace {

thread_local std::string last_error = "{}";

void set_error(const char* kind, const std::string& msg, const std::string& key = {}, int line = 0) {
    crl::io::json e{{"kind", kind}, {"message", msg}};
    e["key"] = key.empty() ? crl::io::json(nullptr) : crl::io::json(key);
    e["line"] = line > 0 ? crl::io::json(line) : crl::io::json(nullptr);
    last_error = crl::io::json{{"error", e}}.dump();
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

template <class F>
crl_status guarded(F&& f) {
    last_error = "{}";
    try {
        f();
        return CRL_OK;
    } catch (const crl::io::ConfigError& e) {
        set_error("config", e.what(), e.key(), e.line());
        return CRL_ERR_CONFIG;
    } catch (const crl::Error& e) {
        switch (e.kind()) {
            case crl::ErrorKind::Config: set_error("config", e.what()); return CRL_ERR_CONFIG;
            case crl::ErrorKind::Domain: set_error("domain", e.what()); return CRL_ERR_DOMAIN;
            case crl::ErrorKind::Numeric: set_error("numeric", e.what()); return CRL_ERR_NUMERIC;
            case crl::ErrorKind::Unsupported: set_error("unsupported", e.what()); return CRL_ERR_UNSUPPORTED;
            case crl::ErrorKind::Mismatch: set_error("mismatch", e.what()); return CRL_ERR_MISMATCH;
        }
        set_error("internal", e.what());
        return CRL_ERR_INTERNAL;
    } catch (const std::exception& e) {
        set_error("internal", e.what());
        return CRL_ERR_INTERNAL;
    } catch (...) {
        set_error("internal", "unknown exception");
        return CRL_ERR_INTERNAL;
    }
}

crl_status bad_arg(const char* msg) {
    set_error("argument", msg);
    return CRL_ERR_ARG;
}

std::vector<crl::Designer> designers_for(const crl_config* cfg, const char* name) {
    if (!name) return cfg->rc.designers;
    std::string n = name;
    if (n == "all") return {crl::Designer::None, crl::Designer::Side, crl::Designer::Restriction, crl::Designer::Combined};
    try {
        return {crl::designer_from_string(n)};
    } catch (const crl::Error& e) {
        throw crl::io::ConfigError(e.what(), "designer");
    }
}

}  // namespace

extern "C" {

crl_status crl_config_load(const char* path, crl_config** out) {
    if (!path || !out) return bad_arg("null argument");
    *out = nullptr;
    return guarded([&] {
        auto cfg = std::make_unique<crl_config>();
        cfg->rc = crl::io::parse_config(crl::io::load_document(path));
        *out = cfg.release();
    });
}

crl_status crl_config_parse(const char* text, int is_toml, crl_config** out) {
    if (!text || !out) return bad_arg("null argument");
    *out = nullptr;
    return guarded([&] {
        auto cfg = std::make_unique<crl_config>();
        cfg->rc = crl::io::parse_config(crl::io::parse_text(text, is_toml != 0));
        *out = cfg.release();
    });
}

void crl_config_free(crl_config* cfg) { delete cfg; }

crl_status crl_set_knob(crl_config* cfg, const char* name, double value) {
    if (!cfg || !name) return bad_arg("null argument");
    return guarded([&] {
        std::string n = name;
        crl::Settings& s = cfg->rc.settings;
        auto positive = [&](double lo, double hi) {
            if (!(value > lo && value <= hi))
                throw crl::io::ConfigError("knob '" + n + "' out of range", n);
        };
        if (n == "eps_mech") {
            positive(0, 0.5);
            s.eps_mech = value;
        } else if (n == "eq_tol") {
            positive(0, 1);
            s.eq_tol = value;
        } else if (n == "stability_eps") {
            positive(0, 0.49);
            s.stability_eps = value;
        } else if (n == "grid_step") {
            positive(0, 0.1);
            s.grid_step = value;
        } else if (n == "g_max_factor") {
            positive(0, 1e300);
            s.g_max_factor = value;
        } else if (n == "continuum_classes") {
            positive(1, 1e7);
            s.continuum_classes = static_cast<int>(value);
        } else if (n == "seed") {
            if (!(value >= 0)) throw crl::io::ConfigError("seed must be nonnegative", "seed");
            cfg->rc.probe.seed = static_cast<std::uint64_t>(value);
        } else {
            throw crl::io::ConfigError("unknown knob '" + n + "'", n);
        }
    });
}

crl_status crl_solve(const crl_config* cfg, char** json_out) {
    if (!cfg || !json_out) return bad_arg("null argument");
    return guarded([&] { *json_out = dup(crl::io::run_solve(cfg->rc).dump(2)); });
}

crl_status crl_design(const crl_config* cfg, const char* designer, int debug_cases, char** json_out) {
    if (!cfg || !json_out) return bad_arg("null argument");
    return guarded([&] {
        *json_out = dup(crl::io::run_design(cfg->rc, designers_for(cfg, designer), debug_cases != 0).dump(2));
    });
}

crl_status crl_dynamics(const crl_config* cfg, const char* designer, char** json_out, char** csv_out) {
    if (!cfg || !json_out || !csv_out) return bad_arg("null argument");
    return guarded([&] {
        auto ds = designers_for(cfg, designer ? designer : "side");
        auto t = crl::io::run_dynamics(cfg->rc, ds.front());
        std::string j = t.summary.dump(2);
        *csv_out = dup(t.csv);
        *json_out = dup(j);
    });
}

crl_status crl_sweep(const crl_config* cfg, int threads, char** csv_out) {
    if (!cfg || !csv_out) return bad_arg("null argument");
    return guarded([&] { *csv_out = dup(crl::io::run_sweep(cfg->rc, threads > 0 ? threads : crl::io::default_threads())); });
}

crl_status crl_poa_probe(const crl_config* cfg, const char* designer, int threads, char** json_out) {
    if (!cfg || !json_out) return bad_arg("null argument");
    return guarded([&] {
        auto ds = designers_for(cfg, designer ? designer : "combined");
        int t = threads > 0 ? threads : crl::io::default_threads();
        *json_out = dup(crl::io::run_poa_probe(cfg->rc, ds.front(), t).dump(2));
    });
}

crl_status crl_dynamic_model(const crl_config* cfg, char** json_out, char** csv_out) {
    if (!cfg || !json_out || !csv_out) return bad_arg("null argument");
    return guarded([&] {
        auto t = crl::io::run_dynamic_model(cfg->rc);
        std::string j = t.summary.dump(2);
        *csv_out = dup(t.csv);
        *json_out = dup(j);
    });
}

crl_status crl_sweep_output(const crl_config* cfg, char** path_out) {
    if (!cfg || !path_out) return bad_arg("null argument");
    return guarded([&] { *path_out = dup(cfg->rc.sweep ? cfg->rc.sweep->output : std::string()); });
}

int crl_default_threads(void) { return crl::io::default_threads(); }

const char* crl_last_error(void) { return last_error.c_str(); }

void crl_string_free(char* s) { std::free(s); }

}  // extern "C"
