#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crl/crl.h"

namespace {

int exit_code(crl_status s) {
    switch (s) {
        case CRL_OK: return 0;
        case CRL_ERR_NUMERIC:
        case CRL_ERR_INTERNAL: return 3;
        default: return 2;
    }
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

int report(const std::string& kind, const std::string& message, int code) {
    std::cerr << "{\"error\": {\"kind\": \"" << json_escape(kind) << "\", \"message\": \"" << json_escape(message)
              << "\", \"key\": null, \"line\": null}}\n";
    return code;
}

int fail(crl_status s) {
    std::cerr << crl_last_error() << "\n";
    return exit_code(s);
}

struct Owned {
    char* p = nullptr;
    ~Owned() { crl_string_free(p); }
};

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::filesystem::create_directories(p.parent_path().empty() ? "." : p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << body;
    if (!out) throw std::runtime_error("failed writing '" + p.string() + "'");
}

void emit(const std::string& out_dir, const std::string& name, const std::string& body) {
    if (out_dir.empty()) {
        std::cout << body;
        if (!body.empty() && body.back() != '\n') std::cout << "\n";
    } else {
        write_file(std::filesystem::path(out_dir) / name, body + (body.empty() || body.back() == '\n' ? "" : "\n"));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Content routing games: equilibria, mechanism design, dynamics and sweeps"};
    app.require_subcommand(1);

    std::string config, designer, out_dir;
    long long seed = -1;
    double eps_mech = 0, grid_step = 0;
    bool debug_cases = false, csv_stdout = false;
    int threads = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Config file (.json or .toml)")->required();
        sub->add_option("--out-dir", out_dir, "Directory for output files (default: stdout)");
        sub->add_option("--eps-mech", eps_mech, "Mechanism slack epsilon");
        sub->add_option("--grid-step", grid_step, "Grid step for searches");
        sub->add_option("--threads", threads, "Worker threads (default: CRL_THREADS or hardware)");
    };
    auto* solve = app.add_subcommand("solve", "Social optimum and no-incentive equilibrium");
    auto* des = app.add_subcommand("design", "Design mechanisms and report their equilibria");
    auto* dyn = app.add_subcommand("dynamics", "Simulate flow dynamics under a designed mechanism");
    auto* sweep = app.add_subcommand("sweep", "Grid sweep to CSV");
    auto* probe = app.add_subcommand("poa-probe", "Random search for the worst efficiency ratio");
    auto* dmod = app.add_subcommand("dynamic-model", "Stationary table of the dynamic content model");
    for (auto* s : {solve, des, dyn, sweep, probe, dmod}) common(s);
    for (auto* s : {des, dyn, probe})
        s->add_option("--designer", designer, "none | side | restriction | combined (design also accepts all)");
    des->add_flag("--debug-cases", debug_cases, "Also report the dominated combined-case values");
    probe->add_option("--seed", seed, "Sampler seed");
    for (auto* s : {dyn, dmod}) s->add_flag("--csv", csv_stdout, "Print the CSV table to stdout instead of the summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("argument", e.what(), 2);
    }

    try {
        crl_config* raw = nullptr;
        if (crl_status s = crl_config_load(config.c_str(), &raw); s != CRL_OK) return fail(s);
        std::unique_ptr<crl_config, void (*)(crl_config*)> cfg(raw, crl_config_free);
        if (eps_mech > 0)
            if (crl_status s = crl_set_knob(cfg.get(), "eps_mech", eps_mech); s != CRL_OK) return fail(s);
        if (grid_step > 0)
            if (crl_status s = crl_set_knob(cfg.get(), "grid_step", grid_step); s != CRL_OK) return fail(s);
        if (seed >= 0)
            if (crl_status s = crl_set_knob(cfg.get(), "seed", static_cast<double>(seed)); s != CRL_OK) return fail(s);
        const char* d = designer.empty() ? nullptr : designer.c_str();
        int t = threads > 0 ? threads : crl_default_threads();

        if (*solve) {
            Owned j;
            if (crl_status s = crl_solve(cfg.get(), &j.p); s != CRL_OK) return fail(s);
            emit(out_dir, "solve.json", j.p);
        } else if (*des) {
            Owned j;
            if (crl_status s = crl_design(cfg.get(), d, debug_cases, &j.p); s != CRL_OK) return fail(s);
            emit(out_dir, "design.json", j.p);
        } else if (*dyn || *dmod) {
            Owned j, c;
            crl_status s = *dyn ? crl_dynamics(cfg.get(), d, &j.p, &c.p) : crl_dynamic_model(cfg.get(), &j.p, &c.p);
            if (s != CRL_OK) return fail(s);
            std::string stem = *dyn ? "dynamics" : "dynamic_model";
            if (!out_dir.empty()) {
                emit(out_dir, stem + ".json", j.p);
                emit(out_dir, stem + ".csv", c.p);
            } else {
                emit("", "", csv_stdout ? c.p : j.p);
            }
        } else if (*sweep) {
            Owned c, path;
            if (crl_status s = crl_sweep(cfg.get(), t, &c.p); s != CRL_OK) return fail(s);
            if (crl_status s = crl_sweep_output(cfg.get(), &path.p); s != CRL_OK) return fail(s);
            std::string target = path.p;
            if (!out_dir.empty())
                emit(out_dir, target.empty() ? "sweep.csv" : std::filesystem::path(target).filename().string(), c.p);
            else if (!target.empty())
                write_file(target, c.p);
            else
                emit("", "", c.p);
        } else if (*probe) {
            Owned j;
            if (crl_status s = crl_poa_probe(cfg.get(), d, t, &j.p); s != CRL_OK) return fail(s);
            emit(out_dir, "poa_probe.json", j.p);
        }
    } catch (const std::exception& e) {
        return report("io", e.what(), 2);
    }
    return 0;
}
