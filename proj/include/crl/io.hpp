#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crl/dynamics.hpp"
#include "crl/error.hpp"
#include "crl/mechanisms.hpp"
#include "crl/poa.hpp"

namespace crl::io {

using json = nlohmann::json;

// Raised for malformed or invalid configuration; carries the offending key path and,
// for syntax errors, the source line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, std::string key = {}, int line = 0)
        : Error(ErrorKind::Config, msg), key_(std::move(key)), line_(line) {}
    const std::string& key() const { return key_; }
    int line() const { return line_; }

private:
    std::string key_;
    int line_;
};

struct SweepAxis {
    std::string path;
    std::vector<double> values;
};

struct SweepSpec {
    std::vector<SweepAxis> axes;
    std::vector<Designer> designers;
    std::string output;
};

struct ProbeSpec {
    SamplerSpec sampler;
    long samples = 10000;
    std::uint64_t seed = 1;
    std::optional<WorstCaseSpec> worst_case;
};

struct RunConfig {
    json doc;
    std::optional<Scenario> scenario;
    std::optional<DynamicParams> dynamic;
    Settings settings;
    DynamicsConfig dynamics;
    std::optional<std::vector<double>> dynamics_start;
    std::vector<Designer> designers;
    std::optional<SweepSpec> sweep;
    ProbeSpec probe;
};

json parse_text(const std::string& text, bool toml, const std::string& origin = "<config>");
json load_document(const std::string& path);

Scenario parse_scenario(const json& doc);
RunConfig parse_config(const json& doc);

json to_json(const Mechanism& m);
json to_json(const DesignOutcome& d);
json to_json(const EquilibriumReport& r);
json to_json(const PoAProbeReport& r);

std::string format_number(double v);

json run_solve(const RunConfig& rc);
json run_design(const RunConfig& rc, const std::vector<Designer>& designers, bool debug_cases);

struct TableOutput {
    json summary;
    std::string csv;
};

TableOutput run_dynamics(const RunConfig& rc, Designer d);
TableOutput run_dynamic_model(const RunConfig& rc);
std::string run_sweep(const RunConfig& rc, int threads);
json run_poa_probe(const RunConfig& rc, Designer d, int threads);

// Worker count: CRL_THREADS if set, otherwise the hardware concurrency.
int default_threads();

}  // namespace crl::io
