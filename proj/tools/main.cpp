#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fearfactor/cross_section.hpp"
#include "fearfactor/csv.hpp"
#include "fearfactor/errors.hpp"
#include "fearfactor/pipeline.hpp"
#include "fearfactor/synth.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace fearfactor;

namespace {

std::string kebab(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

/// Config file plus per-key flag overrides shared by every subcommand.
struct ConfigFlags {
    std::optional<fs::path> file;
    std::map<std::string, std::string> overrides;
    bool allow_bad_rows = false;

    void attach(CLI::App& app) {
        app.add_option("--config", file, "key=value run configuration file")->check(CLI::ExistingFile);
        for (const auto& key : pipeline::config_keys()) {
            if (key == "allow_bad_rows") continue;
            app.add_option_function<std::string>(
                "--" + kebab(key), [this, key](const std::string& v) { overrides[key] = v; }, "override " + key);
        }
        app.add_flag("--allow-bad-rows", allow_bad_rows, "skip malformed rows instead of failing");
    }

    [[nodiscard]] pipeline::RunConfig resolve() const {
        pipeline::RunConfig cfg = file ? pipeline::load_config(*file) : pipeline::RunConfig{};
        for (const auto& [k, v] : overrides) pipeline::apply(cfg, k, v);
        if (allow_bad_rows) cfg.allow_bad_rows = true;
        return cfg;
    }
};

void report_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void run_one(pipeline::Stage stage, const pipeline::RunConfig& cfg) {
    const auto report = pipeline::run_stage(stage, cfg);
    report_warnings(report.warnings);
    const auto name = pipeline::to_string(stage);
    cli::write_manifest(cfg.out_dir / ("manifest_" + name + ".txt"), name, report.inputs, report.outputs,
                        pipeline::to_key_values(cfg));
    std::cerr << name << ": wrote " << report.outputs.size() << " file(s) to " << cfg.out_dir.string() << '\n';
}

void run_synth(const pipeline::RunConfig& cfg, const std::vector<std::string>& market_kv) {
    std::map<std::string, std::string> kv;
    for (const auto& item : market_kv) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw pipeline::ValidationError("--market expects key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    kv["seed"] = std::to_string(cfg.seed);
    synth::MarketSpec spec;
    try {
        spec = synth::market_spec_from_key_values(kv);
    } catch (const std::invalid_argument& e) {
        throw pipeline::ValidationError(e.what());
    }
    const auto market = synth::priced_cross_section(spec);

    fs::create_directories(cfg.data_dir);
    const fs::path staging = cfg.data_dir / ".synth.tmp";
    fs::remove_all(staging);
    fs::create_directories(staging);
    std::vector<fs::path> outputs;
    try {
        synth::write_market(staging, market, spec);
        std::vector<fs::path> staged;
        for (const auto& e : fs::directory_iterator(staging)) staged.push_back(e.path());
        std::sort(staged.begin(), staged.end());
        for (const auto& p : staged) {
            const auto dest = cfg.data_dir / p.filename();
            fs::rename(p, dest);
            outputs.push_back(dest);
        }
        fs::remove_all(staging);
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }
    cli::write_manifest(cfg.data_dir / "manifest_synth.txt", "synth", {}, outputs, synth::to_key_values(spec));
    std::cerr << "synth: wrote " << outputs.size() << " file(s) to " << cfg.data_dir.string() << '\n';
}

struct GenericFmb {
    std::optional<fs::path> assets;
    std::optional<fs::path> factors;
    std::vector<std::string> columns;
    std::string spec_id = "fmb_generic";
};

void run_generic_fmb(const pipeline::RunConfig& cfg, const GenericFmb& g) {
    if (!g.assets || !g.factors) throw pipeline::ValidationError("--assets and --factors must be given together");
    cross_section::DatedMatrix assets;
    cross_section::DatedMatrix all;
    try {
        assets = cross_section::read_dated_matrix(*g.assets);
        all = cross_section::read_dated_matrix(*g.factors);
    } catch (const std::invalid_argument& e) {
        throw pipeline::ValidationError(e.what());
    }
    std::vector<std::string> names = g.columns;
    if (names.empty())
        for (const auto& n : all.names)
            if (n != "rf") names.push_back(n);
    cross_section::DatedMatrix factors{all.dates, names, Eigen::MatrixXd(all.values.rows(), 0)};
    factors.values.resize(all.values.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto it = std::find(all.names.begin(), all.names.end(), names[k]);
        if (it == all.names.end())
            throw pipeline::ValidationError("factor column '" + names[k] + "' not in " + g.factors->string());
        factors.values.col(static_cast<Eigen::Index>(k)) = all.values.col(it - all.names.begin());
    }
    const auto est = cross_section::fama_macbeth(assets, factors, cfg.nw_lags);

    fs::create_directories(cfg.out_dir);
    const auto dest = cfg.out_dir / "premia_generic.csv";
    const auto tmp = fs::path(dest.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        cross_section::write_premia_csv(out, cross_section::premium_rows(est, g.spec_id));
    }
    fs::rename(tmp, dest);
    cli::write_manifest(cfg.out_dir / "manifest_fmb_generic.txt", "fmb", {*g.assets, *g.factors}, {dest},
                        pipeline::to_key_values(cfg));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fearfactor: option-implied fear factors and their cross-sectional pricing"};
    app.require_subcommand(1);

    struct Sub {
        pipeline::Stage stage;
        const char* name;
        const char* help;
    };
    const std::vector<Sub> stages = {
        {pipeline::Stage::ingest, "ingest", "filter raw option quotes into usable chains"},
        {pipeline::Stage::iv, "iv", "implied variance panel (total, good, bad) per firm-day"},
        {pipeline::Stage::factors, "factors", "rolling EM-PCA common fear factors"},
        {pipeline::Stage::betas, "betas", "month-end stock loadings on factor innovations"},
        {pipeline::Stage::sort, "sort", "beta-sorted portfolios, test assets and mimicking portfolios"},
        {pipeline::Stage::fmb, "fmb", "Fama-MacBeth risk premia"},
        {pipeline::Stage::threepass, "threepass", "three-pass risk premia with weak-factor test"},
    };

    std::vector<ConfigFlags> flags(stages.size() + 2);
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        auto* sub = app.add_subcommand(stages[i].name, stages[i].help);
        flags[i].attach(*sub);
        subs.push_back(sub);
    }

    GenericFmb generic;
    auto* fmb = subs[5];
    fmb->add_option("--assets", generic.assets, "dated CSV of test-asset returns (generic mode)")
        ->check(CLI::ExistingFile);
    fmb->add_option("--factors", generic.factors, "dated CSV of factor returns (generic mode)")
        ->check(CLI::ExistingFile);
    fmb->add_option("--factor-columns", generic.columns, "factor columns to price, first is reported")
        ->delimiter(',');
    fmb->add_option("--spec-id", generic.spec_id, "spec_id written in generic mode");

    auto& synth_flags = flags[stages.size()];
    auto* synth_cmd = app.add_subcommand("synth", "write a seed-fixed synthetic market into data_dir");
    synth_flags.attach(*synth_cmd);
    std::vector<std::string> market_kv;
    synth_cmd->add_option("--market", market_kv, "synthetic market parameter as key=value (repeatable)");

    auto& pipe_flags = flags[stages.size() + 1];
    auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage from ingest to threepass");
    pipe_flags.attach(*pipe_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        for (std::size_t i = 0; i < stages.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const auto cfg = flags[i].resolve();
            if (stages[i].stage == pipeline::Stage::fmb && (generic.assets || generic.factors)) {
                pipeline::validate(cfg);
                run_generic_fmb(cfg, generic);
            } else {
                run_one(stages[i].stage, cfg);
            }
        }
        if (synth_cmd->parsed()) run_synth(synth_flags.resolve(), market_kv);
        if (pipe_cmd->parsed()) {
            const auto cfg = pipe_flags.resolve();
            for (const auto& s : stages) run_one(s.stage, cfg);
        }
    } catch (const pipeline::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const csv::FileError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
