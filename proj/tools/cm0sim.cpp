// cm0sim: Cortex-M0 / STM32F0 simulator with event counters and energy models.
//
//   cm0sim run IMAGE.bin [--freq 20 --prefetch off --waitstates 0 | --sweep]
//   cm0sim analyze IMAGE.bin [--entry ADDR]...
//   cm0sim fit DATASET.csv [--kfold 10 --seed 1 --emit-model PATH]
//   cm0sim models [--model-file PATH]
//
// Exit codes: 0 success/halt, 1 fault or analysis/data error, 2 usage error.

#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"

#include "cm0/driver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in)
        throw UsageError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string basename(const std::string &path)
{
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

struct ConfigFlags {
    int freq = 20;
    std::string prefetch = "off";
    int wait_states = 0;

    void add_to(CLI::App &app)
    {
        app.add_option("--freq", freq, "Core clock in MHz")->check(CLI::IsMember({20, 24, 48}));
        app.add_option("--prefetch", prefetch, "Flash PreFetch buffer")->check(CLI::IsMember({"on", "off"}));
        app.add_option("--waitstates", wait_states, "Flash wait states")->check(CLI::IsMember({0, 1}));
    }

    cm0::HardwareConfig config() const
    {
        try {
            return cm0::HardwareConfig::make(freq, prefetch == "on", wait_states);
        } catch(const cm0::Error &e) {
            throw UsageError(e.what());
        }
    }
};

struct Models {
    std::vector<cm0::EnergyModel> models = cm0::builtin_models();
    std::string source = "builtin";
};

Models load_models(const std::string &path)
{
    if(path.empty())
        return {};
    std::ifstream in(path);
    if(!in)
        throw UsageError("cannot open model file " + path);
    Models m;
    m.models = cm0::read_models(in);
    m.source = path;
    if(m.models.empty())
        throw UsageError("model file " + path + " holds no models");
    return m;
}

void emit(const cm0::Json &j) { std::cout << cm0::dump_fixed(j); }

struct RunFlags {
    std::string image;
    ConfigFlags cfg;
    bool sweep = false;
    std::uint64_t max_cycles = cm0::kDefaultMaxCycles;
    std::string model_file;
    std::string format = "json";
    std::uint64_t flash_size = cm0::kDefaultFlashSize;
    std::uint64_t ram_size = cm0::kDefaultRamSize;
    std::string trace;
    std::vector<std::string> timing;
    bool blocks = false;
};

int cmd_run(const RunFlags &f)
{
    const auto models = load_models(f.model_file);

    cm0::RunRequest base;
    base.bytes = read_file(f.image);
    base.image = cm0::describe_image(basename(f.image), base.bytes);
    base.layout = {static_cast<std::uint32_t>(f.flash_size), static_cast<std::uint32_t>(f.ram_size)};
    base.max_cycles = f.max_cycles;
    base.models = models.models;
    base.model_source = models.source;
    base.attribute_blocks = f.blocks;
    for(const auto &kv : f.timing) {
        const auto eq = kv.find('=');
        unsigned value = 0;
        try {
            if(eq == std::string::npos)
                throw std::invalid_argument(kv);
            value = static_cast<unsigned>(std::stoul(kv.substr(eq + 1)));
        } catch(const std::exception &) {
            throw UsageError("--timing expects KEY=CYCLES, got '" + kv + "'");
        }
        if(!base.timing.set(kv.substr(0, eq), value))
            throw UsageError("unknown timing key '" + kv.substr(0, eq) + "'");
    }

    if(f.sweep) {
        std::vector<std::future<cm0::RunReport>> jobs;
        for(const auto &cfg : cm0::all_configs()) {
            auto req = base;
            req.config = cfg;
            jobs.push_back(std::async(std::launch::async, [req = std::move(req)] { return cm0::simulate(req); }));
        }
        std::vector<cm0::RunReport> reports;
        for(auto &j : jobs)
            reports.push_back(j.get());

        bool ok = true;
        for(const auto &r : reports)
            ok = ok && r.summary.exit_reason == cm0::ExitReason::halt;
        if(f.format == "text") {
            for(const auto &r : reports)
                std::cout << cm0::to_text(r) << '\n';
        } else {
            emit(cm0::sweep_json(reports));
        }
        return ok ? kExitOk : kExitFailure;
    }

    base.config = f.cfg.config();
    std::ofstream trace;
    if(!f.trace.empty()) {
        trace.open(f.trace);
        if(!trace)
            throw UsageError("cannot write trace file " + f.trace);
        base.trace = &trace;
    }
    const auto report = cm0::simulate(base);
    if(f.format == "text")
        std::cout << cm0::to_text(report);
    else
        emit(cm0::to_json(report));
    return report.summary.exit_reason == cm0::ExitReason::halt ? kExitOk : kExitFailure;
}

struct AnalyzeFlags {
    std::string image;
    std::vector<std::string> entries;
    std::string model_file;
    std::string format = "json";
    std::uint64_t flash_size = cm0::kDefaultFlashSize;
    std::uint64_t ram_size = cm0::kDefaultRamSize;
};

std::uint32_t parse_address(const std::string &text)
{
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used, 0);
        if(used != text.size() || v > 0xFFFF'FFFFull)
            throw std::out_of_range(text);
        return static_cast<std::uint32_t>(v);
    } catch(const std::exception &) {
        throw UsageError("bad address '" + text + "'");
    }
}

int cmd_analyze(const AnalyzeFlags &f)
{
    const auto models = load_models(f.model_file);
    const auto bytes = read_file(f.image);
    const auto image = cm0::MemoryImage::from_flat(
        bytes, {static_cast<std::uint32_t>(f.flash_size), static_cast<std::uint32_t>(f.ram_size)});

    std::vector<std::uint32_t> entries;
    for(const auto &e : f.entries)
        entries.push_back(parse_address(e));
    if(entries.empty())
        entries.push_back(cm0::reset_entry(image));

    const auto cfg = cm0::extract_cfg(image, entries);
    if(f.format == "text")
        std::cout << cm0::block_report_text(cfg, models.models);
    else
        emit(cm0::block_report(cm0::describe_image(basename(f.image), bytes), cfg, models.models));
    return kExitOk;
}

struct FitFlags {
    std::string dataset;
    std::size_t k = 10;
    std::uint64_t seed = 1;
    std::string emit_model;
    ConfigFlags cfg;
    std::string format = "json";
};

int cmd_fit(const FitFlags &f)
{
    std::ifstream in(f.dataset);
    if(!in)
        throw UsageError("cannot open dataset " + f.dataset);
    const auto ds = cm0::read_dataset_csv(in, basename(f.dataset));
    const auto config = f.cfg.config();

    const auto result = cm0::fit(ds);
    const auto cv = cm0::kfold_cv(ds, f.k, f.seed);

    if(!f.emit_model.empty()) {
        std::ofstream out(f.emit_model);
        if(!out)
            throw UsageError("cannot write model file " + f.emit_model);
        cm0::EnergyModel model;
        model.config = config;
        model.beta = result.beta;
        model.provenance = cm0::Provenance::fitted;
        cm0::write_models(out, {model});
    }

    for(const auto &w : result.warnings)
        std::cerr << "warning: " << w << '\n';

    if(f.format == "text") {
        std::printf("dataset   %s (%zu rows)\n", ds.name.c_str(), ds.rows.size());
        for(std::size_t i = 0; i < cm0::kCounterCount; ++i)
            std::printf("beta%zu     %.6f nJ\n", i + 1, result.beta[i]);
        std::printf("MAPE      %.6f %%\nRESD      %.6f %%\nR2        %.6f\n", result.metrics.mape, result.metrics.resd,
                    result.metrics.r2);
        std::printf("\n%zu-fold CV (seed %llu): mean R2 %.6f, SD %.6f\n", cv.k,
                    static_cast<unsigned long long>(cv.seed), cv.mean_r2, cv.sd_r2);
        std::printf("fold  rows        R2      MAPE\n");
        for(const auto &fold : cv.folds)
            std::printf("%4zu  %4zu  %8.6f  %8.6f\n", fold.fold, fold.test_rows.size(), fold.r2, fold.mape);
    } else {
        emit(cm0::fit_report(ds, result, cv));
    }
    return kExitOk;
}

int cmd_models(const std::string &model_file, const std::string &format)
{
    const auto models = load_models(model_file);
    if(format == "text") {
        std::printf("%-14s %-9s", "config", "source");
        for(std::size_t i = 0; i < cm0::kCounterCount; ++i)
            std::printf(" %10s", cm0::counter_name(i));
        std::printf("\n");
        for(const auto &m : models.models) {
            const auto w = cm0::relative_weights(m);
            std::printf("%-14s %-9s", m.config.label().c_str(), cm0::to_string(m.provenance));
            for(double b : m.beta)
                std::printf(" %10.6f", b);
            std::printf("\n%-24s", "  relative");
            for(double x : w)
                std::printf(" %10.6f", x);
            std::printf("\n");
        }
        return kExitOk;
    }
    cm0::Json arr = cm0::Json::array();
    for(const auto &m : models.models) {
        cm0::Json beta = cm0::Json::array();
        cm0::Json weights = cm0::Json::array();
        for(double b : m.beta)
            beta.push_back(b);
        for(double x : cm0::relative_weights(m))
            weights.push_back(x);
        arr.push_back(cm0::Json{{"config", m.config.label()},
                                {"provenance", cm0::to_string(m.provenance)},
                                {"beta", beta},
                                {"relative_weights", weights},
                                {"reported_mape", m.reported_mape ? cm0::Json(*m.reported_mape) : cm0::Json(nullptr)},
                                {"reported_resd", m.reported_resd ? cm0::Json(*m.reported_resd) : cm0::Json(nullptr)}});
    }
    emit(cm0::Json{{"source", models.source}, {"models", arr}});
    return kExitOk;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Cortex-M0 simulator with PMC-based energy models"};
    app.require_subcommand(1);

    const auto formats = CLI::IsMember({"json", "text"});

    RunFlags run;
    auto *run_cmd = app.add_subcommand("run", "Simulate a flat binary and report counters and energy");
    run_cmd->add_option("image", run.image, "Flat binary, vector table at offset 0")->required();
    run.cfg.add_to(*run_cmd);
    auto *sweep = run_cmd->add_flag("--sweep", run.sweep, "Run every modelled configuration");
    for(const char *name : {"--freq", "--prefetch", "--waitstates"})
        sweep->excludes(run_cmd->get_option(name));
    run_cmd->add_option("--max-cycles", run.max_cycles, "Cycle budget");
    run_cmd->add_option("--model-file", run.model_file, "Replace the builtin models");
    run_cmd->add_option("--format", run.format)->check(formats);
    run_cmd->add_option("--flash-size", run.flash_size)->transform(CLI::AsSizeValue(false));
    run_cmd->add_option("--ram-size", run.ram_size)->transform(CLI::AsSizeValue(false));
    auto *trace_opt = run_cmd->add_option("--trace", run.trace, "Write one line per executed instruction");
    trace_opt->excludes(sweep);
    run_cmd->add_option("--timing", run.timing, "Override a base cycle cost, e.g. multiply=32");
    run_cmd->add_flag("--blocks", run.blocks, "Attribute counters and energy to basic blocks");

    AnalyzeFlags analyze;
    auto *analyze_cmd = app.add_subcommand("analyze", "Static per-basic-block counters and energy");
    analyze_cmd->add_option("image", analyze.image)->required();
    analyze_cmd->add_option("--entry", analyze.entries, "Entry address (replaces the reset vector)");
    analyze_cmd->add_option("--model-file", analyze.model_file);
    analyze_cmd->add_option("--format", analyze.format)->check(formats);
    analyze_cmd->add_option("--flash-size", analyze.flash_size)->transform(CLI::AsSizeValue(false));
    analyze_cmd->add_option("--ram-size", analyze.ram_size)->transform(CLI::AsSizeValue(false));

    FitFlags fit;
    auto *fit_cmd = app.add_subcommand("fit", "Fit an energy model to a counter/energy dataset");
    fit_cmd->add_option("dataset", fit.dataset, "CSV: c1,c2,c3,c4,c5,c6,energy_nj")->required();
    fit_cmd->add_option("--kfold", fit.k, "Cross-validation folds");
    fit_cmd->add_option("--seed", fit.seed, "Fold shuffle seed");
    fit_cmd->add_option("--emit-model", fit.emit_model, "Write the fitted model file");
    fit.cfg.add_to(*fit_cmd);
    fit_cmd->add_option("--format", fit.format)->check(formats);

    std::string models_file;
    std::string models_format = "json";
    auto *models_cmd = app.add_subcommand("models", "List models with relative event weights");
    models_cmd->add_option("--model-file", models_file);
    models_cmd->add_option("--format", models_format)->check(formats);

    try {
        app.parse(argc, argv);
    } catch(const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch(const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch(const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if(*run_cmd)
            return cmd_run(run);
        if(*analyze_cmd)
            return cmd_analyze(analyze);
        if(*fit_cmd)
            return cmd_fit(fit);
        if(*models_cmd)
            return cmd_models(models_file, models_format);
    } catch(const UsageError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch(const cm0::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
