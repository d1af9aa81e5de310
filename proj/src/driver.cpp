#include "cm0/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace cm0 {

namespace {

std::string hex(std::uint32_t v) { return hex32(v); }

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

bool is_scalar(const Json &j) { return !j.is_object() && !j.is_array(); }

void dump(const Json &j, std::string &out, int depth)
{
    const std::string pad(std::size_t(depth + 1) * 2, ' ');
    const std::string close_pad(std::size_t(depth) * 2, ' ');
    switch(j.type()) {
    case Json::value_t::object: {
        if(j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for(const auto &[key, value] : j.items()) {
            if(!first)
                out += ",\n";
            first = false;
            out += pad + Json(key).dump() + ": ";
            dump(value, out, depth + 1);
        }
        out += "\n" + close_pad + "}";
        return;
    }
    case Json::value_t::array: {
        if(j.empty()) {
            out += "[]";
            return;
        }
        const bool inline_array = std::all_of(j.begin(), j.end(), is_scalar);
        out += inline_array ? "[" : "[\n";
        bool first = true;
        for(const auto &value : j) {
            if(!first)
                out += inline_array ? ", " : ",\n";
            first = false;
            if(!inline_array)
                out += pad;
            dump(value, out, depth + 1);
        }
        out += inline_array ? "]" : "\n" + close_pad + "]";
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        out += std::isfinite(v) ? fixed6(v) : "null";
        return;
    }
    default: out += j.dump(); return;
    }
}

Json config_json(const HardwareConfig &c)
{
    return Json{{"frequency_mhz", c.frequency_mhz},
                {"prefetch", c.prefetch ? "on" : "off"},
                {"wait_states", c.wait_states},
                {"label", c.label()}};
}

Json image_json(const ImageInfo &img)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(img.fnv1a64));
    return Json{{"name", img.name}, {"size", img.size}, {"fnv1a64", buf}};
}

Json counters_json(const EventCounters &c)
{
    Json j;
    for(std::size_t i = 0; i < kCounterCount; ++i)
        j[counter_name(i)] = c.events[i];
    j["instructions"] = c.instructions();
    j["total_cycles"] = c.total_cycles;
    j["fetch_stall_cycles"] = c.fetch_stall_cycles;
    j["data_stall_cycles"] = c.data_stall_cycles;

    std::map<std::string, std::uint64_t> by_mnemonic;
    for(int op = 0; op < kOpcodeCount; ++op)
        if(const auto n = c.histogram[std::size_t(op)])
            by_mnemonic[std::string(mnemonic(static_cast<Opcode>(op)))] += n;
    Json hist = Json::object();
    for(const auto &[name, n] : by_mnemonic)
        hist[name] = n;
    j["histogram"] = hist;
    return j;
}

Json optional_number(const std::optional<double> &v) { return v ? Json(*v) : Json(nullptr); }

Json beta_json(const Coefficients &beta)
{
    Json arr = Json::array();
    for(double b : beta)
        arr.push_back(b);
    return arr;
}

Json interval_json(const EnergyInterval &e)
{
    if(e.is_point())
        return Json{{"energy_nj", e.lo}};
    return Json{{"interval_nj", Json::array({e.lo, e.hi})}};
}

} // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for(auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

ImageInfo describe_image(std::string name, std::span<const std::uint8_t> bytes)
{
    return {std::move(name), bytes.size(), fnv1a64(bytes)};
}

std::optional<double> RunReport::energy_nj() const
{
    for(const auto &m : models)
        if(m.config == config)
            return estimate(summary.counters, m);
    return std::nullopt;
}

std::string trace_line(const StepResult &step)
{
    char head[96];
    std::snprintf(head, sizeof head, "0x%08x  %-26s %2u ", step.instruction.address,
                  disassemble(step.instruction).c_str(), step.cycles);
    std::string line = head;
    line += step.instruction.is_multiply() ? " c2" : " c1";
    if(step.branch_taken)
        line += " c3";
    for(const auto &a : step.data_accesses) {
        line += a.kind == AccessKind::read ? " R:" : " W:";
        line += to_string(a.region);
        line += "@" + hex(a.address) + "/" + std::to_string(a.size);
    }
    return line;
}

RunReport simulate(const RunRequest &req)
{
    RunReport report;
    report.image = req.image;
    report.config = req.config;
    report.layout = req.layout;
    report.max_cycles = req.max_cycles;
    report.models = req.models;
    report.model_source = req.model_source;

    auto image = MemoryImage::from_flat(req.bytes, req.layout);

    std::optional<Cfg> cfg;
    if(req.attribute_blocks) {
        try {
            const std::uint32_t entry = reset_entry(image);
            cfg = extract_cfg(image, std::span(&entry, 1));
        } catch(const Error &e) {
            report.attribution_error = e.what();
        }
    }

    Machine machine(std::move(image), unsigned(req.config.wait_states), req.config.prefetch, req.timing);

    std::map<std::uint32_t, std::pair<std::uint64_t, CounterSet>> per_block;
    CounterSet unattributed;
    const BasicBlock *current = nullptr;

    const auto observer = [&](const StepResult &step) {
        if(req.trace)
            *req.trace << trace_line(step) << '\n';
        if(!cfg)
            return;
        const auto addr = step.instruction.address;
        if(const auto *b = cfg->at(addr)) {
            current = b;
            ++per_block[b->start].first;
        } else if(!current || addr < current->start || addr >= current->end) {
            current = cfg->containing(addr);
        }
        if(current)
            per_block[current->start].second.record_step(step);
        else
            unattributed.record_step(step);
    };

    report.summary = machine.run(req.max_cycles, observer);
    report.r0 = machine.state().r[0];
    report.output = machine.memory().output();

    if(cfg) {
        std::vector<BlockAttribution> blocks;
        for(const auto &[start, entry] : per_block) {
            const auto &b = *cfg->at(start);
            blocks.push_back({b.start, b.end, entry.first, entry.second.snapshot()});
        }
        report.blocks = std::move(blocks);
        report.unattributed = unattributed.snapshot();
    }
    return report;
}

Json to_json(const RunReport &r)
{
    Json j;
    j["image"] = image_json(r.image);
    j["config"] = config_json(r.config);
    j["limits"] = Json{{"max_cycles", r.max_cycles}, {"flash_size", r.layout.flash_size}, {"ram_size", r.layout.ram_size}};
    j["exit_reason"] = to_string(r.summary.exit_reason);
    j["fault"] = r.summary.fault_kind ? Json{{"kind", to_string(*r.summary.fault_kind)}, {"detail", r.summary.fault_detail}}
                                      : Json(nullptr);
    j["cycles"] = r.summary.cycle_count;
    j["wall_time_us"] = r.wall_time_us();
    j["result_r0"] = r.r0;
    j["output"] = r.output;
    j["counters"] = counters_json(r.summary.counters);
    j["energy_nj"] = optional_number(r.energy_nj());

    Json models = Json::array();
    for(const auto &m : r.models) {
        models.push_back(Json{{"config", m.config.label()},
                              {"provenance", to_string(m.provenance)},
                              {"source", r.model_source},
                              {"beta", beta_json(m.beta)},
                              {"reported_mape", optional_number(m.reported_mape)},
                              {"reported_resd", optional_number(m.reported_resd)},
                              {"energy_nj", estimate(r.summary.counters, m)}});
    }
    j["models"] = models;

    if(r.blocks || !r.attribution_error.empty()) {
        Json attribution;
        if(!r.attribution_error.empty())
            attribution["error"] = r.attribution_error;
        Json blocks = Json::array();
        const auto energy = [&](const EventCounters &c) -> Json {
            for(const auto &m : r.models)
                if(m.config == r.config)
                    return estimate(c, m);
            return nullptr;
        };
        if(r.blocks) {
            for(const auto &b : *r.blocks) {
                Json events = Json::array();
                for(auto e : b.counters.events)
                    events.push_back(e);
                blocks.push_back(Json{{"start", hex(b.start)},
                                      {"end", hex(b.end)},
                                      {"entries", b.entries},
                                      {"cycles", b.counters.total_cycles},
                                      {"events", events},
                                      {"energy_nj", energy(b.counters)}});
            }
            Json events = Json::array();
            for(auto e : r.unattributed.events)
                events.push_back(e);
            attribution["unattributed"] = Json{{"events", events}, {"energy_nj", energy(r.unattributed)}};
        }
        attribution["blocks"] = blocks;
        j["attribution"] = attribution;
    }
    return j;
}

std::string to_text(const RunReport &r)
{
    std::ostringstream out;
    char line[160];
    const auto row = [&](const char *key, const std::string &value) {
        std::snprintf(line, sizeof line, "%-18s %s\n", key, value.c_str());
        out << line;
    };
    row("image", r.image.name + " (" + std::to_string(r.image.size) + " bytes)");
    row("config", r.config.label());
    row("exit", std::string(to_string(r.summary.exit_reason)) +
                    (r.summary.fault_detail.empty() ? "" : ": " + r.summary.fault_detail));
    row("cycles", std::to_string(r.summary.cycle_count));
    row("wall time (us)", fixed6(r.wall_time_us()));
    row("r0", std::to_string(r.r0));
    if(!r.output.empty())
        row("output", r.output);
    for(std::size_t i = 0; i < kCounterCount; ++i)
        row(counter_name(i), std::to_string(r.summary.counters.events[i]));
    row("fetch stalls", std::to_string(r.summary.counters.fetch_stall_cycles));
    row("data stalls", std::to_string(r.summary.counters.data_stall_cycles));
    if(const auto e = r.energy_nj())
        row("energy (nJ)", fixed6(*e));
    out << "\nmodel            provenance  energy (nJ)\n";
    for(const auto &m : r.models) {
        std::snprintf(line, sizeof line, "%-16s %-11s %12s\n", m.config.label().c_str(), to_string(m.provenance),
                      fixed6(estimate(r.summary.counters, m)).c_str());
        out << line;
    }
    return out.str();
}

Json sweep_json(const std::vector<RunReport> &reports)
{
    Json runs = Json::array();
    std::vector<ConfigRun> config_runs;
    std::vector<EnergyModel> models;
    for(const auto &r : reports) {
        runs.push_back(to_json(r));
        for(const auto &m : r.models)
            if(m.config == r.config) {
                config_runs.push_back({r.config, r.summary.counters.events, r.summary.cycle_count});
                models.push_back(m);
            }
    }
    Json comparison = Json::array();
    for(const auto &row : compare_configs(config_runs, models))
        comparison.push_back(Json{{"config", row.config.label()}, {"energy_nj", row.energy_nj}, {"time_us", row.time_us}});
    return Json{{"reports", runs}, {"comparison", comparison}};
}

Json block_report(const ImageInfo &image, const Cfg &cfg, const std::vector<EnergyModel> &models)
{
    Json entries = Json::array();
    for(auto e : cfg.entries)
        entries.push_back(hex(e));

    bool any_interval = false;
    Json blocks = Json::array();
    for(const auto &[start, b] : cfg.blocks) {
        Json counts;
        for(std::size_t i = 0; i < kCounterCount; ++i) {
            if(b.counts.known(static_cast<Counter>(i)))
                counts[counter_name(i)] = b.counts.exact[i];
            else
                counts[counter_name(i)] = "unknown";
        }
        Json succ = Json::array();
        for(const auto &e : b.successors)
            succ.push_back(Json{{"kind", to_string(e.kind)},
                                {"target", e.target ? Json(hex(*e.target)) : Json(nullptr)},
                                {"c3", e.counts_taken_branch() ? 1 : 0}});
        Json energy = Json::array();
        for(const auto &m : models) {
            const auto e = block_energy(b.counts, m);
            any_interval = any_interval || !e.is_point();
            Json row{{"config", m.config.label()}};
            row.update(interval_json(e));
            energy.push_back(row);
        }
        blocks.push_back(Json{{"start", hex(b.start)},
                              {"end", hex(b.end)},
                              {"instructions", b.instructions.size()},
                              {"terminator", disassemble(b.terminator())},
                              {"counts", counts},
                              {"resolved", Json{{"c4", b.counts.exact[3]}, {"c5", b.counts.exact[4]}, {"c6", b.counts.exact[5]}}},
                              {"unresolved_reads", b.counts.unresolved_reads},
                              {"unresolved_writes", b.counts.unresolved_writes},
                              {"successors", succ},
                              {"energy", energy}});
    }
    return Json{{"image", image_json(image)}, {"entries", entries}, {"has_intervals", any_interval}, {"blocks", blocks}};
}

std::string block_report_text(const Cfg &cfg, const std::vector<EnergyModel> &models)
{
    std::ostringstream out;
    for(const auto &[start, b] : cfg.blocks) {
        out << hex(b.start) << "-" << hex(b.end) << "  " << b.instructions.size() << " insns, ends "
            << disassemble(b.terminator()) << "\n   ";
        for(std::size_t i = 0; i < kCounterCount; ++i) {
            out << ' ' << counter_name(i) << '=';
            if(b.counts.known(static_cast<Counter>(i)))
                out << b.counts.exact[i];
            else
                out << '?';
        }
        out << "\n   ";
        for(const auto &e : b.successors)
            out << ' ' << to_string(e.kind) << "->" << (e.target ? hex(*e.target) : std::string("?"));
        out << '\n';
        for(const auto &m : models) {
            const auto e = block_energy(b.counts, m);
            out << "    " << m.config.label() << ' ';
            if(e.is_point())
                out << fixed6(e.lo) << " nJ\n";
            else
                out << '[' << fixed6(e.lo) << ", " << fixed6(e.hi) << "] nJ\n";
        }
    }
    return out.str();
}

Json fit_report(const RegressionDataset &ds, const FitResult &fit, const CrossValidation &cv)
{
    Json folds = Json::array();
    for(const auto &f : cv.folds)
        folds.push_back(Json{{"fold", f.fold}, {"rows", f.test_rows.size()}, {"r2", f.r2}, {"mape", f.mape}});
    Json warnings = Json::array();
    for(const auto &w : fit.warnings)
        warnings.push_back(w);
    return Json{{"dataset", ds.name},
                {"rows", ds.rows.size()},
                {"beta", beta_json(fit.beta)},
                {"metrics", Json{{"mape", fit.metrics.mape}, {"resd", fit.metrics.resd}, {"r2", fit.metrics.r2}}},
                {"warnings", warnings},
                {"cross_validation", Json{{"k", cv.k},
                                          {"seed", cv.seed},
                                          {"mean_r2", cv.mean_r2},
                                          {"sd_r2", cv.sd_r2},
                                          {"folds", folds}}}};
}

std::string dump_fixed(const Json &j)
{
    std::string out;
    dump(j, out, 0);
    out += '\n';
    return out;
}

} // namespace cm0
