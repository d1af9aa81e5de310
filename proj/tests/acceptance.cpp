// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cm0/driver.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace cm0;

namespace {

// Published model table, transcribed as printed: config, six coefficients,
// MAPE and RESD.
struct PublishedRow {
    int mhz;
    bool prefetch;
    int ws;
    const char *beta[6];
    const char *mape;
    const char *resd;
};

constexpr PublishedRow kPublished[] = {
    {20, false, 0, {"0.964258", "1.652455", "2.091986", "1.109833", "0.650563", "0.633621"}, "2.80", "3.60"},
    {20, false, 1, {"1.282474", "2.110668", "2.191545", "1.185609", "0.416602", "1.178991"}, "2.97", "3.60"},
    {20, true, 0, {"1.003378", "1.885309", "1.802974", "1.122833", "0.849223", "0.475831"}, "2.86", "3.53"},
    {20, true, 1, {"0.895879", "2.185851", "2.001178", "1.493364", "1.076354", "1.573758"}, "3.68", "4.61"},
    {24, false, 0, {"0.959172", "1.888565", "1.357556", "1.089427", "0.993145", "0.562952"}, "3.22", "3.63"},
    {24, false, 1, {"1.178558", "2.540429", "2.042475", "1.190892", "0.979651", "0.891088"}, "3.16", "3.90"},
    {24, true, 0, {"0.985415", "1.933276", "1.448160", "1.075671", "1.011891", "0.617510"}, "3.36", "3.88"},
    {24, true, 1, {"0.883755", "2.156046", "1.633465", "1.436556", "1.152560", "1.455166"}, "4.15", "5.02"},
    {48, false, 1, {"1.096677", "2.364495", "1.627854", "1.173680", "0.681475", "0.652665"}, "3.65", "4.08"},
    {48, true, 1, {"0.816331", "2.014612", "1.372157", "1.402116", "0.835035", "1.250446"}, "4.33", "4.99"},
};

std::string fmt(const char *f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;
    std::string note; // informational, not judged

    void fail(const std::string &why)
    {
        if(pass)
            detail = why;
        pass = false;
    }
};

HardwareConfig config_of(const PublishedRow &row) { return HardwareConfig::make(row.mhz, row.prefetch, row.ws); }

// 1. Every builtin coefficient prints as the published text; unit vectors
// select the coefficient exactly.
Outcome builtin_fidelity()
{
    Outcome o;
    int compared = 0;
    for(const auto &row : kPublished) {
        const auto &m = builtin_model(config_of(row));
        for(std::size_t i = 0; i < 6; ++i) {
            ++compared;
            if(fmt("%.6f", m.beta[i]) != row.beta[i])
                o.fail(m.config.label() + " beta" + std::to_string(i + 1) + " = " + fmt("%.6f", m.beta[i]) +
                       ", published " + row.beta[i]);
            CounterVector unit{};
            unit[i] = 1;
            if(estimate(unit, m) != m.beta[i] || estimate(unit, m) != std::strtod(row.beta[i], nullptr))
                o.fail("unit vector " + std::to_string(i + 1) + " under " + m.config.label());
        }
    }
    if(builtin_models().size() != 10)
        o.fail("expected 10 builtin models");
    if(o.pass)
        o.detail = std::to_string(compared) + " coefficients";
    return o;
}

// 2. estimate against a long-double dot product over the published text.
Outcome evaluator_oracle()
{
    Outcome o;
    std::mt19937_64 rng(77);
    double worst = 0;
    for(const auto &row : kPublished) {
        const auto &m = builtin_model(config_of(row));
        long double beta[6];
        for(int i = 0; i < 6; ++i)
            beta[i] = std::strtold(row.beta[i], nullptr);
        for(int n = 0; n < 1000; ++n) {
            CounterVector c{};
            for(auto &x : c)
                x = rng() % (std::uint64_t(1) << (rng() % 34));
            long double want = 0;
            for(int i = 0; i < 6; ++i)
                want += beta[i] * static_cast<long double>(c[std::size_t(i)]);
            const double got = estimate(c, m);
            const double rel = want == 0 ? std::abs(got) : double(std::fabs((got - want) / want));
            worst = std::max(worst, rel);
        }
    }
    if(worst > 1e-9)
        o.fail("max relative error " + fmt("%.3e", worst));
    else
        o.detail = "10000 vectors, max relative error " + fmt("%.3e", worst);
    return o;
}

double percentile95(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const double pos = 0.95 * double(v.size() - 1);
    const auto lo = std::size_t(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

// 3. 230 rows from [20, OFF, 0] with 3% multiplicative noise, 100 seeds.
std::vector<std::vector<double>> beta_errors(const Coefficients &truth, test::Design design, double &worst_mean,
                                             double &worst_sd)
{
    std::vector<std::vector<double>> errors(6);
    worst_mean = 1;
    worst_sd = 0;
    for(std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto ds = test::synthetic_dataset(230, truth, 0.03, seed, design);
        const auto f = fit(ds);
        for(std::size_t i = 0; i < 6; ++i)
            errors[i].push_back(std::abs(f.beta[i] - truth[i]) / truth[i]);
        const auto cv = kfold_cv(ds, 10, seed);
        worst_mean = std::min(worst_mean, cv.mean_r2);
        worst_sd = std::max(worst_sd, cv.sd_r2);
    }
    return errors;
}

Outcome regression_recovery()
{
    Outcome o;
    Coefficients truth;
    for(std::size_t i = 0; i < 6; ++i)
        truth[i] = std::strtod(kPublished[0].beta[i], nullptr);

    double worst_mean, worst_sd;
    const auto errors = beta_errors(truth, test::Design::calibration, worst_mean, worst_sd);
    std::string p95s;
    for(std::size_t i = 0; i < 6; ++i) {
        const double p = percentile95(errors[i]);
        p95s += (i ? " " : "") + fmt("%.2f%%", 100 * p);
        if(p > 0.05)
            o.fail("beta" + std::to_string(i + 1) + " p95 error " + fmt("%.2f%%", 100 * p));
    }
    if(worst_mean < 0.98)
        o.fail("CV mean R^2 " + fmt("%.4f", worst_mean));
    if(worst_sd > 0.01)
        o.fail("CV R^2 SD " + fmt("%.4f", worst_sd));
    if(o.pass)
        o.detail = "p95 |beta error| " + p95s + "; worst CV mean R^2 " + fmt("%.4f", worst_mean) + ", worst SD " +
                   fmt("%.4f", worst_sd);

    // correlated benchmark-like counters, reported only
    double bm_mean, bm_sd;
    const auto bm = beta_errors(truth, test::Design::benchmark, bm_mean, bm_sd);
    o.note = "benchmark-like design p95 |beta error|";
    for(const auto &e : bm)
        o.note += " " + fmt("%.2f%%", 100 * percentile95(e));
    o.note += "; worst CV mean R^2 " + fmt("%.4f", bm_mean);
    return o;
}

// 4. Hand-computed metric values.
Outcome metric_values()
{
    Outcome o;
    struct Case {
        std::vector<double> pred, actual;
        double mape, resd, r2; // NaN: undefined
    };
    const double nan = std::nan("");
    const Case cases[] = {
        // relative errors +10%, -10%
        {{110, 90}, {100, 100}, 10, 10, nan},
        {{3, 5, 9}, {3, 5, 9}, 0, 0, 1},
        // constant predictor at the mean of (1..5): SSres = SStot. Signed errors
        // 200, 50, 0, -25, -40 %: mean |e| 63, mean 37, squared deviations sum 37880
        {{3, 3, 3, 3, 3}, {1, 2, 3, 4, 5}, 63, std::sqrt(37880.0 / 5), 0},
        // errors +50, +50, -50, -50 %; SSres = 1 + 4 + 2.25 + 4, SStot = 2.75
        {{3, 6, 1.5, 2}, {2, 4, 3, 4}, 50, 50, 1 - 11.25 / 2.75},
    };
    for(std::size_t i = 0; i < std::size(cases); ++i) {
        const auto &c = cases[i];
        const auto m = metrics(c.pred, c.actual);
        const auto same = [](double got, double want) {
            return std::isnan(want) ? std::isnan(got) : std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want));
        };
        if(!same(m.mape, c.mape) || !same(m.resd, c.resd) || !same(m.r2, c.r2))
            o.fail("case " + std::to_string(i + 1) + ": MAPE " + fmt("%.12g", m.mape) + " RESD " +
                   fmt("%.12g", m.resd) + " R2 " + fmt("%.12g", m.r2));
    }
    // the two-element example is exact in binary
    const std::vector<double> p{110, 90}, a{100, 100};
    if(mape(p, a) != 10.0 || resd(p, a) != 10.0)
        o.fail("(110, 90) vs (100, 100) not exactly 10/10");
    if(o.pass)
        o.detail = std::to_string(std::size(cases)) + " vectors";
    return o;
}

// 5. Exact cycles where prefetch cannot overlap; ordering property otherwise.
Outcome cycle_accuracy()
{
    Outcome o;
    int exact = 0, property = 0;
    for(const auto &k : test::kKernels) {
        for(const auto &c : test::kConfigs) {
            const auto r = test::run_kernel(k.name, unsigned(c.ws), c.prefetch);
            const auto label = std::string(k.name) + " " + HardwareConfig::make(c.mhz, c.prefetch, c.ws).label();
            if(r.summary.exit_reason != ExitReason::halt) {
                o.fail(label + " did not halt");
                continue;
            }
            if(c.ws == 0 || !c.prefetch) {
                ++exact;
                const auto want = c.ws == 0 ? k.cycles_ws0 : k.cycles_ws1_off;
                if(r.summary.cycle_count != want)
                    o.fail(label + ": " + std::to_string(r.summary.cycle_count) + " cycles, traced " +
                           std::to_string(want));
            } else {
                ++property;
                if(r.summary.cycle_count > k.cycles_ws1_off || r.summary.cycle_count < k.cycles_ws0)
                    o.fail(label + ": " + std::to_string(r.summary.cycle_count) + " outside [" +
                           std::to_string(k.cycles_ws0) + ", " + std::to_string(k.cycles_ws1_off) + "]");
            }
        }
    }
    if(o.pass)
        o.detail = std::to_string(test::kKernels.size()) + " kernels, " + std::to_string(exact) + " exact runs, " +
                   std::to_string(property) + " prefetch-ordering runs";
    return o;
}

// 6. Counters rebuilt from the emitted trace.
Outcome counter_oracle()
{
    Outcome o;
    int runs = 0;
    for(const auto &k : test::kKernels) {
        for(const auto &c : test::kConfigs) {
            ++runs;
            const auto r = test::run_kernel(k.name, unsigned(c.ws), c.prefetch);
            CounterVector re{};
            for(const auto &s : r.trace) {
                ++re[s.instruction.op == Opcode::muls ? 1 : 0];
                re[2] += s.branch_taken;
                for(const auto &a : s.data_accesses) {
                    if(a.region == AccessRegion::ram)
                        ++re[a.kind == AccessKind::read ? 3 : 4];
                    else if(a.region == AccessRegion::flash)
                        ++re[5];
                }
            }
            const auto &ev = r.summary.counters.events;
            if(re != ev)
                o.fail(std::string(k.name) + ": counters differ from trace recount");
            if(ev[0] + ev[1] != r.trace.size())
                o.fail(std::string(k.name) + ": c1 + c2 != instructions");
            if(ev[2] > ev[0])
                o.fail(std::string(k.name) + ": c3 > c1");
        }
    }
    if(o.pass)
        o.detail = std::to_string(runs) + " runs";
    return o;
}

// 7. Static block counts along the executed path equal the dynamic counters.
Outcome static_dynamic()
{
    Outcome o;
    int kernels = 0;
    double worst = 0;
    for(const auto &k : test::kKernels) {
        if(!k.resolvable)
            continue;
        ++kernels;
        const auto img = test::kernel_image(k.name);
        const std::uint32_t entry = reset_entry(img);
        const auto cfg = extract_cfg(img, std::span(&entry, 1));
        const auto r = test::run_kernel(k.name, 0, false);
        const auto path = trace_to_path(cfg, r.trace);
        const auto counts = path_counts(path);
        if(!counts.fully_resolved()) {
            o.fail(std::string(k.name) + " has unresolved accesses");
            continue;
        }
        if(counts.exact != r.summary.counters.events)
            o.fail(std::string(k.name) + ": static path counts differ from dynamic counters");

        const auto taken = std::make_unique<bool[]>(path.taken.size());
        std::copy(path.taken.begin(), path.taken.end(), taken.get());
        for(const auto &m : builtin_models()) {
            const auto e = path_energy(path.blocks, std::span<const bool>(taken.get(), path.taken.size()), m);
            const double dyn = estimate(r.summary.counters, m);
            const double rel = std::abs(e.lo - dyn) / dyn;
            worst = std::max(worst, rel);
            if(!e.is_point() || rel > 1e-9)
                o.fail(std::string(k.name) + " " + m.config.label() + ": path energy " + fmt("%.9f", e.lo) +
                       " vs dynamic " + fmt("%.9f", dyn));
        }
    }
    if(kernels < 5)
        o.fail("only " + std::to_string(kernels) + " resolvable kernels");
    if(o.pass)
        o.detail = std::to_string(kernels) + " kernels, max relative energy error " + fmt("%.1e", worst);
    return o;
}

// 8. Hardware accuracy figures are carried as metadata only.
Outcome accuracy_metadata()
{
    Outcome o;
    for(const auto &row : kPublished) {
        const auto &m = builtin_model(config_of(row));
        if(!m.reported_mape || !m.reported_resd) {
            o.fail(m.config.label() + " lacks reported MAPE/RESD");
            continue;
        }
        if(fmt("%.2f", *m.reported_mape) != row.mape || fmt("%.2f", *m.reported_resd) != row.resd)
            o.fail(m.config.label() + " reported MAPE/RESD differ from the table");
    }
    RunRequest req;
    req.bytes = test::kernel_bytes("loop");
    req.image = describe_image("loop.bin", req.bytes);
    const auto j = to_json(simulate(req));
    for(const auto &m : j["models"])
        if(!m.contains("reported_mape") || !m.contains("reported_resd") || !m.contains("provenance"))
            o.fail("run report model entry lacks provenance fields");
    if(o.pass)
        o.detail = "schema presence only; hardware accuracy cannot be re-measured";
    return o;
}

// 9. Identical inputs give identical report bytes.
Outcome determinism()
{
    Outcome o;
    int compared = 0;
    for(const auto &k : test::kKernels) {
        std::vector<RunReport> first, second;
        for(const auto &c : all_configs()) {
            RunRequest req;
            req.bytes = test::kernel_bytes(k.name);
            req.image = describe_image(std::string(k.name) + ".bin", req.bytes);
            req.config = c;
            req.attribute_blocks = true;
            first.push_back(simulate(req));
            second.push_back(simulate(req));
            ++compared;
            if(dump_fixed(to_json(first.back())) != dump_fixed(to_json(second.back())))
                o.fail(std::string(k.name) + " " + c.label() + ": run reports differ");
        }
        if(dump_fixed(sweep_json(first)) != dump_fixed(sweep_json(second)))
            o.fail(std::string(k.name) + ": sweep reports differ");
    }
    if(o.pass)
        o.detail = std::to_string(compared) + " report pairs";
    return o;
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        const char *name;
        std::function<Outcome()> check;
    };
    const Criterion criteria[] = {
        {1, "builtin model fidelity", builtin_fidelity},
        {2, "linear evaluator oracle", evaluator_oracle},
        {3, "regression recovery", regression_recovery},
        {4, "metric correctness", metric_values},
        {5, "cycle accuracy", cycle_accuracy},
        {6, "counter oracle equivalence", counter_oracle},
        {7, "static/dynamic agreement", static_dynamic},
        {8, "hardware accuracy metadata", accuracy_metadata},
        {9, "determinism", determinism},
    };

    int failed = 0;
    for(const auto &c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch(const std::exception &e) {
            o.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  criterion %d  %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs);
        if(!o.note.empty())
            std::printf("      note: %s\n", o.note.c_str());
        failed += !o.pass;
    }
    std::fflush(stdout);
    return failed ? 1 : 0;
}
