#include "cm0/energy_model.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "cm0/error.hpp"

namespace cm0 {

namespace {

constexpr std::array<HardwareConfig, 10> kConfigs{{
    {20, false, 0},
    {20, false, 1},
    {20, true, 0},
    {20, true, 1},
    {24, false, 0},
    {24, false, 1},
    {24, true, 0},
    {24, true, 1},
    {48, false, 1},
    {48, true, 1},
}};

std::vector<EnergyModel> make_builtins()
{
    struct Row {
        Coefficients beta;
        double mape;
        double resd;
    };
    // Published coefficients, nJ per event, same order as kConfigs.
    static constexpr Row rows[10] = {
        {{0.964258, 1.652455, 2.091986, 1.109833, 0.650563, 0.633621}, 2.80, 3.60},
        {{1.282474, 2.110668, 2.191545, 1.185609, 0.416602, 1.178991}, 2.97, 3.60},
        {{1.003378, 1.885309, 1.802974, 1.122833, 0.849223, 0.475831}, 2.86, 3.53},
        {{0.895879, 2.185851, 2.001178, 1.493364, 1.076354, 1.573758}, 3.68, 4.61},
        {{0.959172, 1.888565, 1.357556, 1.089427, 0.993145, 0.562952}, 3.22, 3.63},
        {{1.178558, 2.540429, 2.042475, 1.190892, 0.979651, 0.891088}, 3.16, 3.90},
        {{0.985415, 1.933276, 1.448160, 1.075671, 1.011891, 0.617510}, 3.36, 3.88},
        {{0.883755, 2.156046, 1.633465, 1.436556, 1.152560, 1.455166}, 4.15, 5.02},
        {{1.096677, 2.364495, 1.627854, 1.173680, 0.681475, 0.652665}, 3.65, 4.08},
        {{0.816331, 2.014612, 1.372157, 1.402116, 0.835035, 1.250446}, 4.33, 4.99},
    };
    std::vector<EnergyModel> models;
    for(std::size_t i = 0; i < kConfigs.size(); ++i)
        models.push_back({kConfigs[i], rows[i].beta, Provenance::builtin, rows[i].mape, rows[i].resd});
    return models;
}

std::string shortest(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if(b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_line(std::size_t line, const std::string &why)
{
    throw Error(ErrorKind::parse_error, "model file line " + std::to_string(line) + ": " + why);
}

} // namespace

HardwareConfig HardwareConfig::make(int frequency_mhz, bool prefetch, int wait_states)
{
    const HardwareConfig cfg{frequency_mhz, prefetch, wait_states};
    if(!cfg.valid())
        throw Error(ErrorKind::invalid_config, "no energy model for configuration " + cfg.label());
    return cfg;
}

bool HardwareConfig::valid() const { return ordinal() >= 0; }

int HardwareConfig::ordinal() const
{
    const auto it = std::find(kConfigs.begin(), kConfigs.end(), *this);
    return it == kConfigs.end() ? -1 : static_cast<int>(it - kConfigs.begin());
}

std::string HardwareConfig::label() const
{
    return "[" + std::to_string(frequency_mhz) + ", " + (prefetch ? "ON" : "OFF") + ", " + std::to_string(wait_states) +
           "]";
}

const std::array<HardwareConfig, 10> &all_configs() { return kConfigs; }

const char *to_string(Provenance p) { return p == Provenance::builtin ? "builtin" : "fitted"; }

const std::vector<EnergyModel> &builtin_models()
{
    static const std::vector<EnergyModel> models = make_builtins();
    return models;
}

const EnergyModel &builtin_model(const HardwareConfig &config)
{
    const int i = HardwareConfig::make(config.frequency_mhz, config.prefetch, config.wait_states).ordinal();
    return builtin_models()[static_cast<std::size_t>(i)];
}

double estimate(const CounterVector &counters, const EnergyModel &model)
{
    double energy = 0;
    for(std::size_t i = 0; i < kCounterCount; ++i)
        energy += model.beta[i] * static_cast<double>(counters[i]);
    return energy;
}

double estimate(const EventCounters &counters, const EnergyModel &model) { return estimate(counters.events, model); }

Coefficients relative_weights(const EnergyModel &model)
{
    const double total = std::accumulate(model.beta.begin(), model.beta.end(), 0.0);
    if(!(total > 0))
        throw Error(ErrorKind::invalid_config, "relative weights need a positive coefficient sum");
    Coefficients out{};
    for(std::size_t i = 0; i < kCounterCount; ++i)
        out[i] = model.beta[i] / total;
    return out;
}

std::vector<ComparisonRow> compare_configs(const std::vector<ConfigRun> &runs, const std::vector<EnergyModel> &models)
{
    std::vector<ComparisonRow> rows;
    for(const auto &run : runs) {
        const auto it = std::find_if(models.begin(), models.end(),
                                     [&](const EnergyModel &m) { return m.config == run.config; });
        if(it == models.end())
            throw Error(ErrorKind::invalid_config, "no model supplied for " + run.config.label());
        rows.push_back({run.config, estimate(run.counters, *it),
                        static_cast<double>(run.cycles) / run.config.frequency_mhz});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow &a, const ComparisonRow &b) {
        if(a.energy_nj != b.energy_nj)
            return a.energy_nj < b.energy_nj;
        if(a.time_us != b.time_us)
            return a.time_us < b.time_us;
        return a.config.ordinal() < b.config.ordinal();
    });
    return rows;
}

void write_models(std::ostream &out, const std::vector<EnergyModel> &models)
{
    out << "# freq,prefetch,ws,beta1,beta2,beta3,beta4,beta5,beta6\n";
    for(const auto &m : models) {
        out << m.config.frequency_mhz << ',' << (m.config.prefetch ? "on" : "off") << ',' << m.config.wait_states;
        for(double b : m.beta)
            out << ',' << shortest(b);
        out << '\n';
    }
}

std::vector<EnergyModel> read_models(std::istream &in)
{
    std::vector<EnergyModel> models;
    std::string line;
    std::size_t lineno = 0;
    while(std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if(text.empty() || text.front() == '#')
            continue;

        std::vector<std::string> fields;
        std::stringstream ss(text);
        for(std::string f; std::getline(ss, f, ',');)
            fields.push_back(trim(f));
        if(fields.size() != 3 + kCounterCount)
            bad_line(lineno, "expected 9 fields, got " + std::to_string(fields.size()));

        int freq = 0;
        int ws = 0;
        if(std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), freq).ec != std::errc{})
            bad_line(lineno, "bad frequency '" + fields[0] + "'");
        if(fields[1] != "on" && fields[1] != "off")
            bad_line(lineno, "prefetch must be on or off");
        if(std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), ws).ec != std::errc{})
            bad_line(lineno, "bad wait-state count '" + fields[2] + "'");

        EnergyModel model;
        model.provenance = Provenance::fitted;
        try {
            model.config = HardwareConfig::make(freq, fields[1] == "on", ws);
        } catch(const Error &e) {
            bad_line(lineno, e.what());
        }
        for(std::size_t i = 0; i < kCounterCount; ++i) {
            const auto &f = fields[3 + i];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), model.beta[i]);
            if(res.ec != std::errc{} || res.ptr != f.data() + f.size())
                bad_line(lineno, "bad coefficient '" + f + "'");
        }
        models.push_back(model);
    }
    return models;
}

} // namespace cm0
