#include "cm0/regression.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "cm0/error.hpp"

namespace cm0 {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> actual)
{
    if(pred.size() != actual.size())
        throw Error(ErrorKind::length_mismatch, "prediction and actual lengths differ (" + std::to_string(pred.size()) +
                                                    " vs " + std::to_string(actual.size()) + ")");
    if(pred.empty())
        throw Error(ErrorKind::length_mismatch, "metrics need at least one value");
}

std::vector<double> relative_errors(std::span<const double> pred, std::span<const double> actual)
{
    check_lengths(pred, actual);
    std::vector<double> out(pred.size());
    for(std::size_t i = 0; i < pred.size(); ++i) {
        if(actual[i] == 0)
            throw Error(ErrorKind::zero_actual, "actual value " + std::to_string(i) + " is zero");
        out[i] = (pred[i] - actual[i]) / actual[i] * 100.0;
    }
    return out;
}

// Uniform draw in [0, n) from a generator whose output sequence is fixed by
// the standard, so fold assignment is reproducible across toolchains.
std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n)
{
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do
        x = rng();
    while(x >= limit);
    return x % n;
}

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kCounterCount)>;

Coefficients solve(const Matrix &x, const Eigen::VectorXd &y)
{
    if(x.rows() < static_cast<Eigen::Index>(kCounterCount))
        throw Error(ErrorKind::dataset_size, "need at least " + std::to_string(kCounterCount) + " rows to fit, got " +
                                                 std::to_string(x.rows()));

    Eigen::Array<double, 1, static_cast<int>(kCounterCount)> norms = x.colwise().norm().array();
    std::string zero_cols;
    for(std::size_t i = 0; i < kCounterCount; ++i)
        if(norms(Eigen::Index(i)) == 0)
            zero_cols += std::string(zero_cols.empty() ? "" : ", ") + counter_name(i);
    if(!zero_cols.empty())
        throw Error(ErrorKind::degenerate_design, "degenerate design: all-zero column(s) " + zero_cols);

    const Matrix scaled = x.array().rowwise() / norms;
    Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
    qr.setThreshold(1e-10);
    if(qr.rank() < static_cast<Eigen::Index>(kCounterCount)) {
        std::string cols;
        const auto &perm = qr.colsPermutation().indices();
        for(Eigen::Index j = qr.rank(); j < perm.size(); ++j)
            cols += std::string(cols.empty() ? "" : ", ") + counter_name(std::size_t(perm(j)));
        throw Error(ErrorKind::degenerate_design,
                    "degenerate design: rank " + std::to_string(qr.rank()) + ", dependent column(s) " + cols);
    }
    const Eigen::VectorXd b = qr.solve(y);
    Coefficients beta{};
    for(std::size_t i = 0; i < kCounterCount; ++i)
        beta[i] = b(Eigen::Index(i)) / norms(Eigen::Index(i));
    return beta;
}

Matrix design(const RegressionDataset &ds, std::span<const std::size_t> rows)
{
    Matrix x(Eigen::Index(rows.size()), Eigen::Index(kCounterCount));
    for(std::size_t r = 0; r < rows.size(); ++r)
        for(std::size_t c = 0; c < kCounterCount; ++c)
            x(Eigen::Index(r), Eigen::Index(c)) = ds.rows[rows[r]].counters[c];
    return x;
}

Eigen::VectorXd response(const RegressionDataset &ds, std::span<const std::size_t> rows)
{
    Eigen::VectorXd y(Eigen::Index(rows.size()));
    for(std::size_t r = 0; r < rows.size(); ++r)
        y(Eigen::Index(r)) = ds.rows[rows[r]].energy_nj;
    return y;
}

double dot(const Sample &s, const Coefficients &beta)
{
    double e = 0;
    for(std::size_t i = 0; i < kCounterCount; ++i)
        e += beta[i] * s.counters[i];
    return e;
}

[[noreturn]] void bad_csv(std::size_t line, const std::string &why)
{
    throw Error(ErrorKind::parse_error, "dataset line " + std::to_string(line) + ": " + why);
}

} // namespace

void validate(const RegressionDataset &ds)
{
    if(ds.rows.size() < kCounterCount + 1)
        throw Error(ErrorKind::dataset_size, "a six-coefficient fit needs at least 7 rows, got " +
                                                 std::to_string(ds.rows.size()));
    for(std::size_t r = 0; r < ds.rows.size(); ++r) {
        const auto &row = ds.rows[r];
        bool any = false;
        for(double c : row.counters) {
            if(!(c >= 0))
                throw Error(ErrorKind::parse_error, "row " + std::to_string(r) + " has a negative counter");
            any = any || c > 0;
        }
        if(!any)
            throw Error(ErrorKind::parse_error, "row " + std::to_string(r) + " has all-zero counters");
        if(!(row.energy_nj > 0))
            throw Error(ErrorKind::parse_error, "row " + std::to_string(r) + " has non-positive energy");
    }
}

RegressionDataset read_dataset_csv(std::istream &in, std::string name)
{
    RegressionDataset ds;
    ds.name = std::move(name);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while(std::getline(in, line)) {
        ++lineno;
        if(!line.empty() && line.back() == '\r')
            line.pop_back();
        if(line.empty())
            continue;
        if(!header) {
            if(line != "c1,c2,c3,c4,c5,c6,energy_nj")
                bad_csv(lineno, "expected header c1,c2,c3,c4,c5,c6,energy_nj");
            header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for(std::string f; std::getline(ss, f, ',');)
            fields.push_back(f);
        if(fields.size() != kCounterCount + 1)
            bad_csv(lineno, "expected 7 fields, got " + std::to_string(fields.size()));

        Sample s;
        for(std::size_t i = 0; i <= kCounterCount; ++i) {
            double v = 0;
            const auto &f = fields[i];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if(res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v))
                bad_csv(lineno, "field " + std::to_string(i + 1) + " is not a number: '" + f + "'");
            if(i < kCounterCount) {
                if(v < 0)
                    bad_csv(lineno, std::string("negative counter ") + counter_name(i));
                s.counters[i] = v;
            } else {
                if(v <= 0)
                    bad_csv(lineno, "energy must be positive");
                s.energy_nj = v;
            }
        }
        if(std::all_of(s.counters.begin(), s.counters.end(), [](double c) { return c == 0; }))
            bad_csv(lineno, "all counters are zero");
        ds.rows.push_back(s);
    }
    if(!header)
        bad_csv(lineno + 1, "missing header");
    return ds;
}

void write_dataset_csv(std::ostream &out, const RegressionDataset &ds)
{
    out << "c1,c2,c3,c4,c5,c6,energy_nj\n";
    char buf[64];
    for(const auto &row : ds.rows) {
        for(std::size_t i = 0; i < kCounterCount; ++i) {
            const auto res = std::to_chars(buf, buf + sizeof buf, row.counters[i]);
            out << std::string_view(buf, std::size_t(res.ptr - buf)) << ',';
        }
        const auto res = std::to_chars(buf, buf + sizeof buf, row.energy_nj);
        out << std::string_view(buf, std::size_t(res.ptr - buf)) << '\n';
    }
}

double mape(std::span<const double> pred, std::span<const double> actual)
{
    const auto rel = relative_errors(pred, actual);
    double sum = 0;
    for(double e : rel)
        sum += std::abs(e);
    return sum / double(rel.size());
}

double resd(std::span<const double> pred, std::span<const double> actual)
{
    const auto rel = relative_errors(pred, actual);
    double mean = 0;
    for(double e : rel)
        mean += e;
    mean /= double(rel.size());
    double var = 0;
    for(double e : rel)
        var += (e - mean) * (e - mean);
    return std::sqrt(var / double(rel.size()));
}

double r2(std::span<const double> pred, std::span<const double> actual)
{
    check_lengths(pred, actual);
    double mean = 0;
    for(double a : actual)
        mean += a;
    mean /= double(actual.size());
    double ss_res = 0;
    double ss_tot = 0;
    for(std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - pred[i]) * (actual[i] - pred[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if(ss_tot == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - ss_res / ss_tot;
}

Metrics metrics(std::span<const double> pred, std::span<const double> actual)
{
    return {mape(pred, actual), resd(pred, actual), r2(pred, actual)};
}

std::vector<double> predict(const RegressionDataset &ds, const Coefficients &beta)
{
    std::vector<double> out;
    out.reserve(ds.rows.size());
    for(const auto &row : ds.rows)
        out.push_back(dot(row, beta));
    return out;
}

FitResult fit(const RegressionDataset &ds)
{
    validate(ds);
    std::vector<std::size_t> all(ds.rows.size());
    for(std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;

    FitResult result;
    result.beta = solve(design(ds, all), response(ds, all));

    std::vector<double> actual;
    for(const auto &row : ds.rows)
        actual.push_back(row.energy_nj);
    result.metrics = metrics(predict(ds, result.beta), actual);

    for(std::size_t i = 0; i < kCounterCount; ++i)
        if(result.beta[i] < 0)
            result.warnings.push_back(std::string("negative coefficient for ") + counter_name(i));
    return result;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t rows, std::size_t k, std::uint64_t seed)
{
    if(k < 2)
        throw Error(ErrorKind::dataset_size, "k-fold cross-validation needs k >= 2");
    if(k > rows)
        throw Error(ErrorKind::dataset_size, "k = " + std::to_string(k) + " exceeds the " + std::to_string(rows) +
                                                 " available rows");

    std::vector<std::size_t> order(rows);
    for(std::size_t i = 0; i < rows; ++i)
        order[i] = i;
    std::mt19937_64 rng(seed);
    for(std::size_t i = rows; i > 1; --i)
        std::swap(order[i - 1], order[bounded(rng, i)]);

    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for(std::size_t f = 0; f < k; ++f) {
        const std::size_t size = rows / k + (f < rows % k ? 1 : 0);
        folds[f].assign(order.begin() + std::ptrdiff_t(pos), order.begin() + std::ptrdiff_t(pos + size));
        pos += size;
    }
    return folds;
}

CrossValidation kfold_cv(const RegressionDataset &ds, std::size_t k, std::uint64_t seed)
{
    validate(ds);
    CrossValidation cv;
    cv.seed = seed;
    cv.k = k;

    const auto folds = make_folds(ds.rows.size(), k, seed);
    for(std::size_t f = 0; f < k; ++f) {
        std::vector<bool> in_test(ds.rows.size(), false);
        for(auto r : folds[f])
            in_test[r] = true;
        std::vector<std::size_t> train;
        for(std::size_t r = 0; r < ds.rows.size(); ++r)
            if(!in_test[r])
                train.push_back(r);

        FoldResult fold;
        fold.fold = f;
        fold.test_rows = folds[f];
        fold.beta = solve(design(ds, train), response(ds, train));

        std::vector<double> pred;
        std::vector<double> actual;
        for(auto r : folds[f]) {
            pred.push_back(dot(ds.rows[r], fold.beta));
            actual.push_back(ds.rows[r].energy_nj);
        }
        fold.r2 = r2(pred, actual);
        fold.mape = mape(pred, actual);
        cv.folds.push_back(std::move(fold));
    }

    std::size_t n = 0;
    double mean = 0;
    for(const auto &f : cv.folds)
        if(std::isfinite(f.r2)) {
            mean += f.r2;
            ++n;
        }
    if(n == 0) {
        cv.mean_r2 = cv.sd_r2 = std::numeric_limits<double>::quiet_NaN();
        return cv;
    }
    mean /= double(n);
    double var = 0;
    for(const auto &f : cv.folds)
        if(std::isfinite(f.r2))
            var += (f.r2 - mean) * (f.r2 - mean);
    cv.mean_r2 = mean;
    cv.sd_r2 = std::sqrt(var / double(n));
    return cv;
}

} // namespace cm0
