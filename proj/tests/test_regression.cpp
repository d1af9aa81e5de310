#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "cm0/error.hpp"
#include "cm0/regression.hpp"
#include "synthetic.hpp"

using namespace cm0;

namespace {

const Coefficients kBeta{0.964258, 1.652455, 2.091986, 1.109833, 0.650563, 0.633621};

ErrorKind error_of(auto &&f)
{
    try {
        f();
    } catch(const Error &e) {
        return e.kind();
    }
    FAIL("no error");
    return ErrorKind::parse_error;
}

} // namespace

TEST_CASE("metrics on identical vectors")
{
    const std::vector<double> a{3, 5, 9};
    CHECK(mape(a, a) == 0.0);
    CHECK(resd(a, a) == 0.0);
    CHECK(r2(a, a) == 1.0);
}

TEST_CASE("metrics by hand")
{
    const std::vector<double> pred{110, 90}, actual{100, 100};
    CHECK(mape(pred, actual) == 10.0);
    CHECK(resd(pred, actual) == 10.0);
    // constant actual: R^2 undefined
    CHECK(std::isnan(r2(pred, actual)));

    // errors +10%, -10%, +20%: mean |e| = 40/3; mean e = 20/3;
    // deviations 10/3, -50/3, 40/3 -> variance (100 + 2500 + 1600)/27 = 4200/27
    const std::vector<double> p3{11, 18, 48}, a3{10, 20, 40};
    CHECK(mape(p3, a3) == doctest::Approx(40.0 / 3).epsilon(1e-15));
    CHECK(resd(p3, a3) == doctest::Approx(std::sqrt(4200.0 / 27)).epsilon(1e-15));
    // mean 70/3; SStot = (40/3)^2 + (10/3)^2 + (50/3)^2 = 4200/9; SSres = 1 + 4 + 64
    CHECK(r2(p3, a3) == doctest::Approx(1.0 - 69.0 / (4200.0 / 9)).epsilon(1e-15));
}

TEST_CASE("constant predictor has zero R^2")
{
    const std::vector<double> actual{1, 2, 3, 4, 5};
    const std::vector<double> pred(5, 3.0);
    CHECK(r2(pred, actual) == 0.0);
}

TEST_CASE("metric errors")
{
    const std::vector<double> two{1, 2}, three{1, 2, 3}, zero{0, 1};
    CHECK(error_of([&] { mape(two, three); }) == ErrorKind::length_mismatch);
    CHECK(error_of([&] { mape(two, zero); }) == ErrorKind::zero_actual);
    CHECK(error_of([&] { resd(two, zero); }) == ErrorKind::zero_actual);
}

TEST_CASE("noiseless recovery")
{
    const auto ds = test::synthetic_dataset(40, kBeta, 0.0, 3);
    const auto f = fit(ds);
    for(std::size_t i = 0; i < 6; ++i)
        CHECK(f.beta[i] == doctest::Approx(kBeta[i]).epsilon(1e-9));
    CHECK(f.metrics.mape < 1e-9);
    CHECK(f.metrics.r2 == doctest::Approx(1.0));
    CHECK(f.warnings.empty());
}

TEST_CASE("zero column is degenerate")
{
    auto ds = test::synthetic_dataset(30, kBeta, 0.0, 4);
    for(auto &r : ds.rows)
        r.counters[5] = 0;
    try {
        fit(ds);
        FAIL("no error");
    } catch(const Error &e) {
        CHECK(e.kind() == ErrorKind::degenerate_design);
        CHECK(std::string(e.what()).find("c6") != std::string::npos);
    }
}

TEST_CASE("collinear columns are degenerate")
{
    auto ds = test::synthetic_dataset(30, kBeta, 0.0, 5);
    for(auto &r : ds.rows)
        r.counters[4] = 2 * r.counters[3];
    CHECK(error_of([&] { fit(ds); }) == ErrorKind::degenerate_design);
}

TEST_CASE("dataset validation")
{
    CHECK(error_of([&] { fit(test::synthetic_dataset(6, kBeta, 0.0, 1)); }) == ErrorKind::dataset_size);
    auto ds = test::synthetic_dataset(10, kBeta, 0.0, 1);
    ds.rows[3].energy_nj = 0;
    CHECK(error_of([&] { validate(ds); }) == ErrorKind::parse_error);
    ds = test::synthetic_dataset(10, kBeta, 0.0, 1);
    ds.rows[2].counters[1] = -1;
    CHECK(error_of([&] { validate(ds); }) == ErrorKind::parse_error);
}

TEST_CASE("noisy fit stays close")
{
    const auto ds = test::synthetic_dataset(230, kBeta, 0.03, 11);
    const auto f = fit(ds);
    for(std::size_t i = 0; i < 6; ++i)
        CHECK(std::abs(f.beta[i] - kBeta[i]) / kBeta[i] < 0.05);
    CHECK(f.metrics.mape < 5.0);
}

TEST_CASE("noisy fit on correlated counters keeps the dominant terms")
{
    // small-share events are poorly identified here; only the large ones are checked
    const auto ds = test::synthetic_dataset(230, kBeta, 0.03, 11, test::Design::benchmark);
    const auto f = fit(ds);
    CHECK(std::abs(f.beta[0] - kBeta[0]) / kBeta[0] < 0.05);
    CHECK(f.metrics.mape < 5.0);
    CHECK(f.metrics.r2 > 0.98);
}

TEST_CASE("predict is the dot product")
{
    const auto ds = test::synthetic_dataset(8, kBeta, 0.0, 2);
    const auto p = predict(ds, kBeta);
    for(std::size_t r = 0; r < ds.rows.size(); ++r) {
        double e = 0;
        for(std::size_t k = 0; k < 6; ++k)
            e += kBeta[k] * ds.rows[r].counters[k];
        CHECK(p[r] == doctest::Approx(e).epsilon(1e-12));
    }
}

TEST_CASE("folds partition the rows")
{
    for(std::size_t n : {10u, 23u, 230u}) {
        for(std::size_t k : {2u, 3u, 10u}) {
            CAPTURE(n);
            CAPTURE(k);
            const auto folds = make_folds(n, k, 99);
            REQUIRE(folds.size() == k);
            std::multiset<std::size_t> all;
            std::size_t lo = n, hi = 0;
            for(const auto &f : folds) {
                all.insert(f.begin(), f.end());
                lo = std::min(lo, f.size());
                hi = std::max(hi, f.size());
            }
            CHECK(all.size() == n);
            CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == n);
            CHECK(*all.rbegin() == n - 1);
            CHECK(hi - lo <= 1);
        }
    }
    CHECK(error_of([] { make_folds(5, 6, 1); }) == ErrorKind::dataset_size);
    CHECK(error_of([] { make_folds(5, 1, 1); }) == ErrorKind::dataset_size);
}

TEST_CASE("same seed, same folds and results")
{
    CHECK(make_folds(50, 10, 7) == make_folds(50, 10, 7));
    CHECK(make_folds(50, 10, 7) != make_folds(50, 10, 8));

    const auto ds = test::synthetic_dataset(60, kBeta, 0.03, 21);
    const auto a = kfold_cv(ds, 10, 5);
    const auto b = kfold_cv(ds, 10, 5);
    CHECK(a.mean_r2 == b.mean_r2);
    CHECK(a.sd_r2 == b.sd_r2);
    REQUIRE(a.folds.size() == b.folds.size());
    for(std::size_t i = 0; i < a.folds.size(); ++i) {
        CHECK(a.folds[i].test_rows == b.folds[i].test_rows);
        CHECK(a.folds[i].beta == b.folds[i].beta);
    }
}

TEST_CASE("cross-validation mean and sd")
{
    const auto ds = test::synthetic_dataset(230, kBeta, 0.03, 8);
    const auto cv = kfold_cv(ds, 10, 1);
    REQUIRE(cv.folds.size() == 10);
    double mean = 0;
    for(const auto &f : cv.folds)
        mean += f.r2;
    mean /= 10;
    double var = 0;
    for(const auto &f : cv.folds)
        var += (f.r2 - mean) * (f.r2 - mean);
    CHECK(cv.mean_r2 == doctest::Approx(mean).epsilon(1e-12));
    CHECK(cv.sd_r2 == doctest::Approx(std::sqrt(var / 10)).epsilon(1e-9));
    CHECK(cv.mean_r2 > 0.98);
}

TEST_CASE("csv round trip and errors")
{
    const auto ds = test::synthetic_dataset(9, kBeta, 0.01, 3);
    std::stringstream s;
    write_dataset_csv(s, ds);
    const auto back = read_dataset_csv(s);
    REQUIRE(back.rows.size() == 9);
    for(std::size_t i = 0; i < 9; ++i) {
        CHECK(back.rows[i].counters == ds.rows[i].counters);
        CHECK(back.rows[i].energy_nj == doctest::Approx(ds.rows[i].energy_nj).epsilon(1e-6));
    }

    std::istringstream header("c1,c2,c3\n");
    CHECK(error_of([&] { read_dataset_csv(header); }) == ErrorKind::parse_error);
    std::istringstream field("c1,c2,c3,c4,c5,c6,energy_nj\n1,2,3,4,5,x,7\n");
    try {
        read_dataset_csv(field);
        FAIL("no error");
    } catch(const Error &e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}
