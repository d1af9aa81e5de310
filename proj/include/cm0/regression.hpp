#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "cm0/energy_model.hpp"

namespace cm0 {

struct Sample {
    std::array<double, kCounterCount> counters{};
    double energy_nj = 0;
};

struct RegressionDataset {
    std::string name;
    std::vector<Sample> rows;
};

// Throws Error(dataset_size) for fewer than 7 rows and Error(parse_error) for
// negative counts, all-zero counter rows, or non-positive energies.
void validate(const RegressionDataset &ds);

// CSV with header c1,c2,c3,c4,c5,c6,energy_nj. Errors name the line.
RegressionDataset read_dataset_csv(std::istream &in, std::string name = {});
void write_dataset_csv(std::ostream &out, const RegressionDataset &ds);

struct Metrics {
    double mape = 0; // %
    double resd = 0; // %
    double r2 = 0;
};

// mean(|pred - actual| / actual) * 100
double mape(std::span<const double> pred, std::span<const double> actual);
// population standard deviation of (pred - actual) / actual * 100
double resd(std::span<const double> pred, std::span<const double> actual);
// 1 - SSres / SStot; NaN when every actual value is identical
double r2(std::span<const double> pred, std::span<const double> actual);
Metrics metrics(std::span<const double> pred, std::span<const double> actual);

struct FoldResult {
    std::size_t fold = 0;
    std::vector<std::size_t> test_rows;
    Coefficients beta{};
    double r2 = 0;
    double mape = 0;
};

struct FitResult {
    Coefficients beta{};
    Metrics metrics;
    std::vector<FoldResult> per_fold;
    std::vector<std::string> warnings;
};

/// Zero-intercept least squares over the six counters. Rank is checked with a
/// column-pivoted QR on unit-norm columns; a rank-deficient design throws
/// Error(degenerate_design) naming the dependent columns. Negative
/// coefficients are kept and reported in `warnings`.
FitResult fit(const RegressionDataset &ds);

std::vector<double> predict(const RegressionDataset &ds, const Coefficients &beta);

struct CrossValidation {
    std::uint64_t seed = 0;
    std::size_t k = 0;
    double mean_r2 = 0;
    // population SD over folds
    double sd_r2 = 0;
    std::vector<FoldResult> folds;
};

// Seeded shuffle into k folds whose sizes differ by at most one. Fold f gets
// positions [start_f, start_f + size_f) of the shuffled order.
std::vector<std::vector<std::size_t>> make_folds(std::size_t rows, std::size_t k, std::uint64_t seed);

/// k-fold cross-validation: each fold is scored by a model fitted on the other
/// k - 1. Folds whose R^2 is undefined (single-row or constant-energy test
/// folds) are left out of the mean and SD.
CrossValidation kfold_cv(const RegressionDataset &ds, std::size_t k = 10, std::uint64_t seed = 1);

} // namespace cm0
