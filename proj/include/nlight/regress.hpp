#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nlight/table.hpp"

namespace nlight {

struct Location {
    double x = 0.0;
    double y = 0.0;
};

/// Response, design matrix and (for GWR) observation locations.
///
/// When `intercept` is set the first design column is all ones and the
/// predictor columns follow in `predictors` order.
struct RegressionProblem {
    std::string response;
    std::vector<std::string> predictors;
    bool intercept = true;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<Location> locations;
    std::vector<std::string> row_labels;

    std::size_t n() const noexcept { return static_cast<std::size_t>(X.rows()); }
    std::size_t k() const noexcept { return predictors.size(); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(X.cols()); }

    std::vector<std::string> coefficient_names() const;
};

/// Builds a problem from raw predictor columns (no intercept column).
RegressionProblem make_problem(const Eigen::MatrixXd& predictors, const Eigen::VectorXd& y, bool intercept = true,
                               std::vector<Location> locations = {});

/// Pulls the response and predictors out of a table, dropping rows where any
/// of them (or a coordinate column, when given) is missing. Dropped rows are
/// counted in `dropped` when non-null.
RegressionProblem problem_from_table(const ObservationTable& t, const std::string& response,
                                     const std::vector<std::string>& predictors, bool intercept = true,
                                     std::optional<std::pair<std::string, std::string>> coords = std::nullopt,
                                     std::size_t* dropped = nullptr);

struct FitResult {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;  // y - X b, unweighted
    double rss = 0.0;           // weighted by w for weighted_fit
    double r_squared = 0.0;
    double aic = 0.0;   // n ln(RSS/n) + 2(p + 1)
    double aicc = 0.0;  // n ln(RSS/n) + n (n + p) / (n - 2 - p), the GWR-comparable form
    std::size_t n = 0;  // observations with positive weight
    std::size_t k = 0;  // predictors, excluding the intercept
};

/// Relative tolerance on the pivoted-QR diagonal below which the design is
/// declared rank deficient.
inline constexpr double kRankTolerance = 1e-10;

FitResult ols_fit(const RegressionProblem& p);
FitResult weighted_fit(const RegressionProblem& p, std::span<const double> weights);

enum class KernelKind { Bisquare, Gaussian, Uniform };

KernelKind parse_kernel_kind(std::string_view name);
std::string_view to_string(KernelKind kind) noexcept;

double kernel_weight(double distance, double bandwidth, KernelKind kind);

struct KernelSpec {
    enum class Mode { Fixed, Adaptive };
    KernelKind kind = KernelKind::Bisquare;
    Mode mode = Mode::Adaptive;
    double distance = 0.0;       // Fixed
    std::size_t neighbors = 0;   // Adaptive

    static KernelSpec fixed(KernelKind kind, double distance) { return {kind, Mode::Fixed, distance, 0}; }
    static KernelSpec adaptive(KernelKind kind, std::size_t n) { return {kind, Mode::Adaptive, 0.0, n}; }
};

double euclidean(const Location& a, const Location& b) noexcept;

/// Distance from location i to its N-th nearest other location.
double adaptive_bandwidth(std::span<const Location> locations, std::size_t i, std::size_t neighbors);

struct LocalFit {
    Eigen::VectorXd coefficients;
    double fitted = 0.0;
    double residual = 0.0;
    double leverage = 0.0;  // s_ii
    double bandwidth = 0.0;
    std::size_t weighted_observations = 0;  // rows with positive weight
    std::optional<std::string> error;
};

struct LocalFitSet {
    std::vector<LocalFit> locations;
    double residual_squares = 0.0;
    double effective_parameters = 0.0;  // trace of the hat matrix
    double gwr_aic = 0.0;
    double r_squared = 0.0;
    std::size_t neighbors = 0;  // 0 for a fixed bandwidth
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t failures = 0;

    bool ok() const noexcept { return failures == 0; }
};

/// n ln(RSS/n) + n (n + tr) / (n - 2 - tr); +inf once tr >= n - 2.
double gwr_aicc(std::size_t n, double rss, double trace);

/// Fits a weighted regression at every location. Per-location rank
/// failures are recorded on that location; a zero adaptive bandwidth
/// throws ZeroBandwidth. `threads` only changes scheduling, never output.
LocalFitSet gwr_fit(const RegressionProblem& p, const KernelSpec& kernel, std::size_t threads = 1);

struct NeighborSelection {
    std::size_t neighbors = 0;
    std::vector<std::pair<std::size_t, std::optional<double>>> scores;  // candidate -> gwr_aic
};

/// Candidate neighbor count minimizing GWR AICc; ties go to the larger count.
NeighborSelection select_neighbors(const RegressionProblem& p, KernelKind kind,
                                   const std::vector<std::size_t>& candidates, std::size_t threads = 1);

struct CoefficientSummary {
    std::string name;
    double min = 0.0;
    double lower_quartile = 0.0;
    double mean = 0.0;
    double upper_quartile = 0.0;
    double max = 0.0;
};

/// Type-7 (linearly interpolated) quantile of an unsorted sample.
double quantile_type7(std::vector<double> values, double prob);

std::vector<CoefficientSummary> coefficient_summary(const LocalFitSet& l,
                                                    const std::vector<std::string>& names = {});

/// One row of the local-coefficient report for a single coefficient.
struct GwrReportRow {
    std::string variable;
    std::size_t observations = 0;
    CoefficientSummary summary;
    double global_ols = 0.0;
    std::size_t neighbors = 0;
    double r_squared = 0.0;
    double ols_aic = 0.0;
    double gwr_aic = 0.0;
    double residual_squares = 0.0;
};

GwrReportRow make_report_row(const std::string& variable, std::size_t coefficient, const FitResult& ols,
                             const LocalFitSet& local);

std::string gwr_report_to_csv(const std::vector<GwrReportRow>& rows);
std::string gwr_surface_to_csv(const RegressionProblem& p, const LocalFitSet& l);
std::string fit_to_json(const RegressionProblem& p, const FitResult& fit);

}  // namespace nlight
