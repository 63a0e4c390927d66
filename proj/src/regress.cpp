#include "nlight/regress.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"

namespace nlight {

std::vector<std::string> RegressionProblem::coefficient_names() const {
    std::vector<std::string> names;
    if (intercept) names.emplace_back("(intercept)");
    names.insert(names.end(), predictors.begin(), predictors.end());
    return names;
}

RegressionProblem make_problem(const Eigen::MatrixXd& predictors, const Eigen::VectorXd& y, bool intercept,
                               std::vector<Location> locations) {
    if (predictors.rows() != y.size())
        throw Error(ErrorCode::MismatchedSamples, "design and response differ in length");
    if (!locations.empty() && static_cast<Eigen::Index>(locations.size()) != y.size())
        throw Error(ErrorCode::MismatchedSamples, "locations and response differ in length");
    RegressionProblem p;
    p.response = "y";
    for (Eigen::Index c = 0; c < predictors.cols(); ++c) p.predictors.push_back(fmt::format("x{}", c + 1));
    p.intercept = intercept;
    const Eigen::Index offset = intercept ? 1 : 0;
    p.X.resize(predictors.rows(), predictors.cols() + offset);
    if (intercept) p.X.col(0).setOnes();
    p.X.rightCols(predictors.cols()) = predictors;
    p.y = y;
    p.locations = std::move(locations);
    return p;
}

RegressionProblem problem_from_table(const ObservationTable& t, const std::string& response,
                                     const std::vector<std::string>& predictors, bool intercept,
                                     std::optional<std::pair<std::string, std::string>> coords,
                                     std::size_t* dropped) {
    std::vector<const std::vector<ObservationTable::Cell>*> cols;
    cols.push_back(&t.column(response));
    for (const auto& name : predictors) cols.push_back(&t.column(name));
    if (coords) {
        cols.push_back(&t.column(coords->first));
        cols.push_back(&t.column(coords->second));
    }

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        bool complete = std::all_of(cols.begin(), cols.end(), [r](const auto* c) { return (*c)[r].has_value(); });
        if (complete) rows.push_back(r);
    }
    if (dropped) *dropped = t.row_count() - rows.size();

    RegressionProblem p;
    p.response = response;
    p.predictors = predictors;
    p.intercept = intercept;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index offset = intercept ? 1 : 0;
    p.X.resize(n, static_cast<Eigen::Index>(predictors.size()) + offset);
    p.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t r = rows[static_cast<std::size_t>(i)];
        p.y(i) = *(*cols[0])[r];
        if (intercept) p.X(i, 0) = 1.0;
        for (std::size_t c = 0; c < predictors.size(); ++c)
            p.X(i, static_cast<Eigen::Index>(c) + offset) = *(*cols[c + 1])[r];
        if (coords) p.locations.push_back({*(*cols[predictors.size() + 1])[r], *(*cols[predictors.size() + 2])[r]});
        const auto& key = t.keys()[r];
        p.row_labels.push_back(fmt::format("{}:{}", key.unit, key.year));
    }
    return p;
}

namespace {

// Least squares on the rows with positive weight, via column-pivoted QR of
// sqrt(W) X. The normal-equation inverse is never formed.
class WeightedSolver {
public:
    WeightedSolver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const double> w) {
        const Eigen::Index p = X.cols();
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i] > 0.0) rows_.push_back(static_cast<Eigen::Index>(i));
        const Eigen::Index m = static_cast<Eigen::Index>(rows_.size());
        if (m <= p)
            throw Error(ErrorCode::InsufficientEffectiveObservations,
                        fmt::format("{} positively weighted observations for {} coefficients", m, p));
        Eigen::MatrixXd A(m, p);
        Eigen::VectorXd b(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const Eigen::Index i = rows_[static_cast<std::size_t>(r)];
            const double s = std::sqrt(w[static_cast<std::size_t>(i)]);
            A.row(r) = s * X.row(i);
            b(r) = s * y(i);
        }
        qr_.setThreshold(kRankTolerance);
        qr_.compute(A);
        if (qr_.rank() < p)
            throw Error(ErrorCode::RankDeficient,
                        fmt::format("design has rank {} < {} coefficients", qr_.rank(), p));
        beta_ = qr_.solve(b);
    }

    const Eigen::VectorXd& coefficients() const noexcept { return beta_; }
    std::size_t used_rows() const noexcept { return rows_.size(); }

    // x' (X' W X)^{-1} x
    double inverse_quadratic(const Eigen::VectorXd& x) const {
        const Eigen::Index p = beta_.size();
        Eigen::VectorXd px = qr_.colsPermutation().transpose() * x;
        Eigen::VectorXd v = qr_.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>().transpose().solve(px);
        return v.squaredNorm();
    }

private:
    std::vector<Eigen::Index> rows_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
    Eigen::VectorXd beta_;
};

double aic_form(double n, double rss, double params) {
    return n * std::log(rss / n) + 2.0 * (params + 1.0);
}

double aicc_form(double n, double rss, double trace) {
    const double denom = n - 2.0 - trace;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return n * std::log(rss / n) + n * (n + trace) / denom;
}

FitResult summarize_fit(const RegressionProblem& p, const Eigen::VectorXd& beta, std::span<const double> w,
                        std::size_t used) {
    FitResult f;
    f.coefficients = beta;
    f.residuals = p.y - p.X * beta;
    f.n = used;
    f.k = p.k();
    double wsum = 0.0, wy = 0.0;
    for (Eigen::Index i = 0; i < p.y.size(); ++i) {
        wsum += w[static_cast<std::size_t>(i)];
        wy += w[static_cast<std::size_t>(i)] * p.y(i);
    }
    const double ybar = wy / wsum;
    double rss = 0.0, tss = 0.0;
    for (Eigen::Index i = 0; i < p.y.size(); ++i) {
        const double wi = w[static_cast<std::size_t>(i)];
        rss += wi * f.residuals(i) * f.residuals(i);
        tss += wi * (p.y(i) - ybar) * (p.y(i) - ybar);
    }
    f.rss = rss;
    f.r_squared = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
    if (p.intercept) f.r_squared = std::clamp(f.r_squared, 0.0, 1.0);
    const double n = static_cast<double>(used);
    f.aic = aic_form(n, rss, static_cast<double>(p.p()));
    f.aicc = aicc_form(n, rss, static_cast<double>(p.p()));
    return f;
}

}  // namespace

FitResult ols_fit(const RegressionProblem& p) {
    std::vector<double> ones(p.n(), 1.0);
    return weighted_fit(p, ones);
}

FitResult weighted_fit(const RegressionProblem& p, std::span<const double> weights) {
    if (weights.size() != p.n())
        throw Error(ErrorCode::MismatchedSamples, "weight vector length differs from observations");
    if (p.p() == 0) throw Error(ErrorCode::InvalidArgument, "model has no coefficients");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorCode::InvalidArgument, "weights must be finite and non-negative");
    WeightedSolver solver(p.X, p.y, weights);
    return summarize_fit(p, solver.coefficients(), weights, solver.used_rows());
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "bisquare") return KernelKind::Bisquare;
    if (name == "gaussian") return KernelKind::Gaussian;
    if (name == "uniform") return KernelKind::Uniform;
    throw Error(ErrorCode::InvalidArgument, fmt::format("unknown kernel '{}'", name));
}

std::string_view to_string(KernelKind kind) noexcept {
    switch (kind) {
        case KernelKind::Bisquare: return "bisquare";
        case KernelKind::Gaussian: return "gaussian";
        case KernelKind::Uniform: return "uniform";
    }
    return "unknown";
}

double kernel_weight(double distance, double bandwidth, KernelKind kind) {
    if (!(bandwidth > 0.0)) throw Error(ErrorCode::ZeroBandwidth, "kernel bandwidth must be positive");
    if (!(distance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel distance must be non-negative");
    const double u = distance / bandwidth;
    switch (kind) {
        case KernelKind::Bisquare: {
            if (u >= 1.0) return 0.0;
            const double t = 1.0 - u * u;
            return t * t;
        }
        case KernelKind::Gaussian:
            return std::exp(-0.5 * u * u);
        case KernelKind::Uniform:
            return u < 1.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

double euclidean(const Location& a, const Location& b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

double nth_neighbor_distance(std::span<const Location> locations, std::size_t i, std::size_t neighbors,
                             std::vector<double>& scratch) {
    scratch.clear();
    for (std::size_t j = 0; j < locations.size(); ++j)
        if (j != i) scratch.push_back(euclidean(locations[i], locations[j]));
    // Ties share a distance, so the N-th value does not depend on tie order.
    auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(neighbors - 1);
    std::nth_element(scratch.begin(), nth, scratch.end());
    return *nth;
}

}  // namespace

double adaptive_bandwidth(std::span<const Location> locations, std::size_t i, std::size_t neighbors) {
    if (i >= locations.size()) throw Error(ErrorCode::InvalidArgument, "location index out of range");
    if (neighbors == 0 || neighbors + 1 > locations.size())
        throw Error(ErrorCode::NotEnoughLocations,
                    fmt::format("{} neighbors requested from {} locations", neighbors, locations.size()));
    std::vector<double> scratch;
    return nth_neighbor_distance(locations, i, neighbors, scratch);
}

double gwr_aicc(std::size_t n, double rss, double trace) {
    return aicc_form(static_cast<double>(n), rss, trace);
}

LocalFitSet gwr_fit(const RegressionProblem& p, const KernelSpec& kernel, std::size_t threads) {
    const std::size_t n = p.n();
    if (p.locations.size() != n) throw Error(ErrorCode::InvalidArgument, "GWR needs one location per observation");
    if (p.p() == 0) throw Error(ErrorCode::InvalidArgument, "model has no coefficients");
    if (kernel.mode == KernelSpec::Mode::Fixed) {
        if (!(kernel.distance > 0.0)) throw Error(ErrorCode::ZeroBandwidth, "fixed bandwidth must be positive");
    } else {
        if (kernel.neighbors < p.p() + 1)
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("adaptive kernel needs at least {} neighbors", p.p() + 1));
        if (kernel.neighbors + 1 > n)
            throw Error(ErrorCode::NotEnoughLocations,
                        fmt::format("{} neighbors requested from {} locations", kernel.neighbors, n));
    }

    LocalFitSet out;
    out.locations.resize(n);
    out.n = n;
    out.p = p.p();
    out.neighbors = kernel.mode == KernelSpec::Mode::Adaptive ? kernel.neighbors : 0;

    std::vector<char> zero_bandwidth(n, 0);
    auto fit_range = [&](std::size_t begin, std::size_t end) {
        std::vector<double> scratch;
        std::vector<double> w(n);
        for (std::size_t i = begin; i < end; ++i) {
            LocalFit& lf = out.locations[i];
            lf.bandwidth = kernel.mode == KernelSpec::Mode::Fixed
                               ? kernel.distance
                               : nth_neighbor_distance(p.locations, i, kernel.neighbors, scratch);
            if (!(lf.bandwidth > 0.0)) {
                zero_bandwidth[i] = 1;
                lf.error = "ZeroBandwidth";
                continue;
            }
            for (std::size_t j = 0; j < n; ++j)
                w[j] = kernel_weight(euclidean(p.locations[i], p.locations[j]), lf.bandwidth, kernel.kind);
            try {
                WeightedSolver solver(p.X, p.y, w);
                const Eigen::VectorXd xi = p.X.row(static_cast<Eigen::Index>(i)).transpose();
                lf.coefficients = solver.coefficients();
                lf.weighted_observations = solver.used_rows();
                lf.fitted = xi.dot(lf.coefficients);
                lf.residual = p.y(static_cast<Eigen::Index>(i)) - lf.fitted;
                lf.leverage = w[i] * solver.inverse_quadratic(xi);
            } catch (const Error& e) {
                lf.error = std::string(to_string(e.code()));
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        fit_range(0, n);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t t = 0; t < workers; ++t) {
            const std::size_t begin = std::min(n, t * chunk);
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                try {
                    fit_range(begin, end);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (std::size_t i = 0; i < n; ++i)
        if (zero_bandwidth[i])
            throw Error(ErrorCode::ZeroBandwidth,
                        fmt::format("location {} has zero adaptive bandwidth (duplicate locations)", i));

    // Global diagnostics, reduced in location order.
    double rss = 0.0, trace = 0.0;
    for (const auto& lf : out.locations) {
        if (lf.error) {
            ++out.failures;
            continue;
        }
        rss += lf.residual * lf.residual;
        trace += lf.leverage;
    }
    if (out.failures > 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.residual_squares = out.effective_parameters = out.gwr_aic = out.r_squared = nan;
        return out;
    }
    const double ybar = p.y.mean();
    const double tss = (p.y.array() - ybar).square().sum();
    out.residual_squares = rss;
    out.effective_parameters = trace;
    out.gwr_aic = gwr_aicc(n, rss, trace);
    out.r_squared = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
    return out;
}

NeighborSelection select_neighbors(const RegressionProblem& p, KernelKind kind,
                                   const std::vector<std::size_t>& candidates, std::size_t threads) {
    if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no neighbor candidates given");
    for (std::size_t c : candidates) {
        if (c < p.p() + 1 || c + 1 > p.n())
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("neighbor candidate {} outside [{}, {}]", c, p.p() + 1, p.n() - 1));
    }
    NeighborSelection sel;
    std::optional<double> best;
    for (std::size_t c : candidates) {
        std::optional<double> score;
        try {
            LocalFitSet l = gwr_fit(p, KernelSpec::adaptive(kind, c), threads);
            if (l.ok() && !std::isnan(l.gwr_aic)) score = l.gwr_aic;
        } catch (const Error& e) {
            if (!is_numerical(e.code())) throw;
        }
        sel.scores.emplace_back(c, score);
        if (!score) continue;
        if (!best || *score < *best || (*score == *best && c > sel.neighbors)) {
            best = score;
            sel.neighbors = c;
        }
    }
    if (!best) throw Error(ErrorCode::AllCandidatesFailed, "every neighbor candidate failed to fit");
    return sel;
}

double quantile_type7(std::vector<double> values, double prob) {
    if (values.empty()) throw Error(ErrorCode::TooFewObservations, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<CoefficientSummary> coefficient_summary(const LocalFitSet& l, const std::vector<std::string>& names) {
    std::vector<CoefficientSummary> out;
    for (std::size_t c = 0; c < l.p; ++c) {
        std::vector<double> surface;
        for (const auto& lf : l.locations)
            if (!lf.error) surface.push_back(lf.coefficients(static_cast<Eigen::Index>(c)));
        if (surface.empty()) throw Error(ErrorCode::AllCandidatesFailed, "no successful local fits to summarize");
        CoefficientSummary s;
        s.name = c < names.size() ? names[c] : fmt::format("beta{}", c);
        const auto [lo, hi] = std::minmax_element(surface.begin(), surface.end());
        s.min = *lo;
        s.max = *hi;
        s.mean = std::clamp(std::accumulate(surface.begin(), surface.end(), 0.0) / static_cast<double>(surface.size()),
                            s.min, s.max);
        s.lower_quartile = quantile_type7(surface, 0.25);
        s.upper_quartile = quantile_type7(surface, 0.75);
        out.push_back(std::move(s));
    }
    return out;
}

GwrReportRow make_report_row(const std::string& variable, std::size_t coefficient, const FitResult& ols,
                             const LocalFitSet& local) {
    GwrReportRow row;
    row.variable = variable;
    row.observations = local.n;
    row.summary = coefficient_summary(local).at(coefficient);
    row.summary.name = variable;
    row.global_ols = ols.coefficients(static_cast<Eigen::Index>(coefficient));
    row.neighbors = local.neighbors;
    row.r_squared = local.r_squared;
    row.ols_aic = ols.aicc;
    row.gwr_aic = local.gwr_aic;
    row.residual_squares = local.residual_squares;
    return row;
}

std::string gwr_report_to_csv(const std::vector<GwrReportRow>& rows) {
    std::string out =
        "variable,observations,min,lower_quartile,mean,global_ols,upper_quartile,max,neighbors,"
        "r_squared,ols_aic,gwr_aic,residual_squares\n";
    for (const auto& r : rows) {
        out += join_csv_line({r.variable, std::to_string(r.observations), format_csv_number(r.summary.min),
                              format_csv_number(r.summary.lower_quartile), format_csv_number(r.summary.mean),
                              format_csv_number(r.global_ols), format_csv_number(r.summary.upper_quartile),
                              format_csv_number(r.summary.max), std::to_string(r.neighbors),
                              format_csv_number(r.r_squared), format_csv_number(r.ols_aic),
                              format_csv_number(r.gwr_aic), format_csv_number(r.residual_squares)});
        out += '\n';
    }
    return out;
}

std::string gwr_surface_to_csv(const RegressionProblem& p, const LocalFitSet& l) {
    std::vector<std::string> header = {"location_id", "x", "y"};
    for (std::size_t c = 0; c < l.p; ++c) header.push_back(fmt::format("beta{}", c));
    header.emplace_back("leverage");
    header.emplace_back("residual");
    std::string out = join_csv_line(header) + '\n';
    for (std::size_t i = 0; i < l.locations.size(); ++i) {
        const auto& lf = l.locations[i];
        std::vector<std::string> row = {std::to_string(i), format_csv_number(p.locations[i].x),
                                        format_csv_number(p.locations[i].y)};
        for (std::size_t c = 0; c < l.p; ++c)
            row.push_back(lf.error ? std::string() : format_csv_number(lf.coefficients(static_cast<Eigen::Index>(c))));
        row.push_back(lf.error ? std::string() : format_csv_number(lf.leverage));
        row.push_back(lf.error ? std::string() : format_csv_number(lf.residual));
        out += join_csv_line(row) + '\n';
    }
    return out;
}

std::string fit_to_json(const RegressionProblem& p, const FitResult& fit) {
    nlohmann::ordered_json coefs = nlohmann::ordered_json::object();
    const auto names = p.coefficient_names();
    for (std::size_t c = 0; c < names.size(); ++c) coefs[names[c]] = fit.coefficients(static_cast<Eigen::Index>(c));
    auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
    nlohmann::ordered_json j = {{"response", p.response},
                                {"coefficients", coefs},
                                {"n", fit.n},
                                {"k", fit.k},
                                {"rss", fit.rss},
                                {"r_squared", fit.r_squared},
                                {"aic", finite_or_null(fit.aic)},
                                {"aicc", finite_or_null(fit.aicc)}};
    return j.dump(2) + '\n';
}

}  // namespace nlight
