#include "nlight/panel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"

namespace nlight {

namespace {

using Cell = ObservationTable::Cell;

// Writes num/den into `out` where both are present; a non-positive
// denominator leaves the cell missing and is tallied.
void derive_ratio(ObservationTable& t, std::string_view out, std::string_view num, std::string_view den) {
    if (!t.has_column(num) || !t.has_column(den)) return;
    t.ensure_column(out);
    const auto& n = t.column(num);
    const auto& d = t.column(den);
    std::vector<Cell> result(t.row_count());
    std::size_t flagged = 0;
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        if (!n[r] || !d[r]) continue;
        if (!(*d[r] > 0.0)) {
            ++flagged;
            continue;
        }
        result[r] = *n[r] / *d[r];
    }
    t.column(out) = std::move(result);
    if (flagged) t.tally(fmt::format("{}:zero_denominator", out), flagged);
}

}  // namespace

ObservationTable derive_indicators(const ObservationTable& t, const DeriveOptions& opts) {
    ObservationTable out = t;
    // Diagnostics describe this derivation, not earlier ones.
    for (auto it = out.diagnostics().begin(); it != out.diagnostics().end();) {
        if (it->first.ends_with(":zero_denominator")) it = out.diagnostics().erase(it);
        else ++it;
    }
    const auto density_den = opts.density_basis == DensityBasis::InsuredPopulation ? var::kInsuredPopulation
                                                                                   : var::kTotalPopulation;
    derive_ratio(out, var::kPremiumDensity, var::kInsurancePremiums, density_den);
    derive_ratio(out, var::kInsuredDensity, var::kInsuredPopulation, var::kTotalPopulation);
    if (opts.gdp_per_capita) derive_ratio(out, var::kGdpPerCapita, var::kGdp, var::kTotalPopulation);

    if (out.has_column(var::kInsuranceCount)) {
        out.ensure_column(var::kInsurancePresence);
        const auto counts = out.column(var::kInsuranceCount);
        auto& presence = out.column(var::kInsurancePresence);
        for (std::size_t r = 0; r < out.row_count(); ++r) {
            presence[r] = counts[r] ? Cell(*counts[r] > 0.0 ? 1.0 : 0.0) : Cell();
        }
    }
    return out;
}

ObservationTable log_transform(const ObservationTable& t, const std::vector<std::string>& vars,
                               const LogPolicy& policy) {
    if (policy.kind == LogPolicy::Kind::Offset && !(policy.epsilon > 0.0))
        throw Error(ErrorCode::InvalidArgument, "log offset epsilon must be positive");
    ObservationTable out = t;
    for (const auto& name : vars) {
        auto& col = out.column(name);
        std::size_t dropped = 0;
        std::size_t floored = 0;
        for (auto& cell : col) {
            if (!cell) continue;
            if (*cell > 0.0) {
                cell = std::log(*cell);
            } else if (policy.kind == LogPolicy::Kind::Offset) {
                cell = std::log(policy.epsilon);
                ++floored;
            } else {
                cell.reset();
                ++dropped;
            }
        }
        if (dropped) out.tally("log_dropped:" + name, dropped);
        if (floored) out.tally("log_floored:" + name, floored);
    }
    return out;
}

namespace {

VariableSummary summarize_column(const std::string& name, const std::vector<Cell>& col) {
    VariableSummary s;
    s.name = name;
    std::vector<double> xs;
    for (const auto& c : col)
        if (c) xs.push_back(*c);
    s.n = xs.size();
    if (xs.empty()) return s;

    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    s.min = *lo;
    s.max = *hi;
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double correction = 0.0;
    for (double x : xs) correction += x - mean;
    mean += correction / n;
    s.mean = std::clamp(mean, *lo, *hi);

    if (xs.size() == 1) {
        s.std_deviation = 0.0;
        s.degenerate = true;
    } else {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        s.std_deviation = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

}  // namespace

SummaryReport summarize(const ObservationTable& t) {
    return summarize(t, t.column_names());
}

SummaryReport summarize(const ObservationTable& t, const std::vector<std::string>& vars) {
    SummaryReport r;
    for (const auto& name : vars) r.variables.push_back(summarize_column(name, t.column(name)));
    return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::MismatchedSamples, "pearson: vectors differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw Error(ErrorCode::TooFewObservations, "pearson: need at least two observations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0))
        throw Error(ErrorCode::DegenerateVariance, "pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_pairwise(std::span<const Cell> x, std::span<const Cell> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::MismatchedSamples, "pearson: vectors differ in length");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] && y[i]) {
            xs.push_back(*x[i]);
            ys.push_back(*y[i]);
        }
    }
    return pearson(xs, ys);
}

CorrelationMatrix correlation_matrix(const ObservationTable& t, const std::vector<std::string>& vars,
                                     MissingPolicy policy) {
    if (vars.size() < 2) throw Error(ErrorCode::InvalidArgument, "correlation matrix needs at least two variables");
    const std::size_t k = vars.size();
    std::vector<std::vector<Cell>> cols;
    for (const auto& v : vars) cols.push_back(t.column(v));

    if (policy == MissingPolicy::Listwise) {
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            const bool complete = std::all_of(cols.begin(), cols.end(), [r](const auto& c) { return c[r].has_value(); });
            if (!complete)
                for (auto& c : cols) c[r].reset();
        }
    }

    CorrelationMatrix m;
    m.names = vars;
    m.values.assign(k, std::vector<std::optional<double>>(k));
    m.counts.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            std::size_t n = 0;
            for (std::size_t r = 0; r < t.row_count(); ++r)
                if (cols[i][r] && cols[j][r]) ++n;
            m.counts[i][j] = m.counts[j][i] = n;
            std::optional<double> value;
            try {
                // the diagonal still goes through pearson so zero variance is flagged
                const double r = pearson_pairwise(cols[i], cols[j]);
                value = i == j ? 1.0 : r;
            } catch (const Error& e) {
                m.flags.push_back(fmt::format("{}~{}:{}", vars[i], vars[j], to_string(e.code())));
            }
            m.values[i][j] = m.values[j][i] = value;
        }
    }
    return m;
}

namespace {

std::string opt_csv(const std::optional<double>& v) {
    return v ? format_csv_number(*v) : std::string();
}

nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string summary_to_csv(const SummaryReport& r) {
    std::string out = "variable,n,min,max,mean,std_deviation\n";
    for (const auto& v : r.variables) {
        out += join_csv_line({v.name, std::to_string(v.n), opt_csv(v.min), opt_csv(v.max), opt_csv(v.mean),
                              opt_csv(v.std_deviation)});
        out += '\n';
    }
    return out;
}

std::string summary_to_json(const SummaryReport& r) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& v : r.variables) {
        j[v.name] = {{"n", v.n},
                     {"min", opt_json(v.min)},
                     {"max", opt_json(v.max)},
                     {"mean", opt_json(v.mean)},
                     {"std_deviation", opt_json(v.std_deviation)},
                     {"degenerate", v.degenerate}};
    }
    return j.dump(2) + '\n';
}

std::string correlation_to_csv(const CorrelationMatrix& m) {
    std::vector<std::string> header = {"variable"};
    header.insert(header.end(), m.names.begin(), m.names.end());
    std::string out = join_csv_line(header) + '\n';
    for (std::size_t i = 0; i < m.names.size(); ++i) {
        std::vector<std::string> row = {m.names[i]};
        for (std::size_t j = 0; j < m.names.size(); ++j) row.push_back(opt_csv(m.values[i][j]));
        out += join_csv_line(row) + '\n';
    }
    return out;
}

std::string correlation_to_json(const CorrelationMatrix& m) {
    nlohmann::ordered_json pairs = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < m.names.size(); ++i) {
        for (std::size_t j = i + 1; j < m.names.size(); ++j) {
            pairs[m.names[i] + "~" + m.names[j]] = {{"r", opt_json(m.values[i][j])}, {"n", m.counts[i][j]}};
        }
    }
    nlohmann::ordered_json j = {{"variables", m.names}, {"pairs", pairs}, {"flags", m.flags}};
    return j.dump(2) + '\n';
}

}  // namespace nlight
