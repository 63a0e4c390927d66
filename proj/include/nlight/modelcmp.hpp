#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlight/regress.hpp"

namespace nlight {

/// A fitted proxy model reduced to what the information criteria need.
///
/// k_effective counts mean parameters: p for an OLS fit, the hat-matrix
/// trace for a GWR fit. The variance parameter is added by the criteria.
struct CandidateModel {
    std::string label;
    std::string response;
    Eigen::VectorXd response_values;  // empty = not checked
    double n = 0.0;
    double k_effective = 0.0;
    double rss = 0.0;
};

CandidateModel candidate_from_ols(std::string label, const RegressionProblem& p, const FitResult& fit);
CandidateModel candidate_from_gwr(std::string label, const RegressionProblem& p, const LocalFitSet& fit);

/// n ln(rss/n) + 2 (k + 1)
double aic(double n, double rss, double k);
/// n ln(rss/n) + ln(n) (k + 1)
double bic(double n, double rss, double k);

struct LikelihoodRatio {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

/// Nested-model test: n ln(RSS_r / RSS_f) against chi-square(k_f - k_r).
LikelihoodRatio likelihood_ratio(const CandidateModel& restricted, const CandidateModel& full);

struct CandidateScore {
    std::string label;
    std::optional<double> aic;
    std::optional<double> bic;
    std::optional<LikelihoodRatio> lrt;
    std::optional<std::string> error;  // set when the candidate could not be scored
};

struct ModelComparison {
    std::vector<CandidateScore> scores;  // sorted by label
    std::string baseline;
    std::optional<std::string> winner_aic;
    std::optional<std::string> winner_bic;
    std::optional<std::string> winner_lrt;
    std::optional<std::string> overall_winner;
    std::vector<std::string> warnings;

    const CandidateScore& score(const std::string& label) const;
};

/// Scores every candidate and picks per-criterion and overall winners.
///
/// AIC and BIC winners minimize the criterion. The likelihood-ratio winner
/// has the smallest p-value against the baseline (largest statistic on
/// ties); the baseline and models not nesting it sit out that criterion.
/// The overall winner takes the most criteria, ties broken by AIC. All
/// remaining ties resolve by label order, so the result does not depend on
/// the order candidates are supplied in. An empty baseline skips the test.
ModelComparison compare(const std::vector<CandidateModel>& candidates, const std::string& baseline);

std::string comparison_to_csv(const ModelComparison& c);
std::string comparison_to_json(const ModelComparison& c);

}  // namespace nlight
