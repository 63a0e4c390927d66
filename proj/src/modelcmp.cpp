#include "nlight/modelcmp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "nlight/chisq.hpp"
#include "nlight/csv.hpp"
#include "nlight/error.hpp"

namespace nlight {

CandidateModel candidate_from_ols(std::string label, const RegressionProblem& p, const FitResult& fit) {
    return {std::move(label), p.response, p.y, static_cast<double>(fit.n), static_cast<double>(p.p()), fit.rss};
}

CandidateModel candidate_from_gwr(std::string label, const RegressionProblem& p, const LocalFitSet& fit) {
    if (!fit.ok()) throw Error(ErrorCode::RankDeficient, fmt::format("GWR fit for '{}' has failed locations", label));
    return {std::move(label), p.response, p.y, static_cast<double>(fit.n), fit.effective_parameters,
            fit.residual_squares};
}

namespace {

void check_criterion_inputs(double n, double rss) {
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "criterion needs n > 0");
    if (!(rss > 0.0)) throw Error(ErrorCode::NonPositiveRSS, fmt::format("RSS must be positive, got {}", rss));
}

}  // namespace

double aic(double n, double rss, double k) {
    check_criterion_inputs(n, rss);
    return n * std::log(rss / n) + 2.0 * (k + 1.0);
}

double bic(double n, double rss, double k) {
    check_criterion_inputs(n, rss);
    return n * std::log(rss / n) + std::log(n) * (k + 1.0);
}

LikelihoodRatio likelihood_ratio(const CandidateModel& restricted, const CandidateModel& full) {
    LikelihoodRatio r;
    r.df = full.k_effective - restricted.k_effective;
    if (!(r.df > 0.0))
        throw Error(ErrorCode::NotNested,
                    fmt::format("'{}' does not have fewer parameters than '{}'", restricted.label, full.label));
    if (restricted.n != full.n || restricted.response != full.response)
        throw Error(ErrorCode::MismatchedSamples,
                    fmt::format("'{}' and '{}' are fitted to different samples", restricted.label, full.label));
    if (restricted.response_values.size() > 0 && full.response_values.size() > 0 &&
        restricted.response_values != full.response_values)
        throw Error(ErrorCode::MismatchedSamples,
                    fmt::format("'{}' and '{}' have different response values", restricted.label, full.label));
    if (!(restricted.rss > 0.0) || !(full.rss > 0.0))
        throw Error(ErrorCode::NonPositiveRSS, "likelihood ratio needs positive RSS on both models");
    r.statistic = restricted.rss == full.rss ? 0.0 : std::max(0.0, full.n * std::log(restricted.rss / full.rss));
    r.p_value = chi_square_sf(r.statistic, r.df);
    return r;
}

const CandidateScore& ModelComparison::score(const std::string& label) const {
    for (const auto& s : scores)
        if (s.label == label) return s;
    throw Error(ErrorCode::InvalidArgument, fmt::format("no candidate '{}'", label));
}

ModelComparison compare(const std::vector<CandidateModel>& candidates, const std::string& baseline) {
    if (candidates.size() < 2) throw Error(ErrorCode::InvalidArgument, "comparison needs at least two candidates");

    std::vector<const CandidateModel*> sorted;
    for (const auto& c : candidates) sorted.push_back(&c);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->label < b->label; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->label == sorted[i - 1]->label)
            throw Error(ErrorCode::DuplicateKey, fmt::format("duplicate candidate label '{}'", sorted[i]->label));

    const CandidateModel* base = nullptr;
    if (!baseline.empty()) {
        for (auto* c : sorted)
            if (c->label == baseline) base = c;
        if (!base) throw Error(ErrorCode::InvalidArgument, fmt::format("baseline '{}' is not a candidate", baseline));
    }

    ModelComparison out;
    out.baseline = baseline;
    for (auto* c : sorted) {
        CandidateScore s;
        s.label = c->label;
        try {
            s.aic = aic(c->n, c->rss, c->k_effective);
            s.bic = bic(c->n, c->rss, c->k_effective);
        } catch (const Error& e) {
            s.error = std::string(to_string(e.code()));
            s.aic.reset();
            s.bic.reset();
        }
        if (base && c != base && !s.error) {
            if (c->response != base->response) {
                out.warnings.push_back(fmt::format("'{}' models '{}' but the baseline models '{}'; no likelihood ratio",
                                                   c->label, c->response, base->response));
            } else {
                try {
                    s.lrt = likelihood_ratio(*base, *c);
                } catch (const Error& e) {
                    out.warnings.push_back(
                        fmt::format("no likelihood ratio for '{}': {}", c->label, to_string(e.code())));
                }
            }
        }
        out.scores.push_back(std::move(s));
    }

    // Scores are in label order, so strict comparisons keep the first label on ties.
    auto argmin = [&](auto value, auto tie_better) -> std::optional<std::string> {
        const CandidateScore* best = nullptr;
        for (const auto& s : out.scores) {
            auto v = value(s);
            if (!v) continue;
            if (!best) {
                best = &s;
                continue;
            }
            auto bv = *value(*best);
            if (*v < bv || (*v == bv && tie_better(s, *best))) best = &s;
        }
        return best ? std::optional<std::string>(best->label) : std::nullopt;
    };
    auto never = [](const CandidateScore&, const CandidateScore&) { return false; };

    out.winner_aic = argmin([](const CandidateScore& s) { return s.aic; }, never);
    out.winner_bic = argmin([](const CandidateScore& s) { return s.bic; }, never);
    out.winner_lrt = argmin(
        [](const CandidateScore& s) { return s.lrt ? std::optional<double>(s.lrt->p_value) : std::nullopt; },
        [](const CandidateScore& a, const CandidateScore& b) { return a.lrt->statistic > b.lrt->statistic; });

    std::map<std::string, int> wins;
    for (const auto& w : {out.winner_aic, out.winner_bic, out.winner_lrt})
        if (w) ++wins[*w];
    const CandidateScore* overall = nullptr;
    for (const auto& s : out.scores) {
        if (!wins.count(s.label)) continue;
        if (!overall) {
            overall = &s;
            continue;
        }
        const int a = wins[s.label], b = wins[overall->label];
        if (a > b || (a == b && *s.aic < *overall->aic)) overall = &s;
    }
    if (overall) out.overall_winner = overall->label;
    return out;
}

std::string comparison_to_csv(const ModelComparison& c) {
    std::string out = "model,lrt_stat,lrt_p,bic,aic\n";
    auto num = [](const std::optional<double>& v) { return v ? format_csv_number(*v) : std::string(); };
    for (const auto& s : c.scores) {
        std::optional<double> stat, p;
        if (s.lrt) {
            stat = s.lrt->statistic;
            p = s.lrt->p_value;
        }
        out += join_csv_line({s.label, num(stat), num(p), num(s.bic), num(s.aic)}) + '\n';
    }
    return out;
}

std::string comparison_to_json(const ModelComparison& c) {
    using json = nlohmann::ordered_json;
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    json models = json::array();
    for (const auto& s : c.scores) {
        json m = {{"model", s.label}, {"aic", opt(s.aic)}, {"bic", opt(s.bic)}};
        if (s.lrt) {
            m["lrt_stat"] = s.lrt->statistic;
            m["lrt_df"] = s.lrt->df;
            m["lrt_p"] = s.lrt->p_value;
        } else {
            m["lrt_stat"] = nullptr;
            m["lrt_df"] = nullptr;
            m["lrt_p"] = nullptr;
        }
        m["error"] = opt(s.error);
        models.push_back(std::move(m));
    }
    json j = {{"baseline", c.baseline},
              {"models", models},
              {"winner_aic", opt(c.winner_aic)},
              {"winner_bic", opt(c.winner_bic)},
              {"winner_lrt", opt(c.winner_lrt)},
              {"overall_winner", opt(c.overall_winner)},
              {"warnings", c.warnings}};
    return j.dump(2) + '\n';
}

}  // namespace nlight
