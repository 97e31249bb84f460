#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evalcomp/money.hpp"

namespace evalcomp {

struct ScoredSegment {
    std::string lang_pair;
    std::string system_id;
    int seg_id = 0;
    double metric_score = 0.0;  // <= 0 under MQM convention
    double human_score = 0.0;
    long long prompt_tokens = 0;
};

// Kendall tau-b with tie correction, O(n log n) (merge-sort inversion
// count). Throws DegenerateInputError when either side is all ties.
double kendall_tau_b(const std::vector<double>& xs, const std::vector<double>& ys);

struct MeanPair {
    double metric_mean = 0.0;
    double human_mean = 0.0;
    std::size_t count = 0;
};

// Arithmetic means per system over all its segments.
std::map<std::string, MeanPair> system_scores(const std::vector<ScoredSegment>& segments);

// Per (lang_pair, system) means.
std::map<std::string, std::map<std::string, MeanPair>> system_scores_by_lang_pair(
    const std::vector<ScoredSegment>& segments);

// Fraction of unordered system pairs where metric and human orderings
// agree; differences within `epsilon` count as ties, and only both-tied
// pairs count as agreement. Throws TooFewSystemsError below 2 systems.
double pairwise_accuracy(const std::map<std::string, MeanPair>& systems, double epsilon = 1e-9);

// ── report ───────────────────────────────────────────────────────────

struct EvalReport {
    std::string label;
    std::map<std::string, double> per_lp_tau;  // absent key = undefined tau
    double pairwise_accuracy = 0.0;
    long long total_tokens = 0;
    double reduction_rate = 1.0;  // baseline_tokens / total_tokens
    std::string baseline_label;
    Money estimated_cost;
    std::string counter_mode;
};

struct ReportInputs {
    std::string label;
    std::vector<ScoredSegment> segments;
    // Prompt tokens spent on judged segments excluded from the stats
    // (e.g. invalid replies under skip mode); still paid for.
    long long extra_tokens = 0;
    std::optional<long long> baseline_tokens;
    std::string baseline_label;
    Money price_per_million;
    std::string counter_mode;
};

// Aggregates per-lang-pair tau, system pairwise accuracy, token totals,
// reduction rate and cost. Throws MissingBaselineError when no baseline
// token count is supplied.
EvalReport build_report(const ReportInputs& inputs);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Aligned-column text table over one or more reports (token usage,
// reduction rate to 2 decimals, pairwise accuracy, per-lp tau columns).
std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace evalcomp
