#include "evalcomp/eval_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

namespace evalcomp {

using nlohmann::json;

namespace {

// Counts strict inversions (i < j with v[i] > v[j]) by merge sort.
long long count_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                           std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    long long swaps = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
    std::size_t a = lo, b = mid, out = lo;
    while (a < mid && b < hi) {
        if (v[b] < v[a]) {
            swaps += static_cast<long long>(mid - a);
            scratch[out++] = v[b++];
        } else {
            scratch[out++] = v[a++];
        }
    }
    while (a < mid) scratch[out++] = v[a++];
    while (b < hi) scratch[out++] = v[b++];
    std::copy(scratch.begin() + lo, scratch.begin() + hi, v.begin() + lo);
    return swaps;
}

template <typename Key>
long long tie_pairs(std::vector<Key> values) {
    std::sort(values.begin(), values.end());
    long long total = 0;
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        const long long t = static_cast<long long>(j - i);
        total += t * (t - 1) / 2;
        i = j;
    }
    return total;
}

}  // namespace

double kendall_tau_b(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DegenerateInputError("kendall_tau_b: length mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw DegenerateInputError("kendall_tau_b: need at least 2 observations");

    const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
    const long long n1 = tie_pairs(xs);
    const long long n2 = tie_pairs(ys);
    if (n1 == n0 || n2 == n0)
        throw DegenerateInputError("kendall_tau_b: undefined when one side is all ties");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] != xs[b] ? xs[a] < xs[b] : ys[a] < ys[b];
    });

    std::vector<std::pair<double, double>> joint(n);
    std::vector<double> y_sorted(n);
    for (std::size_t i = 0; i < n; ++i) {
        joint[i] = {xs[order[i]], ys[order[i]]};
        y_sorted[i] = ys[order[i]];
    }
    const long long n3 = tie_pairs(std::move(joint));

    std::vector<double> scratch(n);
    const long long swaps = count_inversions(y_sorted, scratch, 0, n);

    const long long concordant_minus_discordant = n0 - n1 - n2 + n3 - 2 * swaps;
    return static_cast<double>(concordant_minus_discordant) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

std::map<std::string, MeanPair> system_scores(const std::vector<ScoredSegment>& segments) {
    std::map<std::string, MeanPair> sums;
    for (const auto& seg : segments) {
        auto& entry = sums[seg.system_id];
        entry.metric_mean += seg.metric_score;
        entry.human_mean += seg.human_score;
        ++entry.count;
    }
    for (auto& [_, entry] : sums) {
        entry.metric_mean /= static_cast<double>(entry.count);
        entry.human_mean /= static_cast<double>(entry.count);
    }
    return sums;
}

std::map<std::string, std::map<std::string, MeanPair>> system_scores_by_lang_pair(
    const std::vector<ScoredSegment>& segments) {
    std::map<std::string, std::vector<ScoredSegment>> by_lp;
    for (const auto& seg : segments) by_lp[seg.lang_pair].push_back(seg);
    std::map<std::string, std::map<std::string, MeanPair>> out;
    for (auto& [lp, segs] : by_lp) out[lp] = system_scores(segs);
    return out;
}

double pairwise_accuracy(const std::map<std::string, MeanPair>& systems, double epsilon) {
    if (systems.size() < 2) throw TooFewSystemsError();
    auto sign_of = [epsilon](double d) { return std::abs(d) <= epsilon ? 0 : (d > 0 ? 1 : -1); };
    long long agreements = 0, pairs = 0;
    for (auto i = systems.begin(); i != systems.end(); ++i) {
        for (auto j = std::next(i); j != systems.end(); ++j) {
            const int metric_sign = sign_of(i->second.metric_mean - j->second.metric_mean);
            const int human_sign = sign_of(i->second.human_mean - j->second.human_mean);
            agreements += metric_sign == human_sign ? 1 : 0;
            ++pairs;
        }
    }
    return static_cast<double>(agreements) / static_cast<double>(pairs);
}

// ── report ───────────────────────────────────────────────────────────

EvalReport build_report(const ReportInputs& inputs) {
    EvalReport report;
    report.label = inputs.label;
    report.counter_mode = inputs.counter_mode;

    report.total_tokens = inputs.extra_tokens;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_lp;
    for (const auto& seg : inputs.segments) {
        by_lp[seg.lang_pair].first.push_back(seg.metric_score);
        by_lp[seg.lang_pair].second.push_back(seg.human_score);
        report.total_tokens += seg.prompt_tokens;
    }
    for (const auto& [lp, cols] : by_lp) {
        try {
            report.per_lp_tau[lp] = kendall_tau_b(cols.first, cols.second);
        } catch (const DegenerateInputError&) {
            // undefined tau stays missing, not 0
        }
    }

    report.pairwise_accuracy = pairwise_accuracy(system_scores(inputs.segments));

    if (!inputs.baseline_tokens) throw MissingBaselineError();
    if (report.total_tokens <= 0) throw DegenerateInputError("run has zero prompt tokens");
    report.reduction_rate =
        static_cast<double>(*inputs.baseline_tokens) / static_cast<double>(report.total_tokens);
    report.baseline_label = inputs.baseline_label;
    report.estimated_cost = estimate_cost(report.total_tokens, inputs.price_per_million);
    return report;
}

std::string report_to_json(const EvalReport& report) {
    json taus = json::object();
    for (const auto& [lp, tau] : report.per_lp_tau) taus[lp] = tau;
    json j{{"label", report.label},
           {"per_lp_tau", taus},
           {"pairwise_accuracy", report.pairwise_accuracy},
           {"total_tokens", report.total_tokens},
           {"reduction_rate", report.reduction_rate},
           {"baseline_label", report.baseline_label},
           {"estimated_cost", report.estimated_cost.str()},
           {"counter_mode", report.counter_mode}};
    return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
    json j = json::parse(text);
    EvalReport report;
    report.label = j.at("label").get<std::string>();
    for (auto it = j.at("per_lp_tau").begin(); it != j.at("per_lp_tau").end(); ++it)
        report.per_lp_tau[it.key()] = it.value().get<double>();
    report.pairwise_accuracy = j.at("pairwise_accuracy").get<double>();
    report.total_tokens = j.at("total_tokens").get<long long>();
    report.reduction_rate = j.at("reduction_rate").get<double>();
    report.baseline_label = j.value("baseline_label", "");
    report.estimated_cost = Money::parse(j.at("estimated_cost").get<std::string>());
    report.counter_mode = j.value("counter_mode", "");
    return report;
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
    std::set<std::string> lps;
    for (const auto& r : reports)
        for (const auto& [lp, _] : r.per_lp_tau) lps.insert(lp);

    std::vector<std::string> headers = {"Run", "Token Usage", "Reduction Rate", "Pairwise Accuracy"};
    for (const auto& lp : lps) headers.push_back(lp + " tau");
    headers.push_back("Est. Cost");

    auto fmt = [](const char* spec, double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), spec, v);
        return std::string(buf);
    };

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        std::vector<std::string> row = {r.label, std::to_string(r.total_tokens),
                                        fmt("%.2f", r.reduction_rate),
                                        fmt("%.4f", r.pairwise_accuracy)};
        for (const auto& lp : lps) {
            auto it = r.per_lp_tau.find(lp);
            row.push_back(it == r.per_lp_tau.end() ? "-" : fmt("%.4f", it->second));
        }
        row.push_back("$" + r.estimated_cost.str());
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        widths[c] = headers[c].size();
        for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
    }

    std::string out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out += std::string(widths[c] - row[c].size() + 2, ' ');
        }
        out += "\n";
    };
    emit_row(headers);
    std::vector<std::string> rule;
    for (auto w : widths) rule.push_back(std::string(w, '-'));
    emit_row(rule);
    for (const auto& row : rows) emit_row(row);
    return out;
}

}  // namespace evalcomp
