#include "evalcomp/preference_builder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

namespace evalcomp {

using nlohmann::json;

namespace {

PromptTarget prompt_target_for(const SegmentRecord& record, const std::string& source_text,
                               const std::string& target_text) {
    auto codes = split(record.lang_pair, '-');
    PromptTarget target;
    target.source_lang = language_name(codes.empty() ? record.lang_pair : std::string(codes[0]));
    target.target_lang = language_name(codes.size() > 1 ? std::string(codes[1]) : "");
    target.source_seg = source_text;
    target.target_seg = target_text;
    return target;
}

}  // namespace

RateScores score_all_rates(const SegmentRecord& record, const RateSet& rates, JudgeClient& judge,
                           const ScoreAllOptions& options, std::uint64_t seed) {
    if (!rates.valid()) throw ConfigError("invalid rate set");
    RateScores out;

    for (double rate : rates.rates) {
        Rng rng = derive_rng(seed, record.key(), "rate=" + format_double(rate));
        auto [src_spans, tgt_spans] = extract_spans(record);

        RateEntry entry;
        entry.compressed_source = compress_text(record.source, src_spans, rate, rng);
        entry.compressed_target = compress_text(record.target, tgt_spans, rate, rng);

        std::vector<std::string> src_texts, tgt_texts;
        for (const auto& s : src_spans) src_texts.push_back(s.text);
        for (const auto& s : tgt_spans) tgt_texts.push_back(s.text);
        entry.completion_text =
            render_sft_completion(rate, src_texts, tgt_texts, entry.compressed_source.compressed,
                                  entry.compressed_target.compressed);

        // The reference rate judges the original texts, not their
        // detokenized form.
        const std::string& judged_source = rate == 1.0 ? record.source
                                                       : entry.compressed_source.compressed;
        const std::string& judged_target = rate == 1.0 ? record.target
                                                       : entry.compressed_target.compressed;

        PromptTarget target = prompt_target_for(record, judged_source, judged_target);
        JudgeRequest request;
        request.model = options.model;
        request.prompt = options.prompt_kind == PromptKind::classic
                             ? render_original(target, options.fewshots)
                             : render_lite(target, options.fewshots);
        request.temperature = 0.0;
        request.max_output_tokens = options.max_output_tokens;
        request.response_format = options.prompt_kind == PromptKind::lite ? ResponseFormat::json
                                                                          : ResponseFormat::text;
        request.record_key = record.key();

        JudgeResponse response = judge.complete(request);
        entry.score = score_reply(response.text, options.prompt_kind, options.weights,
                                  options.invalid_fallback);
        out.per_rate.emplace(rate, std::move(entry));
    }
    return out;
}

std::map<double, double> deltas(const RateScores& scores) {
    auto ref = scores.per_rate.find(1.0);
    if (ref == scores.per_rate.end()) throw MissingReferenceRateError();
    const double s_ref = ref->second.score.value;
    std::map<double, double> out;
    for (const auto& [rate, entry] : scores.per_rate)
        out[rate] = std::abs(entry.score.value - s_ref);
    return out;
}

PairSelection select_pair(const std::map<double, double>& delta_map) {
    if (delta_map.empty()) throw ConfigError("select_pair: empty delta map");
    PairSelection sel;
    double min_delta = 0.0, max_delta = 0.0;
    bool first = true;
    // Ascending rate order: strict < keeps the lowest rate among minima,
    // >= moves to the highest rate among maxima.
    for (const auto& [rate, delta] : delta_map) {
        if (first || delta < min_delta) {
            min_delta = delta;
            sel.chosen_rate = rate;
        }
        if (first || delta >= max_delta) {
            max_delta = delta;
            sel.rejected_rate = rate;
        }
        first = false;
    }
    return sel;
}

std::string preference_to_json(const PreferenceRecord& record) {
    json delta_obj = json::object();
    for (const auto& [rate, d] : record.deltas) delta_obj[format_double(rate)] = d;
    json j{{"record_key", record.record_key},
           {"prompt_text", record.prompt_text},
           {"chosen", {{"rate", record.chosen.rate}, {"completion", record.chosen.completion}}},
           {"rejected", {{"rate", record.rejected.rate}, {"completion", record.rejected.completion}}},
           {"deltas", delta_obj},
           {"reference_score", record.reference_score}};
    return j.dump();
}

PreferenceRecord preference_from_json(const std::string& line) {
    json j = json::parse(line);
    PreferenceRecord out;
    out.record_key = j.at("record_key").get<std::string>();
    out.prompt_text = j.at("prompt_text").get<std::string>();
    out.chosen.rate = j.at("chosen").at("rate").get<double>();
    out.chosen.completion = j.at("chosen").at("completion").get<std::string>();
    out.rejected.rate = j.at("rejected").at("rate").get<double>();
    out.rejected.completion = j.at("rejected").at("completion").get<std::string>();
    for (auto it = j.at("deltas").begin(); it != j.at("deltas").end(); ++it)
        out.deltas[std::stod(it.key())] = it.value().get<double>();
    out.reference_score = j.at("reference_score").get<double>();
    return out;
}

PreferenceBuildResult build_preference_dataset(const Corpus& corpus, JudgeClient& judge,
                                               const BuildPreferencesOptions& options) {
    PreferenceBuildResult result;

    struct Slot {
        std::optional<PreferenceRecord> record;
        std::optional<QuarantinedRecord> quarantine;
        bool degenerate = false;
        bool identical_pair = false;
    };
    std::vector<Slot> slots(corpus.records.size());

    auto process = [&](std::size_t i) {
        const SegmentRecord& record = corpus.records[i];
        Slot& slot = slots[i];
        if (auto err = validate(record)) {
            slot.quarantine = QuarantinedRecord{record.key(), "invalid record: " + *err};
            return;
        }
        try {
            RateScores scores =
                score_all_rates(record, options.rates, judge, options.scoring, options.seed);
            auto delta_map = deltas(scores);
            PairSelection sel = select_pair(delta_map);

            if (sel.chosen_rate == sel.rejected_rate) {
                slot.identical_pair = true;
                return;
            }
            const bool all_zero = std::all_of(delta_map.begin(), delta_map.end(),
                                              [](const auto& kv) { return kv.second == 0.0; });
            if (all_zero && options.drop_degenerate) {
                slot.degenerate = true;
                return;
            }

            PreferenceRecord pref;
            pref.record_key = record.key();
            pref.prompt_text = render_sft_prompt(record.source, record.target);
            pref.chosen = {sel.chosen_rate, scores.per_rate.at(sel.chosen_rate).completion_text};
            pref.rejected = {sel.rejected_rate, scores.per_rate.at(sel.rejected_rate).completion_text};
            pref.deltas = std::move(delta_map);
            pref.reference_score = scores.per_rate.at(1.0).score.value;
            slot.record = std::move(pref);
        } catch (const std::exception& e) {
            slot.quarantine = QuarantinedRecord{record.key(), e.what()};
        }
    };

    const int workers = std::max(1, std::min<int>(judge.max_concurrency(),
                                                  static_cast<int>(corpus.records.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < corpus.records.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= corpus.records.size()) return;
                process(i);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (auto& slot : slots) {
        if (slot.record) result.records.push_back(std::move(*slot.record));
        if (slot.quarantine) result.quarantined.push_back(std::move(*slot.quarantine));
        if (slot.identical_pair) ++result.skipped_identical_pair;
        if (slot.degenerate) ++result.skipped_degenerate;
    }
    std::sort(result.records.begin(), result.records.end(),
              [](const PreferenceRecord& a, const PreferenceRecord& b) {
                  return a.record_key < b.record_key;
              });
    std::sort(result.quarantined.begin(), result.quarantined.end(),
              [](const QuarantinedRecord& a, const QuarantinedRecord& b) {
                  return a.record_key < b.record_key;
              });
    return result;
}

}  // namespace evalcomp
