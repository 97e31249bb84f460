#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evalcomp/compressor.hpp"
#include "evalcomp/judge_client.hpp"
#include "evalcomp/mqm_corpus.hpp"
#include "evalcomp/response_scoring.hpp"

namespace evalcomp {

struct RateEntry {
    MqmScore score;
    std::string completion_text;
    CompressedText compressed_source;
    CompressedText compressed_target;
};

// One judged score per candidate rate; must contain the reference rate 1.0.
struct RateScores {
    std::map<double, RateEntry> per_rate;
};

struct ScoreAllOptions {
    std::string model = "judge";
    PromptKind prompt_kind = PromptKind::classic;
    SeverityWeights weights;
    double invalid_fallback = -25.0;
    std::vector<FewShotExample> fewshots;  // rendered uncompressed
    int max_output_tokens = 512;
};

// Compresses the record at every rate (1.0 judges the uncompressed
// texts), renders the evaluation prompt, and scores each judged reply.
// Judge errors propagate; callers quarantine the whole record.
RateScores score_all_rates(const SegmentRecord& record, const RateSet& rates,
                           JudgeClient& judge, const ScoreAllOptions& options,
                           std::uint64_t seed);

// Delta_r = |s_r - s_1.0| for every rate. Throws MissingReferenceRateError.
std::map<double, double> deltas(const RateScores& scores);

struct PairSelection {
    double chosen_rate = 1.0;
    double rejected_rate = 1.0;
};

// chosen = argmin delta, ties toward the lowest rate; rejected = argmax
// delta, ties toward the highest rate.
//
// Because delta at the reference rate is 0 by definition, the minimum is
// always 0, so chosen is effectively the lowest rate whose score matches
// the uncompressed score. When every delta is 0 this degenerates to
// chosen = lowest rate, rejected = 1.0; such records are kept unless
// drop_degenerate is set.
PairSelection select_pair(const std::map<double, double>& delta_map);

struct PreferenceRecord {
    std::string record_key;
    std::string prompt_text;  // the SFT compression prompt
    struct Completion {
        double rate = 1.0;
        std::string completion;
    };
    Completion chosen;
    Completion rejected;
    std::map<double, double> deltas;
    double reference_score = 0.0;  // s_1.0
};

std::string preference_to_json(const PreferenceRecord& record);
PreferenceRecord preference_from_json(const std::string& line);

struct BuildPreferencesOptions {
    RateSet rates = RateSet::defaults();
    ScoreAllOptions scoring;
    std::uint64_t seed = 0;
    bool drop_degenerate = false;  // drop records whose deltas are all zero
};

struct QuarantinedRecord {
    std::string record_key;
    std::string reason;
};

struct PreferenceBuildResult {
    std::vector<PreferenceRecord> records;  // ordered by record_key
    std::vector<QuarantinedRecord> quarantined;
    std::size_t skipped_identical_pair = 0;  // chosen rate == rejected rate
    std::size_t skipped_degenerate = 0;      // all-zero deltas under drop_degenerate
};

PreferenceBuildResult build_preference_dataset(const Corpus& corpus, JudgeClient& judge,
                                               const BuildPreferencesOptions& options);

}  // namespace evalcomp
