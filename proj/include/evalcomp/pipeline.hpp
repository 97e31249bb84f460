#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evalcomp/compressor.hpp"
#include "evalcomp/eval_stats.hpp"
#include "evalcomp/judge_client.hpp"
#include "evalcomp/money.hpp"
#include "evalcomp/mqm_corpus.hpp"
#include "evalcomp/preference_builder.hpp"
#include "evalcomp/prompt_kit.hpp"
#include "evalcomp/response_scoring.hpp"

namespace evalcomp {

// ── run configuration ────────────────────────────────────────────────

struct CorpusSource {
    std::string path;       // .jsonl (canonical) or .tsv (WMT-style)
    std::string lang_pair;  // required for .tsv inputs
};

struct CompressorConfig {
    enum class Kind { oracle, endpoint };
    Kind kind = Kind::oracle;
    std::string base_url;  // endpoint only; empty falls back to oracle
    std::string model = "compressor";
    bool allow_prefill = true;  // steer the endpoint with a "Rate = r" prefix
};

struct JudgeConfig {
    JudgeBackendKind backend = JudgeBackendKind::synthetic;
    std::string model = "judge";
    std::string base_url;
    std::string cache_dir;
    int max_concurrency = 4;
    int max_output_tokens = 512;
    SyntheticNoise noise;
    std::string mock_reply;  // empty -> canonical no-error reply
};

struct ScoringConfig {
    SeverityWeights weights;
    double invalid_fallback = -25.0;
    bool skip_invalid = false;
};

struct RunConfig {
    std::vector<CorpusSource> corpus;
    std::string out_dir = "out";
    std::string label = "run";
    std::uint64_t seed = 0;
    RateSet rate_set = RateSet::defaults();
    PromptKind prompt_kind = PromptKind::classic;
    CompressorConfig compressor;
    JudgeConfig judge;
    ScoringConfig scoring;
    std::string counter_mode = "builtin_surface";
    std::string vocab_path;  // external_vocab merges file
    Money price_per_million = Money::parse("10");
    std::string baseline_report;  // report.json of the reference run
    std::string baseline_label;
    std::optional<double> fixed_rate;  // evaluate: compress at this rate
    bool compress_fewshots = true;
    int fewshot_count = 3;
    bool drop_degenerate = false;

    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json(const std::string& text);

    // Throws ConfigError on missing paths, invalid rate set, etc.
    void validate_for(const std::string& command) const;
};

// ── shared plumbing ──────────────────────────────────────────────────

struct LoadedCorpus {
    Corpus corpus;
    std::vector<RowIssue> issues;
};

LoadedCorpus load_corpus(const std::vector<CorpusSource>& sources);

TokenCounter make_counter(const RunConfig& config);

// Judge client over the configured backend. The synthetic backend needs
// the corpus to look gold spans up by record key.
std::unique_ptr<JudgeClient> make_judge(const RunConfig& config, const Corpus& corpus);

// A compressor that yields a full prompt/completion example per record.
class CompressorBackend {
public:
    virtual ~CompressorBackend() = default;

    // requested_rate nullopt lets the backend choose (the oracle samples
    // from the configured rate set; an endpoint model decides itself).
    virtual CompressionExample compress_record(const SegmentRecord& record,
                                               std::optional<double> requested_rate) = 0;
};

// Span-preserving random removal per the Stage-One data rule.
class OracleCompressor final : public CompressorBackend {
public:
    OracleCompressor(RateSet rates, std::uint64_t seed);

    CompressionExample compress_record(const SegmentRecord& record,
                                       std::optional<double> requested_rate) override;

private:
    RateSet rates_;
    std::uint64_t seed_;
};

// Chat-completions endpoint speaking the SFT prompt/completion grammar.
class EndpointCompressor final : public CompressorBackend {
public:
    EndpointCompressor(const CompressorConfig& config, std::uint64_t seed);

    CompressionExample compress_record(const SegmentRecord& record,
                                       std::optional<double> requested_rate) override;

private:
    CompressorConfig config_;
    std::unique_ptr<HttpBackend> http_;
    std::uint64_t seed_;
};

// Endpoint when configured with a base URL, oracle otherwise.
std::unique_ptr<CompressorBackend> make_compressor(const RunConfig& config);

// ── commands ─────────────────────────────────────────────────────────
// Exit codes: 0 success, 1 data/runtime failure, 2 configuration error.

int cmd_build_sft(const RunConfig& config);
int cmd_build_preferences(const RunConfig& config);
int cmd_evaluate(const RunConfig& config, bool emit_table = false);
int cmd_report(const std::vector<std::string>& report_paths, bool emit_table);
int cmd_cache_inspect(const RunConfig& config);
int cmd_cache_clear(const RunConfig& config);

}  // namespace evalcomp
