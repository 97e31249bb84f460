#include "evalcomp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

namespace evalcomp {

namespace fs = std::filesystem;
using nlohmann::json;

// ── run configuration ────────────────────────────────────────────────

namespace {

CompressorConfig compressor_from_json(const json& j) {
    CompressorConfig c;
    const std::string kind = j.value("kind", "oracle");
    if (kind == "oracle")
        c.kind = CompressorConfig::Kind::oracle;
    else if (kind == "endpoint")
        c.kind = CompressorConfig::Kind::endpoint;
    else
        throw ConfigError("compressor.kind must be 'oracle' or 'endpoint', got '" + kind + "'");
    c.base_url = j.value("base_url", "");
    c.model = j.value("model", "compressor");
    c.allow_prefill = j.value("allow_prefill", true);
    return c;
}

JudgeConfig judge_from_json(const json& j) {
    JudgeConfig c;
    const std::string backend = j.value("backend", "synthetic");
    if (backend == "http")
        c.backend = JudgeBackendKind::http;
    else if (backend == "mock")
        c.backend = JudgeBackendKind::mock;
    else if (backend == "synthetic")
        c.backend = JudgeBackendKind::synthetic;
    else
        throw ConfigError("judge.backend must be http, mock or synthetic, got '" + backend + "'");
    c.model = j.value("model", "judge");
    c.base_url = j.value("base_url", "");
    c.cache_dir = j.value("cache_dir", "");
    c.max_concurrency = j.value("max_concurrency", 4);
    c.max_output_tokens = j.value("max_output_tokens", 512);
    if (j.contains("noise")) {
        c.noise.span_drop_prob = j["noise"].value("span_drop_prob", 0.0);
        c.noise.severity_flip_prob = j["noise"].value("severity_flip_prob", 0.0);
    }
    c.mock_reply = j.value("mock_reply", "");
    return c;
}

ScoringConfig scoring_from_json(const json& j) {
    ScoringConfig c;
    if (j.contains("weights")) {
        const json& w = j["weights"];
        c.weights.minor = w.value("minor", 1.0);
        c.weights.major = w.value("major", 5.0);
        c.weights.critical = w.value("critical", 10.0);
        c.weights.cap = w.value("cap", 25.0);
    }
    c.invalid_fallback = j.value("invalid_fallback", -25.0);
    c.skip_invalid = j.value("skip_invalid", false);
    return c;
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");

    RunConfig config;
    if (j.contains("corpus")) {
        if (j["corpus"].is_string()) {
            config.corpus.push_back({j["corpus"].get<std::string>(), ""});
        } else {
            for (const auto& entry : j["corpus"]) {
                if (entry.is_string())
                    config.corpus.push_back({entry.get<std::string>(), ""});
                else
                    config.corpus.push_back(
                        {entry.at("path").get<std::string>(), entry.value("lang_pair", "")});
            }
        }
    }
    config.out_dir = j.value("out_dir", "out");
    config.label = j.value("label", "run");
    config.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("rate_set")) config.rate_set.rates = j["rate_set"].get<std::vector<double>>();
    config.prompt_kind = prompt_kind_from_string(j.value("prompt_kind", "classic"));
    if (j.contains("compressor")) config.compressor = compressor_from_json(j["compressor"]);
    if (j.contains("judge")) config.judge = judge_from_json(j["judge"]);
    if (j.contains("scoring")) config.scoring = scoring_from_json(j["scoring"]);
    config.counter_mode = j.value("counter_mode", "builtin_surface");
    config.vocab_path = j.value("vocab_path", "");
    config.price_per_million = Money::parse(j.value("price_per_million", "10"));
    config.baseline_report = j.value("baseline_report", "");
    config.baseline_label = j.value("baseline_label", "");
    if (j.contains("fixed_rate") && !j["fixed_rate"].is_null())
        config.fixed_rate = j["fixed_rate"].get<double>();
    config.compress_fewshots = j.value("compress_fewshots", true);
    config.fewshot_count = j.value("fewshot_count", 3);
    config.drop_degenerate = j.value("drop_degenerate", false);
    return config;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void RunConfig::validate_for(const std::string& command) const {
    if (!rate_set.valid())
        throw ConfigError("rate_set must be strictly increasing, within (0,1], and contain 1.0");
    if (!scoring.weights.valid())
        throw ConfigError("scoring.weights must satisfy 0 <= minor <= major <= critical, cap > 0");
    if (fixed_rate && (*fixed_rate <= 0.0 || *fixed_rate > 1.0))
        throw ConfigError("fixed rate must lie in (0, 1]");
    if (counter_mode != "builtin_surface" && counter_mode != "external_vocab")
        throw ConfigError("counter_mode must be builtin_surface or external_vocab");
    if (counter_mode == "external_vocab" && !fs::exists(vocab_path))
        throw ConfigError("external_vocab counter needs an existing vocab_path");
    if (fewshot_count < 0 || fewshot_count > static_cast<int>(stock_fewshots().size()))
        throw ConfigError("fewshot_count must be between 0 and " +
                          std::to_string(stock_fewshots().size()));

    const bool needs_corpus =
        command == "build-sft" || command == "build-preferences" || command == "evaluate";
    if (needs_corpus) {
        if (corpus.empty()) throw ConfigError("config has no corpus paths");
        for (const auto& src : corpus) {
            if (!fs::exists(src.path)) throw ConfigError("corpus path does not exist: " + src.path);
            if (fs::path(src.path).extension() == ".tsv" && src.lang_pair.empty())
                throw ConfigError("TSV corpus entries need a lang_pair: " + src.path);
        }
    }
    if (command == "cache" && judge.cache_dir.empty())
        throw ConfigError("cache command needs judge.cache_dir");
}

// ── shared plumbing ──────────────────────────────────────────────────

LoadedCorpus load_corpus(const std::vector<CorpusSource>& sources) {
    LoadedCorpus out;
    std::vector<std::string> names;
    for (const auto& src : sources) {
        std::ifstream in(src.path);
        if (!in) throw Error("cannot open corpus file: " + src.path);
        if (fs::path(src.path).extension() == ".tsv") {
            TsvParseResult parsed = parse_wmt_tsv(in, src.lang_pair);
            for (auto& rec : parsed.corpus.records) out.corpus.records.push_back(std::move(rec));
            for (auto& issue : parsed.issues) out.issues.push_back(std::move(issue));
        } else {
            Corpus corpus = read_jsonl(in, src.path);
            for (auto& rec : corpus.records) out.corpus.records.push_back(std::move(rec));
        }
        names.push_back(src.path);
    }
    std::string provenance;
    for (const auto& n : names) provenance += (provenance.empty() ? "" : ",") + n;
    out.corpus.provenance = provenance;

    std::set<std::string> keys;
    for (const auto& rec : out.corpus.records)
        if (!keys.insert(rec.key()).second)
            throw Error("duplicate record key in corpus: " + rec.key());
    return out;
}

TokenCounter make_counter(const RunConfig& config) {
    if (config.counter_mode == "external_vocab")
        return TokenCounter::from_merges_file(config.vocab_path);
    return TokenCounter::builtin();
}

std::unique_ptr<JudgeClient> make_judge(const RunConfig& config, const Corpus& corpus) {
    std::unique_ptr<JudgeBackend> backend;
    switch (config.judge.backend) {
        case JudgeBackendKind::http: {
            HttpBackendOptions options;
            options.base_url = config.judge.base_url;
            backend = std::make_unique<HttpBackend>(std::move(options));
            break;
        }
        case JudgeBackendKind::mock: {
            std::string reply = config.judge.mock_reply.empty()
                                    ? canonical_no_error_reply(config.prompt_kind)
                                    : config.judge.mock_reply;
            backend = MockBackend::returning(std::move(reply));
            break;
        }
        case JudgeBackendKind::synthetic:
            backend = std::make_unique<SyntheticBackend>(corpus, config.prompt_kind,
                                                         config.judge.noise, config.seed);
            break;
    }
    JudgeClientOptions options;
    options.cache_dir = config.judge.cache_dir;
    options.max_concurrency = config.judge.max_concurrency;
    return std::make_unique<JudgeClient>(std::move(backend), std::move(options),
                                         make_counter(config));
}

// ── compressor backends ──────────────────────────────────────────────

OracleCompressor::OracleCompressor(RateSet rates, std::uint64_t seed)
    : rates_(std::move(rates)), seed_(seed) {}

CompressionExample OracleCompressor::compress_record(const SegmentRecord& record,
                                                     std::optional<double> requested_rate) {
    const std::uint64_t rec_seed = derive_seed(seed_, record.key(), "compress");
    Rng rng(rec_seed);
    if (requested_rate) return build_example_at_rate(record, *requested_rate, rng, rec_seed);
    return build_sft_example(record, rng, rates_, rec_seed);
}

EndpointCompressor::EndpointCompressor(const CompressorConfig& config, std::uint64_t seed)
    : config_(config), seed_(seed) {
    HttpBackendOptions options;
    options.base_url = config.base_url;
    http_ = std::make_unique<HttpBackend>(std::move(options));
}

CompressionExample EndpointCompressor::compress_record(const SegmentRecord& record,
                                                       std::optional<double> requested_rate) {
    JudgeRequest request;
    request.model = config_.model;
    request.prompt.messages.push_back({Role::system, kSftSystemMessage});
    request.prompt.messages.push_back(
        {Role::user, render_sft_prompt(record.source, record.target)});
    std::string prefill;
    if (requested_rate && config_.allow_prefill) {
        // Steer the model toward the requested rate by prefilling the
        // first completion line.
        prefill = "Rate = " + format_double(*requested_rate) + "\n";
        request.prompt.messages.push_back({Role::assistant, prefill});
    }
    request.temperature = 0.0;
    request.record_key = record.key();

    JudgeResponse response = http_->call(request);
    SftCompletion completion = parse_sft_completion(prefill + response.text);
    if (requested_rate && completion.rate != *requested_rate)
        throw BackendUnavailableError("endpoint compressor returned rate " +
                                      format_double(completion.rate) + ", requested " +
                                      format_double(*requested_rate));

    // The model does not report kept indices; estimate the achieved rate
    // from surface token counts.
    auto achieved = [](const std::string& original, const std::string& compressed) {
        const auto total = tokenize_surface(original).size();
        if (total == 0) return 1.0;
        return static_cast<double>(tokenize_surface(compressed).size()) /
               static_cast<double>(total);
    };

    CompressionExample ex;
    ex.record_key = record.key();
    ex.seed = derive_seed(seed_, record.key(), "compress");
    ex.rate = completion.rate;
    ex.source_spans = completion.source_spans;
    ex.target_spans = completion.target_spans;
    ex.compressed_source.original = record.source;
    ex.compressed_source.compressed = completion.compressed_source;
    ex.compressed_source.requested_rate = completion.rate;
    ex.compressed_source.achieved_rate = achieved(record.source, completion.compressed_source);
    ex.compressed_target.original = record.target;
    ex.compressed_target.compressed = completion.compressed_target;
    ex.compressed_target.requested_rate = completion.rate;
    ex.compressed_target.achieved_rate = achieved(record.target, completion.compressed_target);
    ex.prompt_text = render_sft_prompt(record.source, record.target);
    ex.completion_text = prefill + response.text;
    return ex;
}

std::unique_ptr<CompressorBackend> make_compressor(const RunConfig& config) {
    if (config.compressor.kind == CompressorConfig::Kind::endpoint &&
        !config.compressor.base_url.empty())
        return std::make_unique<EndpointCompressor>(config.compressor, config.seed);
    return std::make_unique<OracleCompressor>(config.rate_set, config.seed);
}

// ── command helpers ──────────────────────────────────────────────────

namespace {

std::vector<FewShotExample> configured_fewshots(const RunConfig& config) {
    const auto& all = stock_fewshots();
    return {all.begin(), all.begin() + config.fewshot_count};
}

void print_issues(const std::vector<RowIssue>& issues) {
    if (issues.empty()) return;
    std::cerr << issues.size() << " corpus row(s) failed validation:\n";
    const std::size_t shown = std::min<std::size_t>(issues.size(), 10);
    for (std::size_t i = 0; i < shown; ++i)
        std::cerr << "  row " << issues[i].row << " [" << issues[i].kind << "] "
                  << issues[i].message << "\n";
    if (shown < issues.size()) std::cerr << "  ... " << issues.size() - shown << " more\n";
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Timestamps stay in this sidecar so artifacts remain byte-identical
// across reruns.
void write_run_log(const fs::path& out_dir, const std::string& command,
                   const std::vector<std::string>& lines) {
    std::ofstream log(out_dir / "run.log", std::ios::app);
    log << "[" << timestamp_now() << "] " << command << "\n";
    for (const auto& line : lines) log << "  " << line << "\n";
}

int find_codepoint_offset(const std::string& haystack, const std::string& needle) {
    auto pos = haystack.find(needle);
    if (pos == std::string::npos) return -1;
    return static_cast<int>(utf8::length(std::string_view(haystack).substr(0, pos)));
}

}  // namespace

// Locates the spans quoted in a few-shot example's reply so the oracle
// can keep them intact when compressing the example segments.
static std::vector<ErrorSpan> locate_fewshot_spans(const FewShotExample& fs) {
    std::vector<ErrorSpan> spans;
    ParsedErrors errors = parse_classic(fs.assistant_reply_classic);
    auto add_items = [&](const std::vector<ErrorItem>& items, Severity severity) {
        for (const auto& item : items) {
            if (!item.span_text || item.span_text->empty()) continue;
            ErrorSpan span;
            span.severity = severity;
            span.category = item.category;
            span.text = *item.span_text;
            int off = find_codepoint_offset(fs.target_seg, *item.span_text);
            if (off >= 0) {
                span.side = Side::target;
            } else {
                off = find_codepoint_offset(fs.source_seg, *item.span_text);
                if (off < 0) continue;
                span.side = Side::source;
            }
            span.start = off;
            span.end = off + static_cast<int>(utf8::length(*item.span_text));
            spans.push_back(std::move(span));
        }
    };
    add_items(errors.critical, Severity::critical);
    add_items(errors.major, Severity::major);
    add_items(errors.minor, Severity::minor);
    return spans;
}

// ── commands ─────────────────────────────────────────────────────────

int cmd_build_sft(const RunConfig& config) {
    config.validate_for("build-sft");
    LoadedCorpus loaded = load_corpus(config.corpus);
    print_issues(loaded.issues);

    fs::create_directories(config.out_dir);
    const fs::path out_path = fs::path(config.out_dir) / "sft.jsonl";
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Error("cannot write " + out_path.string());

    std::size_t written = 0;
    std::vector<QuarantinedRecord> quarantined;
    for (const auto& record : loaded.corpus.records) {
        if (auto err = validate(record)) {
            quarantined.push_back({record.key(), *err});
            continue;
        }
        const std::uint64_t rec_seed = derive_seed(config.seed, record.key(), "sft");
        Rng rng(rec_seed);
        try {
            CompressionExample ex =
                config.fixed_rate
                    ? build_example_at_rate(record, *config.fixed_rate, rng, rec_seed)
                    : build_sft_example(record, rng, config.rate_set, rec_seed);
            out << example_to_json(ex) << '\n';
            ++written;
        } catch (const EmptyTextError& e) {
            quarantined.push_back({record.key(), e.what()});
        }
    }

    std::cout << "records in: " << loaded.corpus.records.size() << "\n"
              << "examples out: " << written << "\n"
              << "quarantined: " << quarantined.size() << "\n";
    for (const auto& q : quarantined) std::cerr << "  quarantined " << q.record_key << ": " << q.reason << "\n";
    write_run_log(config.out_dir, "build-sft",
                  {"in=" + std::to_string(loaded.corpus.records.size()),
                   "out=" + std::to_string(written),
                   "quarantined=" + std::to_string(quarantined.size())});

    if (!loaded.corpus.records.empty() && written == 0) return 1;
    return 0;
}

int cmd_build_preferences(const RunConfig& config) {
    config.validate_for("build-preferences");
    LoadedCorpus loaded = load_corpus(config.corpus);
    print_issues(loaded.issues);

    auto judge = make_judge(config, loaded.corpus);

    BuildPreferencesOptions options;
    options.rates = config.rate_set;
    options.scoring.model = config.judge.model;
    options.scoring.prompt_kind = config.prompt_kind;
    options.scoring.weights = config.scoring.weights;
    options.scoring.invalid_fallback = config.scoring.invalid_fallback;
    options.scoring.fewshots = configured_fewshots(config);
    options.scoring.max_output_tokens = config.judge.max_output_tokens;
    options.seed = config.seed;
    options.drop_degenerate = config.drop_degenerate;

    PreferenceBuildResult result = build_preference_dataset(loaded.corpus, *judge, options);

    fs::create_directories(config.out_dir);
    const fs::path out_path = fs::path(config.out_dir) / "preferences.jsonl";
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Error("cannot write " + out_path.string());
    for (const auto& record : result.records) out << preference_to_json(record) << '\n';

    json report{{"records_in", loaded.corpus.records.size()},
                {"records_out", result.records.size()},
                {"skipped_identical_pair", result.skipped_identical_pair},
                {"skipped_degenerate", result.skipped_degenerate},
                {"quarantined", json::array()}};
    for (const auto& q : result.quarantined)
        report["quarantined"].push_back({{"record_key", q.record_key}, {"reason", q.reason}});
    std::ofstream report_out(fs::path(config.out_dir) / "preferences_report.json", std::ios::trunc);
    report_out << report.dump(2) << '\n';

    std::cout << "records in: " << loaded.corpus.records.size() << "\n"
              << "preference records out: " << result.records.size() << "\n"
              << "skipped (chosen == rejected): " << result.skipped_identical_pair << "\n"
              << "skipped (degenerate all-zero deltas): " << result.skipped_degenerate << "\n"
              << "quarantined: " << result.quarantined.size() << "\n";
    write_run_log(config.out_dir, "build-preferences",
                  {"in=" + std::to_string(loaded.corpus.records.size()),
                   "out=" + std::to_string(result.records.size()),
                   "quarantined=" + std::to_string(result.quarantined.size()),
                   "backend_calls=" + std::to_string(judge->backend_calls()),
                   "cache_hits=" + std::to_string(judge->cache_hits())});

    if (!loaded.corpus.records.empty() && result.records.empty() &&
        result.skipped_identical_pair + result.skipped_degenerate == 0)
        return 1;
    return 0;
}

int cmd_evaluate(const RunConfig& config, bool emit_table) {
    config.validate_for("evaluate");
    LoadedCorpus loaded = load_corpus(config.corpus);
    print_issues(loaded.issues);

    auto judge = make_judge(config, loaded.corpus);
    auto compressor = make_compressor(config);
    const bool endpoint_active = config.compressor.kind == CompressorConfig::Kind::endpoint &&
                                 !config.compressor.base_url.empty();
    const bool compression_active = config.fixed_rate.has_value() || endpoint_active;

    // Few-shot segments are compressed with the same compressor as the
    // target; their reply-quoted spans are protected.
    std::vector<FewShotExample> fewshots = configured_fewshots(config);
    if (compression_active && config.compress_fewshots) {
        int index = 0;
        for (auto& fs_example : fewshots) {
            SegmentRecord pseudo;
            pseudo.lang_pair = "fs";
            pseudo.system_id = "fewshot";
            pseudo.doc_id = "fewshot";
            pseudo.seg_id = index++;
            pseudo.source = fs_example.source_seg;
            pseudo.target = fs_example.target_seg;
            pseudo.spans = locate_fewshot_spans(fs_example);
            CompressionExample ex = compressor->compress_record(pseudo, config.fixed_rate);
            fs_example.source_seg = ex.compressed_source.compressed;
            fs_example.target_seg = ex.compressed_target.compressed;
        }
    }

    std::vector<const SegmentRecord*> scored_records;
    std::vector<JudgeRequest> requests;
    std::size_t missing_human = 0;
    std::size_t invalid_records = 0;
    for (const auto& record : loaded.corpus.records) {
        if (!record.human_score) {
            ++missing_human;
            continue;
        }
        if (validate(record)) {
            ++invalid_records;
            continue;
        }

        std::string source_text = record.source;
        std::string target_text = record.target;
        if (compression_active) {
            CompressionExample ex = compressor->compress_record(record, config.fixed_rate);
            source_text = ex.compressed_source.compressed;
            target_text = ex.compressed_target.compressed;
        }
        auto codes = split(record.lang_pair, '-');
        PromptTarget target;
        target.source_lang = language_name(codes.empty() ? record.lang_pair : std::string(codes[0]));
        target.target_lang = language_name(codes.size() > 1 ? std::string(codes[1]) : "");
        target.source_seg = source_text;
        target.target_seg = target_text;

        JudgeRequest request;
        request.model = config.judge.model;
        request.prompt = config.prompt_kind == PromptKind::classic
                             ? render_original(target, fewshots)
                             : render_lite(target, fewshots);
        request.temperature = 0.0;
        request.max_output_tokens = config.judge.max_output_tokens;
        request.response_format = config.prompt_kind == PromptKind::lite ? ResponseFormat::json
                                                                         : ResponseFormat::text;
        request.record_key = record.key();
        requests.push_back(std::move(request));
        scored_records.push_back(&record);
    }

    std::vector<BatchItem> batch = judge->complete_batch(requests);

    struct KeyedSegment {
        std::string record_key;
        ScoredSegment segment;
        bool valid = true;
    };
    std::vector<KeyedSegment> keyed;
    long long skipped_invalid_tokens = 0;
    std::size_t invalid_replies = 0;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const SegmentRecord& record = *scored_records[i];
        if (!batch[i].response) {
            failures.push_back(record.key() + ": " + batch[i].error);
            continue;
        }
        const JudgeResponse& response = *batch[i].response;
        MqmScore score = score_reply(response.text, config.prompt_kind, config.scoring.weights,
                                     config.scoring.invalid_fallback);
        if (!score.valid) ++invalid_replies;
        if (!score.valid && config.scoring.skip_invalid) {
            skipped_invalid_tokens += response.prompt_tokens;
            continue;
        }
        KeyedSegment ks;
        ks.record_key = record.key();
        ks.valid = score.valid;
        ks.segment = ScoredSegment{record.lang_pair, record.system_id, record.seg_id,
                                   score.value, *record.human_score, response.prompt_tokens};
        keyed.push_back(std::move(ks));
    }

    for (const auto& f : failures) std::cerr << "judge failure: " << f << "\n";

    // Every language pair must contribute at least one scored segment
    // (fallback-scored replies count; skipped ones do not).
    std::map<std::string, std::size_t> valid_per_lp;
    for (const auto& record : loaded.corpus.records)
        if (record.human_score) valid_per_lp.try_emplace(record.lang_pair, 0);
    for (const auto& ks : keyed) ++valid_per_lp[ks.segment.lang_pair];
    for (const auto& [lp, count] : valid_per_lp) {
        if (count == 0) {
            std::cerr << "language pair " << lp << " yielded zero valid scores\n";
            return 1;
        }
    }

    std::sort(keyed.begin(), keyed.end(),
              [](const KeyedSegment& a, const KeyedSegment& b) { return a.record_key < b.record_key; });

    ReportInputs inputs;
    inputs.label = config.label;
    for (const auto& ks : keyed) inputs.segments.push_back(ks.segment);
    inputs.extra_tokens = skipped_invalid_tokens;
    inputs.price_per_million = config.price_per_million;
    inputs.counter_mode = make_counter(config).mode_name();
    if (!config.baseline_report.empty()) {
        std::ifstream in(config.baseline_report);
        if (!in) throw ConfigError("cannot open baseline report: " + config.baseline_report);
        std::stringstream buf;
        buf << in.rdbuf();
        EvalReport baseline = report_from_json(buf.str());
        if (baseline.counter_mode != inputs.counter_mode)
            throw ConfigError("baseline counter_mode '" + baseline.counter_mode +
                              "' differs from this run's '" + inputs.counter_mode + "'");
        inputs.baseline_tokens = baseline.total_tokens;
        inputs.baseline_label = config.baseline_label.empty() ? baseline.label : config.baseline_label;
    } else {
        long long self_tokens = inputs.extra_tokens;
        for (const auto& seg : inputs.segments) self_tokens += seg.prompt_tokens;
        inputs.baseline_tokens = self_tokens;
        inputs.baseline_label = config.baseline_label.empty() ? config.label : config.baseline_label;
    }

    EvalReport report = build_report(inputs);

    fs::create_directories(config.out_dir);
    {
        std::ofstream out(fs::path(config.out_dir) / "report.json", std::ios::trunc);
        out << report_to_json(report) << '\n';
    }
    {
        std::ofstream out(fs::path(config.out_dir) / "report.txt", std::ios::trunc);
        out << format_report_table({report});
    }
    {
        std::ofstream out(fs::path(config.out_dir) / "segments.jsonl", std::ios::trunc);
        for (const auto& ks : keyed) {
            json j{{"record_key", ks.record_key},
                   {"lang_pair", ks.segment.lang_pair},
                   {"system_id", ks.segment.system_id},
                   {"seg_id", ks.segment.seg_id},
                   {"metric_score", ks.segment.metric_score},
                   {"human_score", ks.segment.human_score},
                   {"prompt_tokens", ks.segment.prompt_tokens},
                   {"valid", ks.valid}};
            out << j.dump() << '\n';
        }
    }

    std::cout << "segments judged: " << keyed.size() << "\n"
              << "invalid replies: " << invalid_replies << "\n"
              << "records without human score: " << missing_human << "\n"
              << "records failing validation: " << invalid_records << "\n"
              << "total prompt tokens: " << report.total_tokens << "\n"
              << "reduction rate vs " << report.baseline_label << ": ";
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", report.reduction_rate);
        std::cout << buf << "\n";
    }
    std::cout << "estimated cost: $" << report.estimated_cost.str() << "\n";
    if (emit_table) std::cout << format_report_table({report});

    write_run_log(config.out_dir, "evaluate",
                  {"segments=" + std::to_string(keyed.size()),
                   "tokens=" + std::to_string(report.total_tokens),
                   "backend_calls=" + std::to_string(judge->backend_calls()),
                   "cache_hits=" + std::to_string(judge->cache_hits())});

    if (!failures.empty() && keyed.empty()) return 1;
    return 0;
}

int cmd_report(const std::vector<std::string>& report_paths, bool emit_table) {
    std::vector<EvalReport> reports;
    for (const auto& path : report_paths) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open report: " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        reports.push_back(report_from_json(buf.str()));
    }
    if (reports.empty()) throw ConfigError("report command needs at least one report.json path");
    if (emit_table) {
        std::cout << format_report_table(reports);
    } else {
        for (const auto& r : reports) std::cout << report_to_json(r) << "\n";
    }
    return 0;
}

int cmd_cache_inspect(const RunConfig& config) {
    config.validate_for("cache");
    const fs::path dir = config.judge.cache_dir;
    std::size_t files = 0;
    std::uintmax_t bytes = 0;
    if (fs::exists(dir)) {
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            ++files;
            bytes += entry.file_size();
        }
    }
    std::cout << "cache dir: " << dir.string() << "\n"
              << "entries: " << files << "\n"
              << "bytes: " << bytes << "\n";
    return 0;
}

int cmd_cache_clear(const RunConfig& config) {
    config.validate_for("cache");
    const fs::path dir = config.judge.cache_dir;
    std::size_t removed = 0;
    if (fs::exists(dir)) {
        for (const auto& entry : fs::recursive_directory_iterator(dir))
            if (entry.is_regular_file()) ++removed;
        fs::remove_all(dir);
    }
    std::cout << "cleared " << removed << " cache entries\n";
    return 0;
}

}  // namespace evalcomp
