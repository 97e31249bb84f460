#include "evalcomp/prompt_kit.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "evalcomp/compressor.hpp"
#include "evalcomp/errors.hpp"
#include "evalcomp/util.hpp"

namespace evalcomp {

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

bool ChatPrompt::valid() const {
    if (messages.size() < 2) return false;
    if (messages.front().role != Role::system) return false;
    if (messages.back().role != Role::user) return false;
    for (std::size_t i = 1; i < messages.size(); ++i) {
        Role expected = i % 2 == 1 ? Role::user : Role::assistant;
        if (messages[i].role != expected) return false;
    }
    return true;
}

std::string format_chat_prompt(const ChatPrompt& prompt) {
    std::string out;
    for (std::size_t i = 0; i < prompt.messages.size(); ++i) {
        if (i) out += "\n";
        out += "=== " + to_string(prompt.messages[i].role) + " ===\n";
        out += prompt.messages[i].content + "\n";
    }
    return out;
}

// ── templates ────────────────────────────────────────────────────────

namespace templates {

const char* const kClassicSystem =
    "You are an annotator for the quality of machine translation. Your task is to identify "
    "errors and assess the quality of the translation.";

const char* const kClassicUser =
    "{source_lang} source:\n"
    "```{source_seg}```\n"
    "{target_lang} translation:\n"
    "```{target_seg}```\n"
    "\n"
    "Based on the source segment and machine translation surrounded with triple backticks, "
    "identify error types in the translation and classify them. The categories of errors are: "
    "accuracy (addition, mistranslation, omission, untranslated text), fluency (character "
    "encoding, grammar, inconsistency, punctuation, register, spelling), style (awkward), "
    "terminology (inappropriate for context, inconsistent use), non-translation, other, or "
    "no-error.\n"
    "Each error is classified as one of three categories: critical, major, and minor. Critical "
    "errors inhibit comprehension of the text. Major errors disrupt the flow, but what the text "
    "is trying to say is still understandable. Minor errors are technically errors, but do not "
    "disrupt the flow or hinder comprehension.";

const char* const kLiteSystem = "Identify and categorize translation errors. Respond in JSON.";

const char* const kLiteUserFewshot =
    "{source_lang}: ```{source_seg}```\n"
    "{target_lang}: ```{target_seg}```;\n"
    "Errors?";

const char* const kLiteUserTarget =
    "{source_lang}: ```{source_seg}```\n"
    "{target_lang}: ```{target_seg}```\n"
    "Errors?";

}  // namespace templates

// ── few-shot examples ────────────────────────────────────────────────

const std::vector<FewShotExample>& stock_fewshots() {
    static const std::vector<FewShotExample> examples = {
        {
            "English",
            "German",
            "I do apologise about this, we must gain permission from the account holder to "
            "discuss an order with another person, I apologise if this was done previously, "
            "however, I would not be able to discuss this with yourself without the account "
            "holders permission.",
            "Ich entschuldige mich dafür, wir müssen die Erlaubnis einholen, um eine Bestellung "
            "mit einer anderen Person zu besprechen. Ich entschuldige mich, falls dies zuvor "
            "geschehen wäre, aber ohne die Erlaubnis des Kontoinhabers wäre ich nicht in der "
            "Lage, dies mit dir involvement.",
            "Critical:\n"
            "no-error\n"
            "Major:\n"
            "accuracy/mistranslation - \"involvement\"\n"
            "accuracy/omission - \"the account holder\"\n"
            "Minor:\n"
            "fluency/grammar - \"wäre\"\n"
            "fluency/register - \"dir\"",
            "{\"critical\": [\"no-error\"], \"major\": [{\"accuracy/mistranslation\": "
            "\"involvement\"}, {\"accuracy/omission\": \"the account holder\"}], \"minor\": "
            "[{\"fluency/grammar\": \"wäre\"}, {\"fluency/register\": \"dir\"}]}",
        },
        {
            "English",
            "Czech",
            "Talks have resumed in Vienna to try to revive the nuclear pact, with both sides "
            "trying to gauge the prospects of success after the latest exchanges in the "
            "stop-start negotiations.",
            "Ve Vídni se ve Vídni obnovily rozhovory o oživení jaderného paktu, přičemž obě "
            "partaje se snaží posoudit vyhlídky na úspěch po posledních výměnách v jednáních.",
            "Critical:\n"
            "no-error\n"
            "Major:\n"
            "accuracy/addition - \"ve Vídni\"\n"
            "accuracy/omission - \"the stop-start\"\n"
            "Minor:\n"
            "terminology/inappropriate for context - \"partaje\"",
            "{\"critical\": [\"no-error\"], \"major\": [{\"accuracy/addition\": \"ve Vídni\"}, "
            "{\"accuracy/omission\": \"the stop-start\"}], \"minor\": "
            "[{\"terminology/inappropriate for context\": \"partaje\"}]}",
        },
        {
            "Chinese",
            "English",
            "大众点评乌鲁木齐家居卖场频道为您提供高铁居然之家地址，电话，营业时间等最新商户信息，"
            "找装修公司，就上大众点评",
            "Urumqi Home Furnishing Store Channel provides you with the latest business "
            "information such as the address, telephone number, business hours, etc., of "
            "high-speed rail, and find a decoration company, and go to the reviews.",
            "Critical:\n"
            "accuracy/addition - \"of high-speed rail\"\n"
            "Major:\n"
            "accuracy/mistranslation - \"go to the reviews\"\n"
            "Minor:\n"
            "style/awkward - \"etc.,\"",
            "{\"critical\": [{\"accuracy/addition\": \"of high-speed rail\"}], \"major\": "
            "[{\"accuracy/mistranslation\": \"go to the reviews\"}], \"minor\": "
            "[{\"style/awkward\": \"etc.,\"}]}",
        },
    };
    return examples;
}

// ── rendering ────────────────────────────────────────────────────────

namespace {

// Streams the template, substituting each known {placeholder} once;
// substituted content is never re-scanned.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& fields) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                auto it = fields.find(std::string(tmpl.substr(i + 1, close - i - 1)));
                if (it != fields.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::map<std::string, std::string> fields_of(const std::string& source_lang,
                                             const std::string& target_lang,
                                             const std::string& source_seg,
                                             const std::string& target_seg) {
    return {{"source_lang", source_lang},
            {"target_lang", target_lang},
            {"source_seg", source_seg},
            {"target_seg", target_seg}};
}

void require_fields(const PromptTarget& t) {
    if (t.source_lang.empty() || t.target_lang.empty() || t.source_seg.empty() ||
        t.target_seg.empty())
        throw MissingFieldError("prompt target requires source_lang, target_lang, source_seg "
                                "and target_seg");
}

}  // namespace

ChatPrompt render_original(const PromptTarget& target, const std::vector<FewShotExample>& fewshots) {
    require_fields(target);
    ChatPrompt prompt;
    prompt.messages.push_back({Role::system, templates::kClassicSystem});
    for (const auto& fs : fewshots) {
        prompt.messages.push_back(
            {Role::user, substitute(templates::kClassicUser,
                                    fields_of(fs.source_lang, fs.target_lang, fs.source_seg,
                                              fs.target_seg))});
        prompt.messages.push_back({Role::assistant, fs.assistant_reply_classic});
    }
    prompt.messages.push_back(
        {Role::user, substitute(templates::kClassicUser,
                                fields_of(target.source_lang, target.target_lang,
                                          target.source_seg, target.target_seg))});
    return prompt;
}

ChatPrompt render_lite(const PromptTarget& target, const std::vector<FewShotExample>& fewshots) {
    require_fields(target);
    ChatPrompt prompt;
    prompt.messages.push_back({Role::system, templates::kLiteSystem});
    for (const auto& fs : fewshots) {
        prompt.messages.push_back(
            {Role::user, substitute(templates::kLiteUserFewshot,
                                    fields_of(fs.source_lang, fs.target_lang, fs.source_seg,
                                              fs.target_seg))});
        prompt.messages.push_back({Role::assistant, fs.assistant_reply_lite_json});
    }
    prompt.messages.push_back(
        {Role::user, substitute(templates::kLiteUserTarget,
                                fields_of(target.source_lang, target.target_lang,
                                          target.source_seg, target.target_seg))});
    return prompt;
}

std::string language_name(std::string_view code) {
    static const std::map<std::string_view, std::string_view> names = {
        {"en", "English"}, {"de", "German"},  {"cs", "Czech"},    {"zh", "Chinese"},
        {"ru", "Russian"}, {"ja", "Japanese"}, {"fr", "French"},   {"es", "Spanish"},
        {"uk", "Ukrainian"}, {"pl", "Polish"}, {"it", "Italian"},  {"pt", "Portuguese"},
        {"ko", "Korean"},  {"tr", "Turkish"},  {"hi", "Hindi"},    {"ar", "Arabic"},
        {"nl", "Dutch"},   {"fi", "Finnish"},  {"sv", "Swedish"},  {"da", "Danish"},
        {"no", "Norwegian"}, {"he", "Hebrew"}, {"is", "Icelandic"},
    };
    auto it = names.find(to_lower(code));
    if (it != names.end()) return std::string(it->second);
    return std::string(code);
}

// ── token counting ───────────────────────────────────────────────────

TokenCounter TokenCounter::builtin() {
    return TokenCounter{};
}

TokenCounter TokenCounter::from_merges_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw VocabError("cannot open merges file: " + path);
    TokenCounter counter;
    counter.mode = Mode::external_vocab;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.starts_with("#")) continue;
        auto parts = split(t, ' ');
        if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
            throw VocabError("malformed merge at line " + std::to_string(lineno) + ": '" +
                             std::string(t) + "'");
        counter.merges.emplace_back(std::string(parts[0]), std::string(parts[1]));
    }
    return counter;
}

std::string TokenCounter::mode_name() const {
    return mode == Mode::builtin_surface ? "builtin_surface" : "external_vocab";
}

namespace {

long long count_bpe_word(std::string_view word,
                         const std::vector<std::pair<std::string, std::string>>& merges) {
    // Symbols start as single codepoints.
    std::vector<std::string> symbols;
    std::size_t pos = 0;
    while (pos < word.size()) {
        std::size_t start = pos;
        utf8::decode_at(word, pos);
        symbols.emplace_back(word.substr(start, pos - start));
    }
    bool merged = true;
    while (merged && symbols.size() > 1) {
        merged = false;
        // Lowest-rank applicable merge wins each round.
        std::size_t best_rank = merges.size();
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            for (std::size_t r = 0; r < best_rank; ++r) {
                if (symbols[i] == merges[r].first && symbols[i + 1] == merges[r].second) {
                    best_rank = r;
                    break;
                }
            }
        }
        if (best_rank == merges.size()) break;
        const auto& [a, b] = merges[best_rank];
        std::vector<std::string> next;
        next.reserve(symbols.size());
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (i + 1 < symbols.size() && symbols[i] == a && symbols[i + 1] == b) {
                next.push_back(a + b);
                ++i;
                merged = true;
            } else {
                next.push_back(symbols[i]);
            }
        }
        symbols = std::move(next);
    }
    return static_cast<long long>(symbols.size());
}

}  // namespace

long long count_tokens(const std::string& text, const TokenCounter& counter) {
    if (counter.mode == TokenCounter::Mode::builtin_surface)
        return static_cast<long long>(tokenize_surface(text).size());
    long long total = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) total += count_bpe_word(std::string_view(text).substr(start, i - start),
                                               counter.merges);
    }
    return total;
}

long long count_tokens(const ChatPrompt& prompt, const TokenCounter& counter) {
    long long total = 0;
    for (const auto& m : prompt.messages) total += count_tokens(m.content, counter);
    return total;
}

}  // namespace evalcomp
