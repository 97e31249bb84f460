#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evalcomp/money.hpp"

namespace evalcomp {

enum class Role { system, user, assistant };

std::string to_string(Role r);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// system first, then user/assistant alternating, ending on user.
struct ChatPrompt {
    std::vector<ChatMessage> messages;

    bool valid() const;

    friend bool operator==(const ChatPrompt&, const ChatPrompt&) = default;
};

// Stable plain-text layout used for golden files and prompt dumps.
std::string format_chat_prompt(const ChatPrompt& prompt);

// ── few-shot examples ────────────────────────────────────────────────

struct FewShotExample {
    std::string source_lang;
    std::string target_lang;
    std::string source_seg;
    std::string target_seg;
    std::string assistant_reply_classic;
    std::string assistant_reply_lite_json;
};

// The three stock examples (En-De, En-Cs, Zh-En) shipped with the
// classic and lite templates.
const std::vector<FewShotExample>& stock_fewshots();

// ── rendering ────────────────────────────────────────────────────────

struct PromptTarget {
    std::string source_lang;
    std::string target_lang;
    std::string source_seg;
    std::string target_seg;
};

// Full MQM instruction template; the instruction paragraph repeats in
// every human message. Throws MissingFieldError on empty target fields.
ChatPrompt render_original(const PromptTarget& target, const std::vector<FewShotExample>& fewshots);

// One-line instruction, "Errors?" human messages, JSON assistant replies.
ChatPrompt render_lite(const PromptTarget& target, const std::vector<FewShotExample>& fewshots);

// Raw template text (exposed so the shipped template files and tests can
// pin the exact bytes).
namespace templates {
extern const char* const kClassicSystem;
extern const char* const kClassicUser;       // {source_lang} {source_seg} {target_lang} {target_seg}
extern const char* const kLiteSystem;
extern const char* const kLiteUserFewshot;   // fewshot variant (trailing ';' after the target fence)
extern const char* const kLiteUserTarget;
}  // namespace templates

// English language name for an ISO 639-1 code ("de" -> "German");
// unknown codes pass through unchanged.
std::string language_name(std::string_view code);

// ── token counting ───────────────────────────────────────────────────

struct TokenCounter {
    enum class Mode { builtin_surface, external_vocab };

    Mode mode = Mode::builtin_surface;
    // external_vocab: merge pairs in priority order, applied greedily to
    // codepoint symbols of each whitespace-separated word.
    std::vector<std::pair<std::string, std::string>> merges;

    static TokenCounter builtin();
    // One merge pair per line ("lo w" merges "lo"+"w"); VocabError on
    // malformed lines.
    static TokenCounter from_merges_file(const std::string& path);

    std::string mode_name() const;
};

long long count_tokens(const std::string& text, const TokenCounter& counter);
long long count_tokens(const ChatPrompt& prompt, const TokenCounter& counter);

}  // namespace evalcomp
